// SPDX-License-Identifier: Apache-2.0
#include "moescale/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "moescale/error.hpp"
#include "moescale/lbfgs.hpp"
#include "moescale/numeric.hpp"

namespace moescale {
namespace {

constexpr std::array<double, 3> kExponentSeeds{0.05, 0.25, 0.5};
constexpr std::array<double, 3> kMultiplierSeeds{30.0, 100.0, 300.0};
constexpr std::array<double, 3> kIrreducibleSeeds{0.5, 1.0, 2.0};
constexpr std::array<double, 3> kInteractionSeeds{-0.5, 0.0, 0.5};
constexpr double kSeedEStart = 2.0;
constexpr double kSeedEMax = 512.0;
constexpr std::size_t kMinRecords = 11;
constexpr std::size_t kMinGroupRecords = 5;

double observed_log_loss(const RunRecord& r) {
  if (!r.observed_loss) {
    throw Error(ErrorKind::ValidationError, "fitting needs observed losses; got a config-only record");
  }
  return std::log(*r.observed_loss);
}

auto record_key(const RunRecord& r) {
  return std::make_tuple(r.observed_loss.value_or(0.0), r.n_act, r.tokens, r.experts,
                         r.weight_override.value_or(-1.0));
}

// Canonical order so fits do not depend on input order.
std::vector<RunRecord> canonical(std::vector<RunRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const RunRecord& a, const RunRecord& b) { return record_key(a) < record_key(b); });
  return records;
}

unsigned thread_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

// Runs job(i) for i in [0, count) across threads; job writes into its own slot.
template <typename Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  const unsigned n = thread_count(threads, count);
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

LbfgsOptions lbfgs_options(const FitConfig& config) {
  LbfgsOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.history_size = config.history_size;
  opts.initial_step = config.step_size;
  opts.rel_tolerance = config.rel_tolerance;
  return opts;
}

void check_config(const FitConfig& config) {
  if (!(config.huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be positive");
  if (!(config.step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(config.weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

std::vector<Theta> seeds_for(const FitConfig& config) {
  std::vector<Theta> grid = config.init_grid.empty() ? init_grid() : config.init_grid;
  if (config.grid_sample > 0 && config.grid_sample < grid.size()) {
    grid = subsample_grid(grid, config.grid_sample, config.seed);
  }
  return grid;
}

// --- per-E Chinchilla model: (ln m, mu, ln n, nu, ln c) ---

constexpr std::size_t kChinchillaSize = 5;

double chinchilla_log_loss(std::span<const double> p, double log_n, double log_d,
                           std::span<double> grad) {
  const std::array<double, 3> t{p[0] + p[1] * log_n, p[2] + p[3] * log_d, p[4]};
  const double lse = numeric::logsumexp(t);
  if (!grad.empty()) {
    const double p1 = std::exp(t[0] - lse);
    const double p2 = std::exp(t[1] - lse);
    const double p3 = std::exp(t[2] - lse);
    grad[0] = p1;
    grad[1] = p1 * log_n;
    grad[2] = p2;
    grad[3] = p2 * log_d;
    grad[4] = p3;
  }
  return lse;
}

double chinchilla_rmse(std::span<const double> p, const std::vector<RunRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) {
    const double res = chinchilla_log_loss(p, std::log(static_cast<double>(r.n_act)),
                                           std::log(r.tokens), {}) -
                       observed_log_loss(r);
    sum += res * res;
  }
  return std::sqrt(sum / static_cast<double>(records.size()));
}

}  // namespace

Theta to_theta(const ScalingCoefficients& k) {
  return Theta{std::log(k.a), k.alpha, k.delta, k.gamma,       std::log(k.b),       k.beta,
               k.omega,       k.zeta,  std::log(k.c), std::log(k.e_start), std::log(k.e_max - k.e_start)};
}

ScalingCoefficients from_theta(const Theta& t) {
  ScalingCoefficients k;
  k.a = std::exp(t[kLogA]);
  k.alpha = t[kAlpha];
  k.delta = t[kDelta];
  k.gamma = t[kGamma];
  k.b = std::exp(t[kLogB]);
  k.beta = t[kBeta];
  k.omega = t[kOmega];
  k.zeta = t[kZeta];
  k.c = std::exp(t[kLogC]);
  k.e_start = std::exp(t[kLogEStart]);
  k.e_max = k.e_start + std::exp(t[kLogESpan]);
  return k;
}

double predict_log_loss(const Theta& theta, double log_n, double log_d, double experts,
                        std::span<double, kThetaSize> grad) {
  const double e_start = std::exp(theta[kLogEStart]);
  const double span = std::exp(theta[kLogESpan]);
  const double e_max = e_start + span;
  // offset = (1/e_start - 1/e_max)^-1, written without cancellation.
  const double offset = e_start * e_max / span;
  const double shifted = experts - 1.0 + offset;
  const double inv_e_hat = 1.0 / shifted + 1.0 / e_max;
  const double log_e = -std::log(inv_e_hat);

  const double n_exponent = theta[kAlpha] + theta[kGamma] * log_e;
  const double d_exponent = theta[kBeta] + theta[kZeta] * log_e;
  const std::array<double, 3> t{
      theta[kLogA] + theta[kDelta] * log_e + n_exponent * log_n,
      theta[kLogB] + theta[kOmega] * log_e + d_exponent * log_d,
      theta[kLogC],
  };
  const double lse = numeric::logsumexp(t);

  const double p1 = std::exp(t[0] - lse);
  const double p2 = std::exp(t[1] - lse);
  const double p3 = std::exp(t[2] - lse);
  grad[kLogA] = p1;
  grad[kAlpha] = p1 * log_n;
  grad[kDelta] = p1 * log_e;
  grad[kGamma] = p1 * log_e * log_n;
  grad[kLogB] = p2;
  grad[kBeta] = p2 * log_d;
  grad[kOmega] = p2 * log_e;
  grad[kZeta] = p2 * log_e * log_d;
  grad[kLogC] = p3;

  // Chain through log Ê = -ln(1/shifted + 1/e_max).
  const double d_pred_d_log_e =
      p1 * (theta[kDelta] + theta[kGamma] * log_n) + p2 * (theta[kOmega] + theta[kZeta] * log_d);
  const double d_inv_d_offset = -1.0 / (shifted * shifted);
  const double d_inv_d_emax = -1.0 / (e_max * e_max);
  const double d_offset_du = e_start * (2.0 * e_start + span) / span;
  const double d_offset_dv = -e_start * e_start / span;
  const double d_inv_du = d_inv_d_offset * d_offset_du + d_inv_d_emax * e_start;
  const double d_inv_dv = d_inv_d_offset * d_offset_dv + d_inv_d_emax * span;
  grad[kLogEStart] = d_pred_d_log_e * (-d_inv_du / inv_e_hat);
  grad[kLogESpan] = d_pred_d_log_e * (-d_inv_dv / inv_e_hat);
  return lse;
}

double predict_log_loss(const Theta& theta, double log_n, double log_d, double experts) {
  std::array<double, kThetaSize> scratch{};
  return predict_log_loss(theta, log_n, log_d, experts, scratch);
}

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_derivative(double r, double delta) {
  if (std::abs(r) <= delta) return r;
  return r > 0.0 ? delta : -delta;
}

std::vector<double> run_weights(const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records to weight");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    observed_log_loss(r);
    best = std::min(best, *r.observed_loss);
  }
  std::vector<double> w;
  w.reserve(records.size());
  for (const auto& r : records) {
    w.push_back(r.weight_override ? *r.weight_override : best / *r.observed_loss);
  }
  return w;
}

double objective(const Theta& theta, const std::vector<RunRecord>& records,
                 std::span<const double> weights, const FitConfig& config, std::span<double> grad) {
  if (weights.size() != records.size()) {
    throw std::invalid_argument("objective: weights and records differ in length");
  }
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  std::array<double, kThetaSize> g{};
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double pred = predict_log_loss(theta, std::log(static_cast<double>(r.n_act)),
                                         std::log(r.tokens), static_cast<double>(r.experts), g);
    const double res = pred - observed_log_loss(r);
    total += weights[i] * huber(res, config.huber_delta);
    if (want_grad) {
      const double scale = weights[i] * huber_derivative(res, config.huber_delta);
      for (std::size_t k = 0; k < kThetaSize; ++k) grad[k] += scale * g[k];
    }
  }
  for (std::size_t k = 0; k < kThetaSize; ++k) {
    if (k == kLogC && !config.decay_log_c) continue;
    total += config.weight_decay * theta[k] * theta[k];
    if (want_grad) grad[k] += 2.0 * config.weight_decay * theta[k];
  }
  return total;
}

std::vector<Theta> init_grid() {
  std::vector<Theta> grid;
  grid.reserve(19683);
  for (double alpha : kExponentSeeds)
    for (double beta : kExponentSeeds)
      for (double a : kMultiplierSeeds)
        for (double b : kMultiplierSeeds)
          for (double c : kIrreducibleSeeds)
            for (double delta : kInteractionSeeds)
              for (double gamma : kInteractionSeeds)
                for (double omega : kInteractionSeeds)
                  for (double zeta : kInteractionSeeds) {
                    Theta t{};
                    t[kLogA] = std::log(a);
                    t[kAlpha] = -alpha;
                    t[kDelta] = delta;
                    t[kGamma] = gamma;
                    t[kLogB] = std::log(b);
                    t[kBeta] = -beta;
                    t[kOmega] = omega;
                    t[kZeta] = zeta;
                    t[kLogC] = std::log(c);
                    t[kLogEStart] = std::log(kSeedEStart);
                    t[kLogESpan] = std::log(kSeedEMax - kSeedEStart);
                    grid.push_back(t);
                  }
  return grid;
}

std::vector<Theta> subsample_grid(const std::vector<Theta>& grid, std::size_t k, std::uint64_t seed) {
  if (k >= grid.size()) return grid;
  std::vector<std::size_t> idx(grid.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with explicit modulo so the draw is library-independent.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<Theta> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(grid[i]);
  return out;
}

double rmse(const Theta& theta, const std::vector<RunRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) {
    const double res = predict_log_loss(theta, std::log(static_cast<double>(r.n_act)),
                                        std::log(r.tokens), static_cast<double>(r.experts)) -
                       observed_log_loss(r);
    sum += res * res;
  }
  return std::sqrt(sum / static_cast<double>(records.size()));
}

double rmse_raw(const Theta& theta, const std::vector<RunRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) {
    const double res = std::exp(predict_log_loss(theta, std::log(static_cast<double>(r.n_act)),
                                                 std::log(r.tokens), static_cast<double>(r.experts))) -
                       std::exp(observed_log_loss(r));
    sum += res * res;
  }
  return std::sqrt(sum / static_cast<double>(records.size()));
}

HoldoutSplit split_holdout(const std::vector<RunRecord>& records, std::size_t validation_size) {
  if (records.size() <= validation_size) {
    throw Error(ErrorKind::TooFewRecords, "need more than " + std::to_string(validation_size) +
                                              " records for the holdout split, got " +
                                              std::to_string(records.size()));
  }
  std::vector<RunRecord> sorted = records;
  for (const auto& r : sorted) observed_log_loss(r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::make_tuple(*a.observed_loss, a.n_act, a.tokens, a.experts) <
           std::make_tuple(*b.observed_loss, b.n_act, b.tokens, b.experts);
  });
  HoldoutSplit split;
  split.validation.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(validation_size));
  split.train.assign(sorted.begin() + static_cast<std::ptrdiff_t>(validation_size), sorted.end());
  return split;
}

FitReport fit(const std::vector<RunRecord>& records, const FitConfig& config) {
  check_config(config);
  for (const auto& r : records) observed_log_loss(r);
  if (records.size() < kMinRecords) {
    throw Error(ErrorKind::Underdetermined,
                "need at least 11 records, got " + std::to_string(records.size()));
  }
  // Keep at least 11 training records when the dataset is small.
  const std::size_t holdout = std::min(config.validation_size, records.size() - kMinRecords);
  const auto split = holdout > 0 ? split_holdout(records, holdout)
                                 : HoldoutSplit{canonical(records), {}};
  const auto train = canonical(split.train);
  std::set<Count> distinct;
  for (const auto& r : train) distinct.insert(r.experts);
  if (distinct.size() < 2) {
    throw Error(ErrorKind::Underdetermined, "training records must span at least two expert counts");
  }

  const auto weights = config.weight_policy ? config.weight_policy(train) : run_weights(train);
  const auto seeds = seeds_for(config);
  const auto opts = lbfgs_options(config);

  struct Candidate {
    Theta theta{};
    double rmse_train = std::numeric_limits<double>::quiet_NaN();
    double rmse_val = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
  };
  std::vector<Candidate> candidates(seeds.size());

  parallel_for(seeds.size(), config.threads, [&](std::size_t i) {
    const GradientObjective f = [&](std::span<const double> x, std::span<double> g) {
      Theta t;
      std::copy(x.begin(), x.end(), t.begin());
      return objective(t, train, weights, config, g);
    };
    const auto res = lbfgs_minimize(f, std::vector<double>(seeds[i].begin(), seeds[i].end()), opts);
    if (!res.finite) return;
    Candidate c;
    std::copy(res.x.begin(), res.x.end(), c.theta.begin());
    c.rmse_train = rmse(c.theta, train);
    c.rmse_val = rmse(c.theta, split.validation);
    c.iterations = res.iterations;
    c.converged = res.converged;
    candidates[i] = c;
  });

  std::size_t best = seeds.size();
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double s = candidates[i].rmse_train + candidates[i].rmse_val;
    if (std::isfinite(s) && s < best_score) {
      best_score = s;
      best = i;
    }
  }
  if (best == seeds.size()) throw Error(ErrorKind::NonFinite, "optimizer diverged from every seed");

  const auto& win = candidates[best];
  FitReport report;
  report.theta = win.theta;
  report.coefficients = from_theta(win.theta);
  report.rmse_train = win.rmse_train;
  report.rmse_val = win.rmse_val;
  report.rmse_train_raw = rmse_raw(win.theta, train);
  report.rmse_val_raw = rmse_raw(win.theta, split.validation);
  report.score = win.rmse_train + win.rmse_val;
  report.converged = win.converged;
  report.iterations = win.iterations;
  report.seed_index = best;
  report.seeds_tried = seeds.size();
  report.train_size = train.size();
  report.validation_size = split.validation.size();
  report.per_record_residuals.reserve(records.size());
  for (const auto& r : records) {
    report.per_record_residuals.push_back(
        predict_log_loss(win.theta, std::log(static_cast<double>(r.n_act)), std::log(r.tokens),
                         static_cast<double>(r.experts)) -
        std::log(*r.observed_loss));
  }
  return report;
}

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["coefficients"] = nlohmann::ordered_json::parse(coefficients_to_json(report.coefficients));
  j["rmse_train"] = report.rmse_train;
  j["rmse_val"] = report.rmse_val;
  j["rmse_train_raw"] = report.rmse_train_raw;
  j["rmse_val_raw"] = report.rmse_val_raw;
  j["score"] = report.score;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["seed_index"] = report.seed_index;
  j["seeds_tried"] = report.seeds_tried;
  j["train_size"] = report.train_size;
  j["validation_size"] = report.validation_size;
  j["per_record_residuals"] = report.per_record_residuals;
  return j.dump(2);
}

SeparateFitReport fit_separate_chinchilla(const std::vector<RunRecord>& records,
                                          const FitConfig& config) {
  check_config(config);
  for (const auto& r : records) observed_log_loss(r);
  const std::size_t holdout =
      records.size() > kMinRecords ? std::min(config.validation_size, records.size() - kMinRecords) : 0;
  const auto split = holdout > 0 ? split_holdout(records, holdout)
                                 : HoldoutSplit{canonical(records), {}};

  std::map<Count, std::vector<RunRecord>> train_groups;
  std::map<Count, std::vector<RunRecord>> val_groups;
  for (const auto& r : canonical(split.train)) train_groups[r.experts].push_back(r);
  for (const auto& r : split.validation) val_groups[r.experts].push_back(r);
  for (const auto& [e, group] : val_groups) {
    if (!train_groups.count(e)) {
      throw Error(ErrorKind::Underdetermined,
                  "no training records for E=" + std::to_string(e) + " in the validation set");
    }
  }
  for (const auto& [e, group] : train_groups) {
    if (group.size() < kMinGroupRecords) {
      throw Error(ErrorKind::Underdetermined,
                  "E=" + std::to_string(e) + " has " + std::to_string(group.size()) +
                      " training records; need at least 5");
    }
  }

  // Seeds: the (α, β, A, B, C) projection of the joint grid.
  std::vector<std::array<double, kChinchillaSize>> seeds;
  for (double alpha : kExponentSeeds)
    for (double beta : kExponentSeeds)
      for (double a : kMultiplierSeeds)
        for (double b : kMultiplierSeeds)
          for (double c : kIrreducibleSeeds)
            seeds.push_back({std::log(a), -alpha, std::log(b), -beta, std::log(c)});
  if (config.grid_sample > 0 && config.grid_sample < seeds.size()) {
    std::vector<Theta> idx_grid(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) idx_grid[i][0] = static_cast<double>(i);
    const auto picked = subsample_grid(idx_grid, config.grid_sample, config.seed);
    std::vector<std::array<double, kChinchillaSize>> sub;
    for (const auto& p : picked) sub.push_back(seeds[static_cast<std::size_t>(p[0])]);
    seeds = std::move(sub);
  }
  const auto opts = lbfgs_options(config);

  SeparateFitReport report;
  double sse_train = 0.0;
  double sse_val = 0.0;
  for (const auto& [e, group] : train_groups) {
    const auto weights = config.weight_policy ? config.weight_policy(group) : run_weights(group);
    const auto& val = val_groups[e];
    std::vector<std::array<double, kChinchillaSize>> fitted(seeds.size());
    std::vector<double> score(seeds.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(seeds.size(), config.threads, [&](std::size_t i) {
      const GradientObjective f = [&](std::span<const double> x, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        std::array<double, kChinchillaSize> gi{};
        double total = 0.0;
        for (std::size_t k = 0; k < group.size(); ++k) {
          const auto& r = group[k];
          const double res = chinchilla_log_loss(x, std::log(static_cast<double>(r.n_act)),
                                                 std::log(r.tokens), gi) -
                             std::log(*r.observed_loss);
          total += weights[k] * huber(res, config.huber_delta);
          const double s = weights[k] * huber_derivative(res, config.huber_delta);
          for (std::size_t j = 0; j < kChinchillaSize; ++j) g[j] += s * gi[j];
        }
        for (std::size_t j = 0; j < kChinchillaSize; ++j) {
          if (j == 4 && !config.decay_log_c) continue;
          total += config.weight_decay * x[j] * x[j];
          g[j] += 2.0 * config.weight_decay * x[j];
        }
        return total;
      };
      const auto res = lbfgs_minimize(f, std::vector<double>(seeds[i].begin(), seeds[i].end()), opts);
      if (!res.finite) return;
      std::copy(res.x.begin(), res.x.end(), fitted[i].begin());
      score[i] = chinchilla_rmse(fitted[i], group) + chinchilla_rmse(fitted[i], val);
    });
    std::size_t best = seeds.size();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (std::isfinite(score[i]) && (best == seeds.size() || score[i] < score[best])) best = i;
    }
    if (best == seeds.size()) {
      throw Error(ErrorKind::NonFinite, "per-expert fit diverged for E=" + std::to_string(e));
    }
    const auto& p = fitted[best];
    report.per_expert[e] = ChinchillaCoefficients{std::exp(p[0]), p[1], std::exp(p[2]), p[3], std::exp(p[4])};
    const double rt = chinchilla_rmse(p, group);
    const double rv = chinchilla_rmse(p, val);
    sse_train += rt * rt * static_cast<double>(group.size());
    sse_val += rv * rv * static_cast<double>(val.size());
  }
  report.rmse_train = std::sqrt(sse_train / static_cast<double>(split.train.size()));
  report.rmse_val = split.validation.empty()
                        ? 0.0
                        : std::sqrt(sse_val / static_cast<double>(split.validation.size()));
  return report;
}

LrRule fit_lr_rule(const std::vector<LrObservation>& points) {
  std::set<double> ns;
  std::set<double> es;
  for (const auto& p : points) {
    if (!(p.n_act_nonemb > 0.0) || !(p.experts >= 1.0) || !(p.best_lr > 0.0)) {
      throw std::invalid_argument("learning-rate points must be positive with experts >= 1");
    }
    ns.insert(p.n_act_nonemb);
    es.insert(p.experts);
  }
  if (points.size() < 3 || ns.size() < 2) {
    throw Error(ErrorKind::Underdetermined, "need at least 3 points spanning 2 model sizes");
  }
  const bool with_experts = es.size() >= 2;
  const Eigen::Index cols = with_experts ? 3 : 2;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(points.size()), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = 1.0;
    x(row, 1) = std::log(points[i].n_act_nonemb);
    if (with_experts) x(row, 2) = std::log(points[i].experts);
    y(row) = std::log(points[i].best_lr);
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  LrRule rule;
  rule.intercept = beta(0);
  rule.n_slope = beta(1);
  rule.e_slope = with_experts ? beta(2) : 0.0;
  return rule;
}

}  // namespace moescale
