// SPDX-License-Identifier: Apache-2.0
#include "moescale/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "moescale/error.hpp"

namespace moescale {

namespace detail {
// Defined in the generated bundled_data.cpp.
extern const char* const kExperimentGridCsv;
}  // namespace detail

namespace {

const std::vector<std::string> kColumns{"n_total", "n_heads", "n_blocks", "d_model", "n_act",
                                        "experts", "tokens",  "loss",     "weight"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Quantity {
  double value;
  double half_unit;  // half of one unit in the last displayed digit
};

std::optional<Quantity> parse_quantity(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double multiplier = 1.0;
  switch (text.back()) {
    case 'K': multiplier = 1e3; break;
    case 'M': multiplier = 1e6; break;
    case 'B': multiplier = 1e9; break;
    default: break;
  }
  if (multiplier != 1.0) text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  std::string_view mantissa = text;
  int exponent = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    const auto exp_text = text.substr(e + 1);
    std::from_chars(exp_text.data() + (exp_text.starts_with('+') ? 1 : 0),
                    exp_text.data() + exp_text.size(), exponent);
  }
  int decimals = 0;
  if (const auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    decimals = static_cast<int>(mantissa.size() - dot - 1);
  }
  return Quantity{value * multiplier, 0.5 * std::pow(10.0, exponent - decimals) * multiplier};
}

// Cell text with its 1-based position.
struct Cell {
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::vector<std::vector<Cell>> split_csv(std::string_view text) {
  std::vector<std::vector<Cell>> rows;
  std::vector<Cell> row;
  Cell cell{"", 1, 1};
  std::size_t line = 1;
  std::size_t column = 1;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text.push_back('"');
          ++i;
          ++column;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') {
          ++line;
          column = 0;
        }
        cell.text.push_back(ch);
      }
      ++column;
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(cell));
        cell = Cell{"", line, column + 1};
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !cell.text.empty()) {
          row.push_back(std::move(cell));
          rows.push_back(std::move(row));
        }
        row.clear();
        row_has_content = false;
        ++line;
        column = 0;
        cell = Cell{"", line, 1};
        break;
      default:
        cell.text.push_back(ch);
        row_has_content = true;
    }
    ++column;
  }
  if (quoted) throw ParseError(line, column, "unterminated quoted field");
  if (row_has_content || !cell.text.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(trim(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Field values gathered from one CSV row or JSON object before validation.
struct RawRow {
  std::map<std::string, Quantity> numbers;
  std::vector<double> tokens;
};

void check_count(const char* field, const std::optional<Quantity>& shown, Count exact) {
  if (!shown) return;
  const double diff = std::abs(shown->value - static_cast<double>(exact));
  if (diff > shown->half_unit * (1.0 + 1e-9)) {
    std::ostringstream msg;
    msg << field << ": displayed value " << shown->value << " disagrees with the exact count "
        << exact << " implied by the shape";
    throw Error(ErrorKind::ValidationError, msg.str());
  }
}

Count as_count(const char* field, const Quantity& q) {
  if (q.value < 0 || q.value > 1.8e19 || std::floor(q.value) != q.value) {
    throw Error(ErrorKind::ValidationError, std::string(field) + ": expected a non-negative integer");
  }
  return static_cast<Count>(q.value);
}

std::vector<RunRecord> build_records(const RawRow& raw) {
  auto get = [&](const char* key) -> std::optional<Quantity> {
    if (auto it = raw.numbers.find(key); it != raw.numbers.end()) return it->second;
    return std::nullopt;
  };
  RunRecord base;
  const auto experts = get("experts");
  if (!experts) throw Error(ErrorKind::ValidationError, "experts: missing");
  base.experts = as_count("experts", *experts);
  if (base.experts == 0) throw Error(ErrorKind::ValidationError, "experts: must be >= 1");

  const auto d_model = get("d_model");
  const auto n_blocks = get("n_blocks");
  const auto n_heads = get("n_heads");
  if (d_model || n_blocks || n_heads) {
    if (!d_model || !n_blocks) {
      throw Error(ErrorKind::ValidationError, "d_model/n_blocks: shape needs both fields");
    }
    ModelShape shape;
    shape.d_model = as_count("d_model", *d_model);
    shape.n_blocks = as_count("n_blocks", *n_blocks);
    shape.n_heads = n_heads ? as_count("n_heads", *n_heads) : shape.n_blocks;
    shape.experts = base.experts;
    if (shape.d_model == 0 || shape.n_blocks == 0 || shape.n_heads == 0) {
      throw Error(ErrorKind::ValidationError, "shape: fields must be positive");
    }
    base.shape = shape;
    base.n_act = active_params(shape);
    base.n_total = total_params(shape);
    check_count("n_act", get("n_act"), base.n_act);
    check_count("n_total", get("n_total"), base.n_total);
  } else {
    const auto n_act = get("n_act");
    if (!n_act) throw Error(ErrorKind::ValidationError, "n_act: required when no shape is given");
    base.n_act = static_cast<Count>(std::llround(n_act->value));
    if (const auto n_total = get("n_total")) {
      base.n_total = static_cast<Count>(std::llround(n_total->value));
    } else if (base.experts == 1) {
      base.n_total = base.n_act;
    } else {
      throw Error(ErrorKind::ValidationError, "n_total: required for MoE rows without a shape");
    }
  }
  if (const auto l = get("loss")) base.observed_loss = l->value;
  if (const auto w = get("weight")) base.weight_override = w->value;

  if (raw.tokens.empty()) throw Error(ErrorKind::ValidationError, "tokens: missing");
  std::vector<RunRecord> out;
  out.reserve(raw.tokens.size());
  for (double t : raw.tokens) {
    RunRecord r = base;
    r.tokens = t;
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunRecord> parse_csv(std::string_view text) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw ParseError(1, 1, "missing header row");
  const auto& header = rows.front();
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& cell : header) {
    const std::string name(trim(cell.text));
    if (std::find(kColumns.begin(), kColumns.end(), name) == kColumns.end()) {
      throw ParseError(cell.line, cell.column, "unknown column '" + name + "'");
    }
    if (!seen.insert(name).second) {
      throw ParseError(cell.line, cell.column, "duplicate column '" + name + "'");
    }
    names.push_back(name);
  }
  if (!seen.count("tokens") || !seen.count("experts")) {
    throw ParseError(1, 1, "header must name at least 'experts' and 'tokens'");
  }

  std::vector<RunRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != names.size()) {
      throw ParseError(row.front().line, row.back().column,
                       "expected " + std::to_string(names.size()) + " fields, found " +
                           std::to_string(row.size()));
    }
    RawRow raw;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& cell = row[c];
      const auto value = trim(cell.text);
      if (value.empty()) continue;
      if (names[c] == "tokens") {
        for (auto item : split_list(value)) {
          const auto q = parse_quantity(item);
          if (!q) throw ParseError(cell.line, cell.column, "bad token count '" + std::string(item) + "'");
          raw.tokens.push_back(q->value);
        }
        continue;
      }
      const auto q = parse_quantity(value);
      if (!q) {
        throw ParseError(cell.line, cell.column,
                         "bad number '" + std::string(value) + "' in column " + names[c]);
      }
      raw.numbers.emplace(names[c], *q);
    }
    try {
      auto built = build_records(raw);
      records.insert(records.end(), built.begin(), built.end());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ValidationError) throw;
      throw Error(ErrorKind::ValidationError,
                  "line " + std::to_string(row.front().line) + ": " + e.what());
    }
  }
  return records;
}

std::optional<Quantity> json_quantity(const nlohmann::json& v) {
  if (v.is_number()) return Quantity{v.get<double>(), 0.5};
  if (v.is_string()) return parse_quantity(v.get<std::string>());
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::vector<RunRecord> parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(line, column, e.what());
  }
  if (!doc.is_array()) throw ParseError(1, 1, "expected a JSON array of run objects");
  std::vector<RunRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (!obj.is_object()) throw Error(ErrorKind::ValidationError, where + "expected an object");
    RawRow raw;
    for (const auto& [key, value] : obj.items()) {
      if (std::find(kColumns.begin(), kColumns.end(), key) == kColumns.end()) {
        throw Error(ErrorKind::ValidationError, where + "unknown field '" + key + "'");
      }
      if (value.is_null()) continue;
      if (key == "tokens") {
        const auto items = value.is_array() ? value : nlohmann::json::array({value});
        for (const auto& item : items) {
          const auto q = json_quantity(item);
          if (!q) throw Error(ErrorKind::ValidationError, where + "tokens: bad value");
          raw.tokens.push_back(q->value);
        }
        continue;
      }
      const auto q = json_quantity(value);
      if (!q) throw Error(ErrorKind::ValidationError, where + key + ": bad value");
      raw.numbers.emplace(key, *q);
    }
    try {
      auto built = build_records(raw);
      records.insert(records.end(), built.begin(), built.end());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ValidationError) throw;
      throw Error(ErrorKind::ValidationError, where + e.what());
    }
  }
  return records;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::optional<double> parse_suffixed(std::string_view text) {
  if (auto q = parse_quantity(text)) return q->value;
  return std::nullopt;
}

void validate_record(const RunRecord& r, Count vocab) {
  if (r.experts == 0) throw Error(ErrorKind::ValidationError, "experts: must be >= 1");
  if (!(r.tokens > 0.0) || !std::isfinite(r.tokens)) {
    throw Error(ErrorKind::ValidationError, "tokens: must be positive");
  }
  if (r.observed_loss && !(*r.observed_loss > 0.0 && std::isfinite(*r.observed_loss))) {
    throw Error(ErrorKind::ValidationError, "loss: must be positive");
  }
  if (r.weight_override && !(*r.weight_override >= 0.0)) {
    throw Error(ErrorKind::ValidationError, "weight: must be non-negative");
  }
  if (r.n_act == 0) throw Error(ErrorKind::ValidationError, "n_act: must be positive");
  if (r.n_total < r.n_act) throw Error(ErrorKind::ValidationError, "n_total: smaller than n_act");
  if (r.shape) {
    if (r.shape->experts != r.experts) {
      throw Error(ErrorKind::ValidationError, "experts: disagrees with the shape");
    }
    if (r.n_act != active_params(*r.shape, vocab)) {
      throw Error(ErrorKind::ValidationError, "n_act: inconsistent with the shape");
    }
    if (r.n_total != total_params(*r.shape, vocab)) {
      throw Error(ErrorKind::ValidationError, "n_total: inconsistent with the shape");
    }
  }
}

std::vector<RunRecord> parse_runs(std::string_view text, RunFormat format) {
  return format == RunFormat::Csv ? parse_csv(text) : parse_json(text);
}

std::string serialize_runs(const std::vector<RunRecord>& records, RunFormat format) {
  if (format == RunFormat::Json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
      nlohmann::ordered_json o;
      o["n_total"] = r.n_total;
      if (r.shape) {
        o["n_heads"] = r.shape->n_heads;
        o["n_blocks"] = r.shape->n_blocks;
        o["d_model"] = r.shape->d_model;
      }
      o["n_act"] = r.n_act;
      o["experts"] = r.experts;
      o["tokens"] = r.tokens;
      if (r.observed_loss) o["loss"] = *r.observed_loss;
      if (r.weight_override) o["weight"] = *r.weight_override;
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::string out = "n_total,n_heads,n_blocks,d_model,n_act,experts,tokens,loss,weight\n";
  for (const auto& r : records) {
    out += std::to_string(r.n_total) + ",";
    if (r.shape) {
      out += std::to_string(r.shape->n_heads) + "," + std::to_string(r.shape->n_blocks) + "," +
             std::to_string(r.shape->d_model) + ",";
    } else {
      out += ",,,";
    }
    out += std::to_string(r.n_act) + "," + std::to_string(r.experts) + "," + format_double(r.tokens) + ",";
    if (r.observed_loss) out += format_double(*r.observed_loss);
    out += ",";
    if (r.weight_override) out += format_double(*r.weight_override);
    out += "\n";
  }
  return out;
}

std::string_view bundled_experiment_grid_csv() { return detail::kExperimentGridCsv; }

std::vector<RunRecord> bundled_experiment_grid() {
  return parse_runs(bundled_experiment_grid_csv(), RunFormat::Csv);
}

std::vector<RunRecord> synthesize(const std::vector<RunRecord>& grid,
                                  const ScalingCoefficients& coeffs, double noise_sigma,
                                  std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<RunRecord> out = grid;
  for (auto& r : out) {
    const double truth = loss(static_cast<double>(r.n_act), r.tokens, static_cast<double>(r.experts), coeffs);
    const double eps = noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0;
    r.observed_loss = noise_sigma > 0.0 ? std::exp(std::log(truth) + eps) : truth;
  }
  return out;
}

}  // namespace moescale
