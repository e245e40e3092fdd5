// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moescale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming a coefficients JSON file used when
/// --coefficients is absent.
inline constexpr const char* kCoefficientsEnv = "MOESCALE_COEFFICIENTS";

/// Parses a byte count such as "80GB", "24 GiB", "640e9" or "1.5TB".
/// Decimal (GB) and binary (GiB) suffixes are both accepted; a bare number is bytes.
double parse_memory(const std::string& text);

/// Runs one invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace moescale::cli
