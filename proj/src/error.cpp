// SPDX-License-Identifier: Apache-2.0
#include "moescale/error.hpp"

namespace moescale {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::InvalidCoefficients: return "InvalidCoefficients";
    case ErrorKind::DegenerateExponents: return "DegenerateExponents";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NoCrossing: return "NoCrossing";
    case ErrorKind::Underdetermined: return "Underdetermined";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : Error(ErrorKind::ParseError,
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

}  // namespace moescale
