// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moescale {

enum class ErrorKind {
  NoRoot,
  InvalidCoefficients,
  DegenerateExponents,
  Infeasible,
  NoCrossing,
  Underdetermined,
  NonFinite,
  TooFewRecords,
  EmptyDataset,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Domain error raised by every module. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Text-input error carrying a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace moescale
