// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ttt {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a value (range, norm, finiteness) was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The input is well-formed but geometrically degenerate (e.g. collinear points).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// The requested combination is recognised but not supported.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Bad or unreadable input data. Line is 1-based; 0 means "not line oriented".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ttt
