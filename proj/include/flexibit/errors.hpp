// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace flexibit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed format string, word length mismatch, container narrower than element.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operands exceed a PE register or primitive-register partition.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent control signals (bad OID runs, mode/operand mismatch).
class ControlError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexibit
