// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <string>

namespace flexibit {

using BigUInt = boost::multiprecision::cpp_int;
/// Signed arbitrary-width integer (same type, used where negative values occur).
using BigInt = boost::multiprecision::cpp_int;

/// Lossless dyadic rational: (-1)^sign * significand * 2^exp2.
/// Kept canonical: the significand is odd, or zero with sign = 0 and exp2 = 0,
/// so structural equality is numeric equality.
class ExactNumber {
 public:
  ExactNumber() = default;
  ExactNumber(bool sign, BigUInt significand, std::int64_t exp2);

  static ExactNumber from_int(std::int64_t v);
  /// Exact conversion of a finite double.
  static ExactNumber from_double(double v);

  bool sign() const { return sign_; }
  const BigUInt& significand() const { return significand_; }
  std::int64_t exp2() const { return exp2_; }
  bool is_zero() const { return significand_ == 0; }

  /// Index of the leading one, i.e. floor(log2 |v|). Undefined for zero.
  std::int64_t magnitude_exponent() const;

  double to_double() const;
  std::string to_string() const;

  ExactNumber operator-() const;
  friend ExactNumber operator+(const ExactNumber& a, const ExactNumber& b);
  friend ExactNumber operator-(const ExactNumber& a, const ExactNumber& b) { return a + (-b); }
  friend ExactNumber operator*(const ExactNumber& a, const ExactNumber& b);
  /// Multiply by 2^k.
  ExactNumber scaled(std::int64_t k) const;
  ExactNumber abs() const;

  friend bool operator==(const ExactNumber&, const ExactNumber&) = default;
  friend std::strong_ordering operator<=>(const ExactNumber& a, const ExactNumber& b);
  friend std::strong_ordering compare_magnitude(const ExactNumber& a, const ExactNumber& b);

 private:
  void canonicalize();

  bool sign_ = false;
  BigUInt significand_ = 0;
  std::int64_t exp2_ = 0;
};

}  // namespace flexibit
