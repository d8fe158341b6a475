// SPDX-License-Identifier: Apache-2.0
#include "flexibit/exact.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "flexibit/errors.hpp"

namespace flexibit {

ExactNumber::ExactNumber(bool sign, BigUInt significand, std::int64_t exp2)
    : sign_(sign), significand_(std::move(significand)), exp2_(exp2) {
  if (significand_ < 0) throw Error("ExactNumber significand must be non-negative");
  canonicalize();
}

void ExactNumber::canonicalize() {
  if (significand_ == 0) {
    sign_ = false;
    exp2_ = 0;
    return;
  }
  auto tz = static_cast<std::int64_t>(boost::multiprecision::lsb(significand_));
  if (tz > 0) {
    significand_ >>= tz;
    exp2_ += tz;
  }
}

ExactNumber ExactNumber::from_int(std::int64_t v) {
  BigUInt mag = v < 0 ? BigUInt(-(v + 1)) + 1 : BigUInt(v);
  return ExactNumber(v < 0, std::move(mag), 0);
}

ExactNumber ExactNumber::from_double(double v) {
  if (!std::isfinite(v)) throw Error("ExactNumber::from_double needs a finite value");
  if (v == 0.0) return {};
  int e = 0;
  double frac = std::frexp(std::fabs(v), &e);  // frac in [0.5, 1)
  auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  return ExactNumber(v < 0, BigUInt(mant), static_cast<std::int64_t>(e) - 53);
}

std::int64_t ExactNumber::magnitude_exponent() const {
  return static_cast<std::int64_t>(boost::multiprecision::msb(significand_)) + exp2_;
}

double ExactNumber::to_double() const {
  if (is_zero()) return 0.0;
  auto top = static_cast<std::int64_t>(boost::multiprecision::msb(significand_));
  std::int64_t drop = top > 60 ? top - 60 : 0;
  BigUInt head = significand_ >> drop;
  double d = std::ldexp(head.convert_to<double>(), static_cast<int>(exp2_ + drop));
  return sign_ ? -d : d;
}

std::string ExactNumber::to_string() const {
  std::ostringstream os;
  os << (sign_ ? "-" : "") << significand_ << "*2^" << exp2_;
  return os.str();
}

ExactNumber ExactNumber::operator-() const {
  ExactNumber r = *this;
  if (!r.is_zero()) r.sign_ = !r.sign_;
  return r;
}

ExactNumber ExactNumber::abs() const {
  ExactNumber r = *this;
  r.sign_ = false;
  return r;
}

ExactNumber ExactNumber::scaled(std::int64_t k) const {
  ExactNumber r = *this;
  if (!r.is_zero()) r.exp2_ += k;
  return r;
}

ExactNumber operator+(const ExactNumber& a, const ExactNumber& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  std::int64_t e = std::min(a.exp2_, b.exp2_);
  BigUInt ma = a.significand_ << static_cast<unsigned>(a.exp2_ - e);
  BigUInt mb = b.significand_ << static_cast<unsigned>(b.exp2_ - e);
  if (a.sign_ == b.sign_) return ExactNumber(a.sign_, ma + mb, e);
  // Opposite signs: the result takes the sign of the larger magnitude.
  if (ma >= mb) return ExactNumber(a.sign_, ma - mb, e);
  return ExactNumber(b.sign_, mb - ma, e);
}

ExactNumber operator*(const ExactNumber& a, const ExactNumber& b) {
  if (a.is_zero() || b.is_zero()) return {};
  return ExactNumber(a.sign_ != b.sign_, a.significand_ * b.significand_, a.exp2_ + b.exp2_);
}

std::strong_ordering compare_magnitude(const ExactNumber& a, const ExactNumber& b) {
  if (a.is_zero() || b.is_zero()) {
    if (a.is_zero() && b.is_zero()) return std::strong_ordering::equal;
    return a.is_zero() ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  auto ea = a.magnitude_exponent();
  auto eb = b.magnitude_exponent();
  if (ea != eb) return ea <=> eb;
  std::int64_t e = std::min(a.exp2_, b.exp2_);
  BigUInt ma = a.significand_ << static_cast<unsigned>(a.exp2_ - e);
  BigUInt mb = b.significand_ << static_cast<unsigned>(b.exp2_ - e);
  if (ma == mb) return std::strong_ordering::equal;
  return ma < mb ? std::strong_ordering::less : std::strong_ordering::greater;
}

std::strong_ordering operator<=>(const ExactNumber& a, const ExactNumber& b) {
  bool na = a.sign_ && !a.is_zero();
  bool nb = b.sign_ && !b.is_zero();
  if (na != nb) return na ? std::strong_ordering::less : std::strong_ordering::greater;
  auto m = compare_magnitude(a, b);
  if (!na) return m;
  return 0 <=> m;
}

}  // namespace flexibit
