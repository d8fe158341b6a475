// SPDX-License-Identifier: Apache-2.0
#include "flexibit/codec.hpp"

#include <cmath>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

std::uint64_t low_mask(int bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace

std::uint64_t ScalarValue::word() const {
  if (is_zero) return 0;
  const int m = format.man_bits;
  const int e = format.exp_bits;
  std::uint64_t w = man_field | (exp_field << m);
  if (format.sign_bits()) w |= std::uint64_t{sign} << (m + e);
  return w;
}

double ScalarValue::to_double() const { return to_exact(*this).to_double(); }

ScalarValue decode(std::uint64_t word, const FormatSpec& fmt) {
  const int total = fmt.total_bits();
  if (total < 64 && (word >> total) != 0) {
    throw FormatError("word does not fit in " + std::to_string(total) + " bits of " + to_string(fmt));
  }
  ScalarValue v;
  v.format = fmt;
  v.is_zero = word == 0;
  v.man_field = word & low_mask(fmt.man_bits);
  v.exp_field = (word >> fmt.man_bits) & low_mask(fmt.exp_bits);
  v.sign = fmt.sign_bits() ? ((word >> (total - 1)) & 1) != 0 : false;
  return v;
}

ScalarValue decode(std::string_view bits, const FormatSpec& fmt) {
  std::uint64_t word = 0;
  int n = 0;
  for (char c : bits) {
    if (c == '_') continue;
    if (c != '0' && c != '1') throw FormatError("bit string may only hold 0, 1 and _");
    if (++n > 64) throw FormatError("bit string longer than 64 bits");
    word = (word << 1) | static_cast<std::uint64_t>(c - '0');
  }
  if (n != fmt.total_bits()) {
    throw FormatError("bit string has " + std::to_string(n) + " bits, " + to_string(fmt) + " needs " +
                      std::to_string(fmt.total_bits()));
  }
  return decode(word, fmt);
}

std::string to_bit_string(std::uint64_t word, const FormatSpec& fmt) {
  std::string s;
  for (int i = fmt.total_bits() - 1; i >= 0; --i) s.push_back(((word >> i) & 1) ? '1' : '0');
  return s;
}

ExactNumber to_exact(const ScalarValue& v) {
  if (v.is_zero) return {};
  const FormatSpec& f = v.format;
  if (f.is_int()) {
    BigUInt mag = v.man_field;
    if (!v.sign) return ExactNumber(false, mag, 0);
    // value = man - 2^m, negative.
    BigUInt neg = (BigUInt(1) << f.man_bits) - mag;
    return ExactNumber(true, neg, 0);
  }
  BigUInt sig = (BigUInt(1) << f.man_bits) + v.man_field;
  std::int64_t e = static_cast<std::int64_t>(v.exp_field) - f.bias - f.man_bits;
  return ExactNumber(v.sign, sig, e);
}

namespace {

ScalarValue encode_int(const ExactNumber& v, const FormatSpec& fmt) {
  BigUInt mag = v.exp2() >= 0 ? BigUInt(v.significand() << static_cast<unsigned>(v.exp2()))
                              : BigUInt(v.significand() >> static_cast<unsigned>(-v.exp2()));
  const bool neg = v.sign() && mag != 0;
  const int m = fmt.man_bits;
  BigUInt limit_pos = (BigUInt(1) << m) - 1;
  std::uint64_t word = 0;
  if (!neg) {
    if (mag > limit_pos) mag = limit_pos;
    word = mag.convert_to<std::uint64_t>();
  } else if (!fmt.is_signed) {
    word = 0;
  } else {
    BigUInt limit_neg = BigUInt(1) << m;
    if (mag > limit_neg) mag = limit_neg;
    BigUInt low = limit_neg - mag;  // two's complement low bits
    word = (std::uint64_t{1} << m) | low.convert_to<std::uint64_t>();
  }
  return decode(word, fmt);
}

}  // namespace

ScalarValue encode(const ExactNumber& v, const FormatSpec& fmt, RoundingMode) {
  if (fmt.is_int()) return encode_int(v, fmt);
  if (v.is_zero()) return decode(std::uint64_t{0}, fmt);

  const int m = fmt.man_bits;
  const auto lead = static_cast<std::int64_t>(boost::multiprecision::msb(v.significand()));
  const std::int64_t k = lead + v.exp2();
  const std::int64_t field = k + fmt.bias;

  ScalarValue r;
  r.format = fmt;
  r.sign = v.sign();
  if (field < 0) return decode(std::uint64_t{0}, fmt);
  if (static_cast<std::uint64_t>(field) > fmt.max_exp_field()) {
    r.exp_field = fmt.max_exp_field();
    r.man_field = low_mask(m);
  } else {
    BigUInt frac = v.significand() - (BigUInt(1) << static_cast<unsigned>(lead));
    BigUInt man = lead >= m ? BigUInt(frac >> static_cast<unsigned>(lead - m))
                            : BigUInt(frac << static_cast<unsigned>(m - lead));
    r.exp_field = static_cast<std::uint64_t>(field);
    r.man_field = man.convert_to<std::uint64_t>();
  }
  // The all-zero word is reserved for zero; re-decoding keeps is_zero consistent.
  r.is_zero = false;
  return decode(r.word(), fmt);
}

ExactNumber mul_ref(const ScalarValue& a, const ScalarValue& b) {
  return to_exact(a) * to_exact(b);
}

ExactNumber add_ref(const ExactNumber& a, const ExactNumber& b) { return a + b; }

ExactNumber dot_ref(std::span<const ScalarValue> a, std::span<const ScalarValue> w) {
  if (a.size() != w.size()) throw ShapeError("dot_ref operands differ in length");
  ExactNumber sum;
  for (std::size_t i = 0; i < a.size(); ++i) sum = add_ref(sum, mul_ref(a[i], w[i]));
  return sum;
}

ExactNumber mx_dot_ref(const MxBlock& a, const MxBlock& w) {
  if (a.block_size() != w.block_size()) {
    throw ShapeError("MX blocks differ in size: " + std::to_string(a.block_size()) + " vs " +
                     std::to_string(w.block_size()));
  }
  return to_exact(a.scale) * to_exact(w.scale) * dot_ref(a.elements, w.elements);
}

}  // namespace flexibit
