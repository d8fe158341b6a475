// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flexibit {

enum class FormatKind : std::uint8_t { Float, Int };

/// An arbitrary scalar format: FP with `exp_bits` exponent and `man_bits`
/// mantissa bits plus a sign bit, or a (two's complement) integer whose
/// magnitude field is `man_bits` wide below an optional sign bit.
///
/// There are no subnormals, infinities or NaNs. The all-zero word is the
/// unique encoding of zero; every other word is a normal number with an
/// implicit leading one.
struct FormatSpec {
  FormatKind kind = FormatKind::Float;
  int exp_bits = 0;
  int man_bits = 0;
  bool is_signed = true;
  int bias = 0;

  static FormatSpec fp(int exp_bits, int man_bits);
  static FormatSpec fp(int exp_bits, int man_bits, int bias);
  static FormatSpec integer(int bits, bool is_signed = true);

  bool is_float() const { return kind == FormatKind::Float; }
  bool is_int() const { return kind == FormatKind::Int; }
  int sign_bits() const { return (is_float() || is_signed) ? 1 : 0; }
  int total_bits() const { return sign_bits() + exp_bits + man_bits; }
  std::uint64_t max_exp_field() const { return (std::uint64_t{1} << exp_bits) - 1; }

  /// Throws FormatError unless the field widths describe a legal format.
  void validate() const;

  friend bool operator==(const FormatSpec&, const FormatSpec&) = default;
};

inline int default_bias(int exp_bits) {
  return exp_bits <= 0 ? 0 : (1 << (exp_bits - 1)) - 1;
}

/// Accepts "eXmY", "fpN:eXmY", "intN" and "uintN", case-insensitively.
FormatSpec parse_format(std::string_view text);
std::string to_string(const FormatSpec& fmt);

/// Format holding the exact product of two operands: FP products keep the
/// wider exponent and p+q+1 mantissa bits (FP16 x e2m3 -> e5m14, i.e. FP20);
/// integer products are pA+pW bits wide.
FormatSpec product_format(const FormatSpec& a, const FormatSpec& w);

/// Next power-of-two container (minimum 8) used by padded host layouts.
int padded_container_bits(const FormatSpec& fmt);

}  // namespace flexibit
