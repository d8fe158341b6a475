// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexibit/exact.hpp"
#include "flexibit/format.hpp"

namespace flexibit {

/// One decoded word. For Float formats the value is
/// (-1)^sign * (1 + man_field / 2^man_bits) * 2^(exp_field - bias) unless is_zero.
/// For Int formats `sign` is the two's complement sign bit, `man_field` the
/// remaining low bits, and the value is man_field - sign * 2^man_bits.
struct ScalarValue {
  bool sign = false;
  std::uint64_t exp_field = 0;
  std::uint64_t man_field = 0;
  FormatSpec format;
  bool is_zero = true;

  std::uint64_t word() const;
  double to_double() const;

  friend bool operator==(const ScalarValue&, const ScalarValue&) = default;
};

enum class RoundingMode : std::uint8_t { TruncateTowardZero };

/// Word layout is MSB-first [sign | exponent | mantissa].
ScalarValue decode(std::uint64_t word, const FormatSpec& fmt);
/// `bits` is a string of '0'/'1' characters; '_' separators are ignored.
ScalarValue decode(std::string_view bits, const FormatSpec& fmt);

/// Truncates toward zero; saturates to the largest finite magnitude on
/// exponent overflow and flushes to zero on underflow. Int targets truncate
/// the fraction and saturate to the representable range.
ScalarValue encode(const ExactNumber& v, const FormatSpec& fmt,
                   RoundingMode rounding = RoundingMode::TruncateTowardZero);

ExactNumber to_exact(const ScalarValue& v);

/// Exact product; each operand contributes its own bias.
ExactNumber mul_ref(const ScalarValue& a, const ScalarValue& b);
ExactNumber add_ref(const ExactNumber& a, const ExactNumber& b);

struct MxBlock {
  ScalarValue scale;
  std::vector<ScalarValue> elements;

  std::size_t block_size() const { return elements.size(); }
};

/// X(A) * X(W) * sum_i P_i(A) * P_i(W), exact.
ExactNumber mx_dot_ref(const MxBlock& a, const MxBlock& w);

/// Exact dot product of two scalar sequences (sum of mul_ref terms).
ExactNumber dot_ref(std::span<const ScalarValue> a, std::span<const ScalarValue> w);

/// Renders a word as a '0'/'1' string of fmt.total_bits() characters.
std::string to_bit_string(std::uint64_t word, const FormatSpec& fmt);

}  // namespace flexibit
