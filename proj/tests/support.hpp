#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "flexibit/exact.hpp"

namespace flexibit::test {

/// Dyadic value as the frozen tables store it: (-1)^neg * significand * 2^exp2.
struct Dyadic {
  bool neg;
  std::uint64_t significand;
  std::int64_t exp2;

  ExactNumber exact() const { return ExactNumber(neg, BigUInt(significand), exp2); }
};

/// num / den with den a power of two.
inline ExactNumber fraction(std::int64_t num, std::uint64_t den) {
  if (!std::has_single_bit(den)) throw std::invalid_argument("frozen fraction is not dyadic");
  const bool neg = num < 0;
  const auto mag = static_cast<std::uint64_t>(neg ? -num : num);
  return ExactNumber(neg, BigUInt(mag), -static_cast<std::int64_t>(std::countr_zero(den)));
}

}  // namespace flexibit::test
