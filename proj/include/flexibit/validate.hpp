// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flexibit/datapath.hpp"

namespace flexibit {

struct ValidationOptions {
  int max_bits = 12;          // widest operand format checked
  int exhaustive_bits = 8;    // operands up to this width: every word pair
  std::uint64_t random_pairs = 10000;  // per format pair above exhaustive_bits
  std::uint64_t seed = 1;
  Fault fault = Fault::None;  // injected into the PE under test
  std::size_t max_reports = 5;
};

struct Mismatch {
  std::string where;   // formats and operands
  std::string stage;   // first datapath stage that disagrees with the oracle
  std::string detail;
};

struct CategoryReport {
  std::string name;
  std::uint64_t cases = 0;
  std::uint64_t mismatches = 0;
  std::vector<Mismatch> examples;
  double seconds = 0;
};

/// Every FP format with 1 sign bit, e >= 1, m >= 0 and total bits in [lo, hi].
std::vector<FormatSpec> fp_formats(int lo, int hi);

/// decode / encode round trip over every word of every FP and INT format.
CategoryReport validate_codec(const ValidationOptions& opts);
/// pe_multiply against encode(mul_ref) for every FP format pair, rounded into
/// the exact product format and into the activation format.
CategoryReport validate_pe_multiply(const ValidationOptions& opts);
/// Integer pairs against the exact product.
CategoryReport validate_pe_integer(const ValidationOptions& opts);
/// FBRT plus implicit-one correction against (2^p + a)(2^q + w) for every
/// mantissa pattern with p, q <= 6.
CategoryReport validate_fbrt(const ValidationOptions& opts);
/// Segmented FBEA sums against scalar sums for add widths 1..12.
CategoryReport validate_fbea(const ValidationOptions& opts);
/// BPU index mapping and pack / unpack round trips.
CategoryReport validate_pack(const ValidationOptions& opts);

enum class ValidationScope : std::uint8_t { Codec, Pe, Pack, All };

ValidationScope parse_validation_scope(std::string_view s);

/// Runs every category of `scope`, regardless of earlier failures.
std::vector<CategoryReport> run_validation(ValidationScope scope, const ValidationOptions& opts);

}  // namespace flexibit
