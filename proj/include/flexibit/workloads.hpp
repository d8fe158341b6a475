// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexibit/arch.hpp"
#include "flexibit/format.hpp"

namespace flexibit {

struct PrecisionPair {
  FormatSpec act;
  FormatSpec wgt;

  std::string label() const;
  friend bool operator==(const PrecisionPair&, const PrecisionPair&) = default;
};

/// Accepts the short names FP16, BF16, FP8, FP6, FP5 and FP4 as well as
/// everything parse_format understands.
FormatSpec parse_named_format(std::string_view text);
/// "FP6" for e2m3 and the other short names; to_string otherwise.
std::string short_name(const FormatSpec& fmt);

struct ModelSpec {
  std::string name;
  std::int64_t seq_len = 2048;
  std::int64_t num_layers = 1;
  std::int64_t d_model = 768;
  std::int64_t d_ff = 3072;
  std::int64_t head_dim = 64;
  PrecisionPair precision{FormatSpec::fp(2, 3), FormatSpec::fp(2, 3)};
  bool include_attention = true;

  std::int64_t heads() const { return d_model / head_dim; }
  void validate() const;

  /// "Bert", "Llama-2-7b", "Llama-2-70b" or "GPT-3" (case-insensitive).
  static ModelSpec preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

/// GEMM classes of one transformer layer in execution order.
std::vector<std::string> gemm_classes(bool include_attention = true);

/// num_layers x classes GEMMs (output format = activation format).
std::vector<GemmWorkload> expand(const ModelSpec& model);
/// One entry per class, with `count` covering every layer (and head).
std::vector<GemmWorkload> expand_classes(const ModelSpec& model);

/// seq * layers * (4 d^2 + 2 d d_ff) plus 2 seq^2 d per layer for attention.
double closed_form_macs(const ModelSpec& model);

/// The 13 activation/weight pairs of the precision sweep.
std::vector<PrecisionPair> proposed_pairs();

struct SweepPoint {
  PrecisionPair pair;
  std::vector<GemmWorkload> gemms;
};

/// Pairs that cannot run on a PE with `cfg` are skipped and reported in
/// `warnings`.
std::vector<SweepPoint> precision_sweep(const ModelSpec& model, std::span<const PrecisionPair> pairs,
                                        std::vector<std::string>* warnings = nullptr, const PEConfig& cfg = {});

}  // namespace flexibit
