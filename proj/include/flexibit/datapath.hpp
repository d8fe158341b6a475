// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "flexibit/bitpack.hpp"
#include "flexibit/codec.hpp"
#include "flexibit/control.hpp"

namespace flexibit {

struct PERegisters {
  BitVector act_reg, wgt_reg;
  BitVector act_sign, act_exp, act_man;
  BitVector wgt_sign, wgt_exp, wgt_man;
  BitVector prim_reg;
  BitVector acc_reg;
  std::optional<ScalarValue> mx_scale_act;
  std::optional<ScalarValue> mx_scale_wgt;

  static PERegisters sized_for(const PEConfig& cfg);
};

/// Copies up to one register load of packed elements into act_reg / wgt_reg,
/// element k at bits [k*P, (k+1)*P). Bits past the loaded elements are zero.
void load_operands(PERegisters& regs, const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& bundle);

PERegisters separate(PERegisters regs, const ControlBundle& bundle);

/// Primitive register for serialization step `cycle`.
BitVector gen_primitives(const PERegisters& regs, const ControlBundle& bundle, int cycle = 0);

/// Configured reduction-tree executor. Returns one value per output id.
class TreeExecutor {
 public:
  explicit TreeExecutor(const FbrtPlan& plan);

  /// `leaves[k]` is the bit at leaf k (bits past the vector are idle).
  const std::vector<std::uint64_t>& run(const BitVector& leaves);

 private:
  struct Partial {
    int oid;
    int sid;  // kSummedSegment for shift-added partials
    int lo;
    int width;
    std::uint64_t value;
  };

  static std::uint64_t absolute(const Partial& p);
  static Partial concat(const Partial& a, const Partial& b);
  static Partial add(const Partial& a, const Partial& b);

  const FbrtPlan* plan_;
  int outputs_ = 0;
  std::vector<std::vector<Partial>> below_;
  std::vector<std::vector<Partial>> here_;
  std::vector<std::uint64_t> result_;
};

/// Mantissa products a*w (no implicit ones), one per primitive slot.
std::vector<std::uint64_t> run_fbrt(const BitVector& prim_reg, const ControlBundle& bundle);

/// (2^p + a) * (2^q + w) from the raw product a*w.
std::uint64_t apply_implicit_one(std::uint64_t raw, std::uint64_t a, std::uint64_t w, int p, int q);

/// Two's complement product from the raw product of the low magnitude fields.
std::int64_t apply_sign_correction(std::uint64_t raw, std::uint64_t a, std::uint64_t w, int p, int q, bool sign_a,
                                   bool sign_w);

/// Ripple-carry addition whose carry is cleared after every set break bit.
BitVector fbea_add(const BitVector& x, const BitVector& y, const BitVector& breaks);

/// Biased exponent-field sums eA + eW for every op of `cycle`, one per slot.
std::vector<std::uint64_t> add_exponents(const PERegisters& regs, const ControlBundle& bundle, int cycle = 0);

/// One multiplier output: (-1)^sign * significand * 2^(exponent - frac_bits).
struct ProductTerm {
  bool sign = false;
  bool is_zero = true;
  std::int64_t exponent = 0;
  std::uint64_t significand = 0;
  int frac_bits = 0;
};

enum class Fault : std::uint8_t { None, ImplicitOne, ExponentGuard };

/// Per-operation intermediate values, used to localize a mismatch.
struct OpRecord {
  int act = 0;
  int wgt = 0;
  std::uint64_t a_man = 0;
  std::uint64_t w_man = 0;
  std::uint64_t raw = 0;
  std::int64_t corrected = 0;
  std::uint64_t exp_sum = 0;
  bool zero = false;
};

struct PeCounters {
  std::uint64_t register_loads = 0;
  std::uint64_t multiply_cycles = 0;
  std::uint64_t fbea_passes = 0;
  std::uint64_t cst_passes = 0;
  std::uint64_t ops = 0;
  std::uint64_t precision_loss_events = 0;
  std::uint64_t saturations = 0;
};

struct PeOptions {
  std::ostream* trace = nullptr;
  Fault fault = Fault::None;
  std::vector<OpRecord>* records = nullptr;
  PeCounters* counters = nullptr;
};

/// Outer product of one register load: entry w*na + a is act[a] * wgt[w].
std::vector<ProductTerm> multiply_terms(const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& bundle,
                                        const PeOptions& opts = {});

/// Rounds a product to `out` the way the output stage does (truncate,
/// saturate, flush).
ScalarValue normalize_product(const ProductTerm& t, const FormatSpec& out, PeCounters* counters = nullptr);

std::vector<ScalarValue> pe_multiply(const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& bundle,
                                     const FormatSpec& out_fmt, const PeOptions& opts = {});

struct AlignedOperand {
  std::int64_t significand = 0;  // signed
  std::int64_t ref_exp = 0;
  int delta = 0;
};

/// ENU: reference = largest exponent of the nonzero terms.
std::vector<AlignedOperand> normalize_exponents(std::span<const ProductTerm> products);

/// CST: places each term's significand, widened by the guard bits, on the
/// concat tree and shifts it right by its delta. Dropped nonzero bits count
/// as precision-loss events.
std::vector<std::int64_t> concat_shift(std::span<const AlignedOperand> aligned, const ControlBundle& bundle,
                                       PeCounters* counters = nullptr);

/// ANU state: a signed sum and the exponent of its least significant bit.
class Accumulator {
 public:
  explicit Accumulator(const ControlBundle& bundle, PeCounters* counters = nullptr);

  /// Adds one CST pass. `shifted` holds signed significands whose LSB weighs
  /// 2^(ref_exp - frac_bits - guard_bits).
  void add_pass(std::span<const std::int64_t> shifted, std::int64_t ref_exp);

  /// Feeds terms through ENU / CST in passes of the tree's capacity.
  void add_terms(std::span<const ProductTerm> terms);

  /// Applies optional scale factors, then truncates once into `out`.
  ScalarValue finalize(const FormatSpec& out, const std::optional<ScalarValue>& scale_a = std::nullopt,
                       const std::optional<ScalarValue>& scale_w = std::nullopt) const;

  bool empty() const { return value_ == 0; }

 private:
  const ControlBundle* bundle_;
  PeCounters* counters_;
  BigInt value_ = 0;
  std::int64_t lsb_exp_ = 0;
};

ScalarValue accumulate(std::span<const ProductTerm> terms, const ControlBundle& bundle, const FormatSpec& out_fmt,
                       PeCounters* counters = nullptr);

/// Row-major packed matrix.
struct PackedTile {
  PackedBuffer data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  static PackedTile from_words(std::span<const std::uint64_t> words, std::size_t rows, std::size_t cols,
                               const FormatSpec& fmt);
  std::uint64_t at(std::size_t r, std::size_t c) const { return data.element(r * cols + c); }
};

struct MxScales {
  ScalarValue act;
  ScalarValue wgt;
};

/// C = A (MxK) x W (KxN) by outer products over K, accumulated per output and
/// truncated once into `out_fmt`.
PackedTile pe_mac_tile(const PackedTile& a, const PackedTile& w, const ControlBundle& bundle,
                       const FormatSpec& out_fmt, const std::optional<MxScales>& mx = std::nullopt,
                       const PeOptions& opts = {});

}  // namespace flexibit
