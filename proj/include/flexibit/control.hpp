// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexibit/bitpack.hpp"
#include "flexibit/format.hpp"
#include "flexibit/pe_config.hpp"

namespace flexibit {

// ---------------------------------------------------------------------------
// Separator
// ---------------------------------------------------------------------------

enum class SepDest : std::uint8_t { Sign, Exp, Man, Inactive };

struct SepRoute {
  SepDest dest = SepDest::Inactive;
  int index = -1;  // position inside the destination register

  friend bool operator==(const SepRoute&, const SepRoute&) = default;
};

struct SeparatorPlan {
  FormatSpec fmt;
  int elements = 0;              // whole elements loaded per register
  std::vector<SepRoute> routes;  // one per register bit, scan order

  int sign_bits_used() const;
  int exp_bits_used() const;
  int man_bits_used() const;
};

/// Whole elements of `fmt` one register load can hold, limited by the
/// register width and the sign/exponent/mantissa register partitions.
/// Throws CapacityError when not even one element fits.
int elements_per_register(const FormatSpec& fmt, const PEConfig& cfg);

SeparatorPlan compile_separator(const FormatSpec& fmt, const PEConfig& cfg);

// ---------------------------------------------------------------------------
// Primitive generator
// ---------------------------------------------------------------------------

/// Sources of one primitive-register bit: mantissa-register indices of the
/// activation and weight bits that are ANDed. Negative means inactive.
struct PrimSource {
  int act_bit = -1;
  int wgt_bit = -1;

  bool active() const { return act_bit >= 0; }
  friend bool operator==(const PrimSource&, const PrimSource&) = default;
};

/// One multiplication scheduled in a cycle: activation element a times
/// weight element w, occupying primitive slot `slot`.
struct OpSlot {
  int act = 0;
  int wgt = 0;
};

struct PrimGenPlan {
  int act_man_bits = 0;  // p
  int wgt_man_bits = 0;  // q
  int num_acts = 0;
  int num_wgts = 0;
  int total_ops = 0;
  int ops_per_cycle = 0;
  int cycles = 0;  // serialization factor

  /// routes[c][b]: source of primitive bit b in cycle c.
  std::vector<std::vector<PrimSource>> routes;
  /// Per-leaf output / segment ids of one cycle's layout; -1 marks idle leaves.
  std::vector<int> oids;
  std::vector<int> sids;

  int prims_per_op() const { return act_man_bits * wgt_man_bits; }
  /// Operation `op` (weight-major) -> element pair.
  OpSlot op_pair(int op) const { return {op % num_acts, op / num_acts}; }
  int ops_in_cycle(int cycle) const;
};

/// Weight-major operation order; within an operation, segment-major layout
/// P(0,0), P(1,0), ..., P(p-1,0), P(0,1), ... with P(i,j) = A.man[i] & W.man[j]
/// (bit 0 = LSB of the mantissa field).
PrimGenPlan compile_primgen(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg);

// ---------------------------------------------------------------------------
// Flexible bit reduction tree
// ---------------------------------------------------------------------------

enum class NodeMode : std::uint8_t { Idle, D, C2, C3, A2, A3, ConcatAdd };
enum class LinkSide : std::uint8_t { None, Left, Right };

/// D forwards both children; C2/C3 concatenate two/three same-segment
/// fragments; A2/A3 shift-add two/three fragments of one operation;
/// ConcatAdd concatenates one pair (Left: the children, Right: the right
/// child with the neighbour fragment) and adds the third operand. Three-way
/// modes pull the left-edge fragment of the right neighbour over the
/// additional link.
struct SwitchMode {
  NodeMode mode = NodeMode::Idle;
  LinkSide side = LinkSide::None;

  friend bool operator==(const SwitchMode&, const SwitchMode&) = default;
};

std::string to_string(SwitchMode m);

struct FbrtPlan {
  int leaves = 0;
  int levels = 0;
  std::vector<int> leaf_oids;
  std::vector<int> leaf_sids;
  std::vector<int> leaf_lo;  // bit position of the leaf inside its segment
  /// modes[l][j] for level l in [1, levels]; modes[0] is empty.
  std::vector<std::vector<SwitchMode>> modes;

  int nodes_at(int level) const { return leaves >> level; }
  /// Node j at `level` owns an additional link to node j+1 (different parent).
  bool has_additional_link(int level, int node) const;
};

inline constexpr int kSummedSegment = -2;

/// Bottom-up, right-to-left mode assignment. `oids`/`sids` give each
/// primitive bit's output and segment id (-1 idle); the tree is padded to the
/// next power of two with idle leaves.
FbrtPlan compile_fbrt(std::span<const int> oids, std::span<const int> sids, const PEConfig& cfg);
/// Same, with an explicit leaf count (power of two >= oids.size()).
FbrtPlan compile_fbrt(std::span<const int> oids, std::span<const int> sids, int leaves);

// ---------------------------------------------------------------------------
// Flexible bit exponent adder
// ---------------------------------------------------------------------------

struct FbeaPlan {
  int add_width = 0;      // max exponent width of the operands
  int segment_width = 0;  // add_width + 1 guard bit
  int segments = 0;
  BitVector breaks;       // 1 = carry stops after this bit

  bool enabled() const { return add_width > 0; }
};

/// Disabled (no segments) for integer operands, which bypass the FP stages.
FbeaPlan compile_fbea(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg);
FbeaPlan compile_fbea_width(int add_width, int l_add);

// ---------------------------------------------------------------------------
// Accumulation path (ENU / CST / ANU)
// ---------------------------------------------------------------------------

struct AccumPlan {
  int frac_bits = 0;        // fractional bits of a product significand (p+q)
  int product_width = 0;    // significand width incl. the integer bits
  int guard_bits = 0;       // extra low bits kept when aligning
  int segment_width = 0;    // product_width + guard_bits
  int terms_per_pass = 0;   // floor(L_cst / segment_width)
  FbrtPlan cst;             // concat-only tree over the CST bits
};

AccumPlan compile_accum(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg);

// ---------------------------------------------------------------------------
// Whole-layer bundle
// ---------------------------------------------------------------------------

inline constexpr int kReconfigCycles = 64;

struct ControlBundle {
  FormatSpec act_fmt;
  FormatSpec wgt_fmt;
  FormatSpec out_fmt;
  PEConfig cfg;
  SeparatorPlan act_sep;
  SeparatorPlan wgt_sep;
  PrimGenPlan prim;
  FbrtPlan fbrt;
  FbeaPlan fbea;
  AccumPlan accum;
  int reconfig_cycles = kReconfigCycles;

  bool integer_mode() const { return act_fmt.is_int(); }
};

/// Pure function of its arguments. Operands must both be Float or both Int.
ControlBundle compile_bundle(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const FormatSpec& out_fmt,
                             const PEConfig& cfg = {});

/// Deterministic human-readable dump used for golden-file comparisons.
std::string serialize(const ControlBundle& bundle);

}  // namespace flexibit
