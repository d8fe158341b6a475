// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flexibit/format.hpp"
#include "flexibit/pe_config.hpp"

namespace flexibit {

struct AcceleratorConfig {
  std::string name;
  int num_pes = 1024;
  int array_x = 32;
  int array_y = 32;
  int reg_width = 24;
  double wgt_glb_bytes = 2.0 * (1 << 20);
  double act_out_glb_bytes = 1.0 * (1 << 20);
  double local_buf_bytes_per_pe = 0.18 * 1024;
  double noc_w_gbps = 32;
  double noc_a_gbps = 32;
  double offchip_gbps = 16;
  double clock_hz = 1e9;

  void validate() const;
  /// PE parameters for this machine (defaults with the machine's register width).
  PEConfig pe_config() const;

  double offchip_bits_per_cycle() const { return offchip_gbps * 8e9 / clock_hz; }
  double noc_w_bits_per_cycle() const { return noc_w_gbps * 8e9 / clock_hz; }
  double noc_a_bits_per_cycle() const { return noc_a_gbps * 8e9 / clock_hz; }

  /// "Mobile-A", "Mobile-B", "Cloud-A" or "Cloud-B" (case-insensitive).
  static AcceleratorConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

struct GemmWorkload {
  std::int64_t M = 1;
  std::int64_t N = 1;
  std::int64_t K = 1;
  FormatSpec fmt_a;
  FormatSpec fmt_w;
  FormatSpec fmt_o;
  std::string label;
  std::int64_t count = 1;  // identical instances (e.g. attention heads)

  void validate() const;
  double macs() const { return static_cast<double>(M) * static_cast<double>(N) * static_cast<double>(K) * count; }
};

enum class Dataflow : std::uint8_t { WeightStationary, OutputStationary };

std::string to_string(Dataflow df);
Dataflow parse_dataflow(std::string_view s);

struct TilePlan {
  Dataflow dataflow = Dataflow::WeightStationary;
  std::int64_t tile_m = 1;
  std::int64_t tile_n = 1;
  std::int64_t tile_k = 1;
  std::int64_t steps = 1;
  // Compute tile mapped onto the PE array inside one buffer tile.
  std::int64_t sub_m = 1;
  std::int64_t sub_n = 1;
  std::int64_t sub_k = 1;
  double weight_reuse = 1;  // uses of each weight fetched into the array
  double output_reuse = 1;  // accumulation steps per output kept in place
  bool act_resident = false;
  bool out_resident = false;
};

/// Counts used by the cost model.
struct ActionCounts {
  double macs = 0;
  double prim_ands = 0;
  double tree_bit_ops = 0;
  double fbea_bit_ops = 0;
  double sram_rd_bits = 0;
  double sram_wr_bits = 0;
  double noc_bits = 0;
  double dram_bits = 0;
};

enum class ArchKind : std::uint8_t { FlexiBit, TensorCoreLike, BitFusionLike };

std::string to_string(ArchKind k);

struct SimReport {
  std::string machine;
  ArchKind arch = ArchKind::FlexiBit;
  std::string workload;
  TilePlan plan;
  double cycles = 0;
  double seconds = 0;
  double energy_j = 0;
  double dram_bits_read = 0;
  double dram_bits_written = 0;
  double noc_bits = 0;
  double pe_util = 0;
  double macs_per_cycle = 0;
  double pe_throughput = 0;
  std::uint64_t precision_loss_events = 0;
  std::map<std::string, double> breakdown;  // cycle components
  ActionCounts actions;
};

/// MACs per cycle per PE.
int pe_throughput(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg = {});

enum class Storage : std::uint8_t { Packed, Padded };

/// Per-machine compute and storage parameters the roofline skeleton needs.
struct MachineModel {
  ArchKind arch = ArchKind::FlexiBit;
  double throughput = 1;   // MACs / cycle / PE
  int bits_a = 8;          // stored bits per element
  int bits_w = 8;
  int bits_o = 8;
  double prims_per_mac = 1;
  int exp_add_bits = 0;
  int tree_levels = 8;
};

MachineModel flexibit_model(const GemmWorkload& w, const PEConfig& cfg, Storage storage = Storage::Packed);
/// Throws ConfigError if a format cannot be mapped onto the baseline.
MachineModel baseline_model(const GemmWorkload& w, ArchKind kind, const PEConfig& cfg = {});

/// Common upcast target of the Tensor-Core-like baseline for a pair.
std::pair<FormatSpec, FormatSpec> tensor_core_formats(const FormatSpec& a, const FormatSpec& w);

TilePlan plan_tiles(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const MachineModel& model);
TilePlan plan_tiles(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df);

SimReport simulate_model(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const MachineModel& model);
SimReport simulate(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const PEConfig& pe_cfg);
SimReport simulate(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df);
/// Minimum-cycle dataflow.
SimReport simulate_best(const GemmWorkload& w, const AcceleratorConfig& acc, const MachineModel& model);

SimReport simulate_baseline(const GemmWorkload& w, const AcceleratorConfig& acc, ArchKind kind,
                            Dataflow df = Dataflow::WeightStationary);

struct AblationResult {
  SimReport packed;
  SimReport padded;
  /// 1 - packed/padded latency.
  double latency_improvement() const;
};

AblationResult packing_ablation(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df);
/// The padded variant replays the packed variant's mapping, so only the bits
/// moved per element differ. The two-argument form maps with the
/// minimum-cycle dataflow.
AblationResult packing_ablation(const GemmWorkload& w, const AcceleratorConfig& acc);

/// Sums reports of a sequence of GEMMs (one precision change per entry).
SimReport combine(const std::vector<SimReport>& parts);

}  // namespace flexibit
