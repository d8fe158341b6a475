// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flexibit/arch.hpp"

namespace flexibit {

/// Per-action energies (pJ) and component areas (mm^2) used to cost a
/// SimReport. Values are inputs; the shipped default is synthetic.
struct EnergyTable {
  std::string provenance;

  double prim_and_pj = 0;   // per primitive AND
  double tree_node_pj = 0;  // per bit through one reduction-tree level
  double fbea_pj = 0;       // per exponent-adder bit
  double sram_rd_pj = 0;    // per bit
  double sram_wr_pj = 0;    // per bit
  double noc_pj = 0;        // per bit per hop
  double noc_hops = 1;      // average hops per NoC transfer
  double dram_pj = 0;       // per bit

  std::map<std::string, double> pe_mm2;  // per-PE sub-block areas
  double glb_mm2_per_mib = 0;
  double noc_mm2 = 0;
  double bpu_mm2 = 0;
  /// Whole-accelerator areas keyed "<machine>/<accelerator>", used instead
  /// of the component sum when present.
  std::map<std::string, double> machine_area_mm2;
  /// Per-PE area by register width, for the register-width sweep.
  std::map<int, double> pe_mm2_by_reg_width;

  /// Throws ConfigError for a missing provenance or a negative entry.
  void validate() const;

  /// Bit-count-proportional energies and a super-linear register-width area
  /// curve. Labeled "synthetic placeholder, not measured".
  static EnergyTable synthetic();
};

struct EnergyBreakdown {
  double total_j = 0;
  std::map<std::string, double> components_j;  // compute, sram, noc, dram
};

EnergyBreakdown energy(const SimReport& report, const EnergyTable& table);

/// Accelerator area: the table's whole-machine entry for
/// "<machine>/<accelerator>" if present, else PEs + buffers + NoC + BPU.
double area_mm2(const AcceleratorConfig& acc, const std::string& accelerator, const EnergyTable& table);

/// MACs per second per mm^2. Throws ConfigError for a non-positive area.
double perf_per_area(const SimReport& report, double area_mm2);

/// Energy-delay product in the units of its inputs.
double edp(double seconds, double energy);
double edp(const SimReport& report, const EnergyBreakdown& e);

struct RunCost {
  double seconds = 0;
  double energy = 0;
  double power() const { return seconds > 0 ? energy / seconds : 0; }
  double edp() const { return flexibit::edp(seconds, energy); }
};

/// A bit-serial design described only relative to a bit-parallel one:
/// latency multiplied by `latency_factor`, power divided by `power_factor`.
RunCost bit_serial_stub(const RunCost& parallel, double latency_factor, double power_factor);

struct RegWidthPoint {
  int reg_width = 0;
  int pe_throughput = 0;     // MACs / cycle / PE
  double pe_mm2 = 0;
  double macs_per_cycle_per_mm2 = 0;
};

/// Peak PE throughput per PE area for each register width with an area entry
/// in the table. Widths whose PE cannot hold the pair are reported with zero
/// throughput.
std::vector<RegWidthPoint> reg_width_sweep(const FormatSpec& act, const FormatSpec& wgt, const EnergyTable& table,
                                           std::span<const int> widths);

}  // namespace flexibit
