// SPDX-License-Identifier: Apache-2.0
#include "flexibit/cost.hpp"

#include <cmath>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

constexpr double kPico = 1e-12;
constexpr double kMiB = 1024.0 * 1024.0;

void require_non_negative(double v, const std::string& what) {
  if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("energy table entry '" + what + "' must be finite and >= 0");
}

}  // namespace

void EnergyTable::validate() const {
  if (provenance.empty()) throw ConfigError("energy table has no provenance");
  require_non_negative(prim_and_pj, "prim_and_pj");
  require_non_negative(tree_node_pj, "tree_node_pj");
  require_non_negative(fbea_pj, "fbea_pj");
  require_non_negative(sram_rd_pj, "sram_rd_pj");
  require_non_negative(sram_wr_pj, "sram_wr_pj");
  require_non_negative(noc_pj, "noc_pj");
  require_non_negative(noc_hops, "noc_hops");
  require_non_negative(dram_pj, "dram_pj");
  require_non_negative(glb_mm2_per_mib, "glb_mm2_per_mib");
  require_non_negative(noc_mm2, "noc_mm2");
  require_non_negative(bpu_mm2, "bpu_mm2");
  for (const auto& [k, v] : pe_mm2) require_non_negative(v, "pe_mm2." + k);
  for (const auto& [k, v] : machine_area_mm2) require_non_negative(v, "machine_area_mm2." + k);
  for (const auto& [k, v] : pe_mm2_by_reg_width) {
    require_non_negative(v, "pe_mm2_by_reg_width." + std::to_string(k));
  }
}

EnergyTable EnergyTable::synthetic() {
  EnergyTable t;
  t.provenance = "synthetic placeholder, not measured";
  t.prim_and_pj = 0.002;
  t.tree_node_pj = 0.004;
  t.fbea_pj = 0.005;
  t.sram_rd_pj = 0.10;
  t.sram_wr_pj = 0.12;
  t.noc_pj = 0.05;
  t.noc_hops = 2;
  t.dram_pj = 10.0;
  t.pe_mm2 = {{"primitive_generator", 0.0036}, {"fbrt", 0.0036},   {"separator", 0.0018},
              {"fbea", 0.0010},                {"accumulate", 0.0030}, {"registers", 0.0013}};
  t.glb_mm2_per_mib = 0.9;
  t.noc_mm2 = 1.0;
  t.bpu_mm2 = 0.02;
  // Crossbars grow with reg_width x R_M, so PE area rises super-linearly.
  for (int w = 16; w <= 32; w += 4) t.pe_mm2_by_reg_width[w] = 0.0045 + 1.7e-5 * w * w;
  return t;
}

EnergyBreakdown energy(const SimReport& report, const EnergyTable& table) {
  table.validate();
  const ActionCounts& a = report.actions;
  EnergyBreakdown e;
  e.components_j["compute"] =
      (a.prim_ands * table.prim_and_pj + a.tree_bit_ops * table.tree_node_pj + a.fbea_bit_ops * table.fbea_pj) *
      kPico;
  e.components_j["sram"] = (a.sram_rd_bits * table.sram_rd_pj + a.sram_wr_bits * table.sram_wr_pj) * kPico;
  e.components_j["noc"] = a.noc_bits * table.noc_hops * table.noc_pj * kPico;
  e.components_j["dram"] = a.dram_bits * table.dram_pj * kPico;
  for (const auto& [k, v] : e.components_j) e.total_j += v;
  return e;
}

double area_mm2(const AcceleratorConfig& acc, const std::string& accelerator, const EnergyTable& table) {
  const auto it = table.machine_area_mm2.find(acc.name + "/" + accelerator);
  if (it != table.machine_area_mm2.end()) return it->second;
  if (table.pe_mm2.empty()) {
    throw ConfigError("energy table has neither pe_mm2 nor an area for '" + acc.name + "/" + accelerator + "'");
  }
  double pe = 0;
  for (const auto& [k, v] : table.pe_mm2) pe += v;
  const double glb_mib = (acc.wgt_glb_bytes + acc.act_out_glb_bytes) / kMiB;
  return acc.num_pes * pe + glb_mib * table.glb_mm2_per_mib + table.noc_mm2 + table.bpu_mm2;
}

double perf_per_area(const SimReport& report, double area) {
  if (!(area > 0)) throw ConfigError("area must be positive");
  if (!(report.seconds > 0)) return 0;
  return report.actions.macs / report.seconds / area;
}

double edp(double seconds, double energy) { return seconds * energy; }

double edp(const SimReport& report, const EnergyBreakdown& e) { return edp(report.seconds, e.total_j); }

RunCost bit_serial_stub(const RunCost& parallel, double latency_factor, double power_factor) {
  if (!(latency_factor > 0) || !(power_factor > 0)) throw ConfigError("bit-serial factors must be positive");
  RunCost r;
  r.seconds = parallel.seconds * latency_factor;
  r.energy = parallel.power() / power_factor * r.seconds;
  return r;
}

std::vector<RegWidthPoint> reg_width_sweep(const FormatSpec& act, const FormatSpec& wgt, const EnergyTable& table,
                                           std::span<const int> widths) {
  std::vector<RegWidthPoint> out;
  for (int w : widths) {
    const auto it = table.pe_mm2_by_reg_width.find(w);
    if (it == table.pe_mm2_by_reg_width.end()) {
      throw ConfigError("energy table has no PE area for reg_width " + std::to_string(w));
    }
    AcceleratorConfig acc;
    acc.reg_width = w;
    RegWidthPoint p;
    p.reg_width = w;
    p.pe_mm2 = it->second;
    try {
      p.pe_throughput = pe_throughput(act, wgt, acc.pe_config());
    } catch (const ConfigError&) {
      p.pe_throughput = 0;
    }
    p.macs_per_cycle_per_mm2 = p.pe_mm2 > 0 ? p.pe_throughput / p.pe_mm2 : 0;
    out.push_back(p);
  }
  return out;
}

}  // namespace flexibit
