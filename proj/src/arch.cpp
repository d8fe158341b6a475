// SPDX-License-Identifier: Apache-2.0
#include "flexibit/arch.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <tuple>
#include <utility>

#include "flexibit/control.hpp"
#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

std::string lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

constexpr double kMiB = 1024.0 * 1024.0;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

// ---------------------------------------------------------------------------
// Machines and workloads

void AcceleratorConfig::validate() const {
  if (num_pes <= 0 || array_x <= 0 || array_y <= 0) throw ConfigError(name + ": PE counts must be positive");
  if (num_pes != array_x * array_y) throw ConfigError(name + ": num_pes must equal array_x * array_y");
  if (wgt_glb_bytes <= 0 || act_out_glb_bytes <= 0 || local_buf_bytes_per_pe <= 0) {
    throw ConfigError(name + ": buffer sizes must be positive");
  }
  if (noc_w_gbps <= 0 || noc_a_gbps <= 0 || offchip_gbps <= 0 || clock_hz <= 0) {
    throw ConfigError(name + ": bandwidths and clock must be positive");
  }
  pe_config().validate();
}

PEConfig AcceleratorConfig::pe_config() const {
  PEConfig c;
  c.reg_width = reg_width;
  c.r_m = std::min(c.r_m, reg_width);
  c.r_e = std::min(c.r_e, reg_width);
  return c;
}

AcceleratorConfig AcceleratorConfig::preset(std::string_view name) {
  AcceleratorConfig c;
  const std::string n = lower(name);
  if (n == "mobile-a") {
    c = {"Mobile-A", 1024, 32, 32, 24, 2 * kMiB, 1 * kMiB, 0.18 * 1024, 32, 32, 16, 1e9};
  } else if (n == "mobile-b") {
    c = {"Mobile-B", 4096, 64, 64, 24, 4 * kMiB, 2 * kMiB, 0.18 * 1024, 64, 64, 16, 1e9};
  } else if (n == "cloud-a") {
    c = {"Cloud-A", 8192, 128, 64, 24, 16 * kMiB, 8 * kMiB, 0.18 * 1024, 128, 64, 128, 1e9};
  } else if (n == "cloud-b") {
    c = {"Cloud-B", 16384, 128, 128, 24, 32 * kMiB, 16 * kMiB, 0.18 * 1024, 128, 128, 128, 1e9};
  } else {
    throw ConfigError("unknown machine preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> AcceleratorConfig::preset_names() { return {"Mobile-A", "Mobile-B", "Cloud-A", "Cloud-B"}; }

void GemmWorkload::validate() const {
  if (M <= 0 || N <= 0 || K <= 0 || count <= 0) throw ConfigError("GEMM '" + label + "' has a non-positive dimension");
  fmt_a.validate();
  fmt_w.validate();
  fmt_o.validate();
}

std::string to_string(Dataflow df) { return df == Dataflow::WeightStationary ? "WS" : "OS"; }

Dataflow parse_dataflow(std::string_view s) {
  const std::string n = lower(s);
  if (n == "ws" || n == "weight-stationary" || n == "weightstationary") return Dataflow::WeightStationary;
  if (n == "os" || n == "output-stationary" || n == "outputstationary") return Dataflow::OutputStationary;
  throw ConfigError("unknown dataflow '" + std::string(s) + "'");
}

std::string to_string(ArchKind k) {
  switch (k) {
    case ArchKind::FlexiBit: return "FlexiBit";
    case ArchKind::TensorCoreLike: return "TensorCoreLike";
    case ArchKind::BitFusionLike: return "BitFusionLike";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Per-machine models

int pe_throughput(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg) {
  int ea = 0;
  int ew = 0;
  try {
    ea = elements_per_register(fmt_a, cfg);
    ew = elements_per_register(fmt_w, cfg);
  } catch (const CapacityError& e) {
    throw ConfigError(e.what());
  }
  const int pq = std::max(1, fmt_a.man_bits * fmt_w.man_bits);
  return std::min(ea * ew, cfg.l_prim / pq);
}

namespace {

double prims_per_mac(const FormatSpec& a, const FormatSpec& w) {
  const double pa = a.is_float() ? a.man_bits + 1 : a.man_bits;
  const double pw = w.is_float() ? w.man_bits + 1 : w.man_bits;
  return std::max(1.0, pa * pw);
}

int exp_add_bits(const FormatSpec& a, const FormatSpec& w) {
  return std::max(a.is_float() ? a.exp_bits : 0, w.is_float() ? w.exp_bits : 0);
}

FormatSpec tc_single(const FormatSpec& f) {
  const FormatSpec fp8 = FormatSpec::fp(4, 3);
  const FormatSpec fp16 = FormatSpec::fp(5, 10);
  if (f.is_int()) {
    if (f.is_signed ? f.total_bits() <= 8 : f.total_bits() <= 7) return FormatSpec::integer(8);
    if (f.total_bits() <= 11) return fp16;
  } else {
    if (f.exp_bits <= 4 && f.man_bits <= 3) return fp8;
    if (f.exp_bits <= 5 && f.man_bits <= 10) return fp16;
  }
  throw ConfigError("Tensor-Core-like baseline has no format wide enough for " + to_string(f));
}

int bitfusion_width(const FormatSpec& f) {
  const int bits = f.is_float() ? f.man_bits + 1 : f.total_bits();
  const int w = static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(bits, 2))));
  if (w > 16) throw ConfigError("BitFusion-like baseline cannot fuse " + to_string(f));
  return w;
}

int bitfusion_storage(const FormatSpec& f) {
  const int w = static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(f.total_bits(), 2))));
  if (w > 16) throw ConfigError("BitFusion-like baseline cannot store " + to_string(f));
  return w;
}

}  // namespace

std::pair<FormatSpec, FormatSpec> tensor_core_formats(const FormatSpec& a, const FormatSpec& w) {
  FormatSpec ua = tc_single(a);
  FormatSpec uw = tc_single(w);
  if (!(ua == uw)) {
    // Mixed pairs meet at FP16, which holds both FP8 values and 8-bit integers exactly.
    ua = FormatSpec::fp(5, 10);
    uw = ua;
  }
  return {ua, uw};
}

MachineModel flexibit_model(const GemmWorkload& w, const PEConfig& cfg, Storage storage) {
  MachineModel m;
  m.arch = ArchKind::FlexiBit;
  m.throughput = pe_throughput(w.fmt_a, w.fmt_w, cfg);
  const bool packed = storage == Storage::Packed;
  m.bits_a = packed ? w.fmt_a.total_bits() : padded_container_bits(w.fmt_a);
  m.bits_w = packed ? w.fmt_w.total_bits() : padded_container_bits(w.fmt_w);
  m.bits_o = packed ? w.fmt_o.total_bits() : padded_container_bits(w.fmt_o);
  m.prims_per_mac = prims_per_mac(w.fmt_a, w.fmt_w);
  m.exp_add_bits = exp_add_bits(w.fmt_a, w.fmt_w);
  m.tree_levels = std::bit_width(std::bit_ceil(static_cast<unsigned>(cfg.l_prim))) - 1;
  return m;
}

MachineModel baseline_model(const GemmWorkload& w, ArchKind kind, const PEConfig& cfg) {
  if (kind == ArchKind::FlexiBit) return flexibit_model(w, cfg);
  MachineModel m;
  m.arch = kind;
  m.tree_levels = std::bit_width(std::bit_ceil(static_cast<unsigned>(cfg.l_prim))) - 1;
  if (kind == ArchKind::TensorCoreLike) {
    const auto [ua, uw] = tensor_core_formats(w.fmt_a, w.fmt_w);
    const FormatSpec uo = tc_single(w.fmt_o);
    const int per_reg = cfg.reg_width / ua.total_bits();
    m.throughput = per_reg * per_reg;
    m.bits_a = ua.total_bits();
    m.bits_w = uw.total_bits();
    m.bits_o = uo.total_bits();
    m.prims_per_mac = prims_per_mac(ua, uw);
    m.exp_add_bits = exp_add_bits(ua, uw);
  } else {
    const int wa = bitfusion_width(w.fmt_a);
    const int ww = bitfusion_width(w.fmt_w);
    const double bricks = (wa / 2) * (ww / 2);
    const double budget = cfg.l_prim / 4.0;  // 2x2-bit bricks with the same AND-gate count
    m.throughput = budget / bricks;
    m.bits_a = bitfusion_storage(w.fmt_a);
    m.bits_w = bitfusion_storage(w.fmt_w);
    m.bits_o = bitfusion_storage(w.fmt_o);
    m.prims_per_mac = bricks * 4;
    m.exp_add_bits = exp_add_bits(w.fmt_a, w.fmt_w);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Roofline skeleton

namespace {

struct Cost {
  double cycles = 0;
  double compute = 0;
  double dram_cyc = 0;
  double noc_cyc = 0;
  double dram_rd = 0;
  double dram_wr = 0;
  double noc_w = 0;
  double noc_a = 0;
  double noc_o_rd = 0;
  double noc_o_wr = 0;
};

struct Block {
  std::int64_t size;
  bool first;
  bool last;
  std::int64_t count;
};

/// Block classes of a dimension split into tiles of `t`: the first block,
/// the full middle blocks and the last (possibly partial) block.
std::vector<Block> block_classes(std::int64_t dim, std::int64_t t) {
  const std::int64_t n = ceil_div(dim, t);
  const std::int64_t last = dim - (n - 1) * t;
  if (n == 1) return {{dim, true, true, 1}};
  std::vector<Block> out{{t, true, false, 1}};
  if (n > 2) out.push_back({t, false, false, n - 2});
  out.push_back({last, false, true, 1});
  return out;
}

/// Sum over the blocks of `dim` split by `t` of f(block size).
template <class F>
double over_blocks(std::int64_t dim, std::int64_t t, F f) {
  const std::int64_t full = dim / t;
  const std::int64_t rem = dim - full * t;
  double s = static_cast<double>(full) * f(t);
  if (rem > 0) s += f(rem);
  return s;
}

struct Env {
  const GemmWorkload* w;
  const AcceleratorConfig* acc;
  const MachineModel* m;
  double glb_w;
  double glb_ao;
  double local;
  // Compute tile held by the array: WS (k, n), OS (m, n).
  std::int64_t sub_1 = 1;
  std::int64_t sub_2 = 1;
  // Element sizes used for buffer-fit decisions; null means the traffic model's own sizes.
  const MachineModel* fit = nullptr;
};

/// Array-level compute tile. Each PE keeps a x b stationary elements
/// (weights for WS, outputs for OS) in its local buffer; the tile shape with
/// the lowest per-MAC time (compute or NoC) wins.
void choose_compute_tile(Env& env, Dataflow df) {
  const GemmWorkload& w = *env.w;
  const AcceleratorConfig& acc = *env.acc;
  const MachineModel& mm = *env.m;
  const bool ws = df == Dataflow::WeightStationary;
  const double held_bits = ws ? mm.bits_w : mm.bits_o;
  const auto cap = static_cast<std::int64_t>(std::floor(env.local / held_bits));
  if (cap < 1) throw ConfigError("PE local buffer cannot hold one stationary element on " + acc.name);

  const std::int64_t d1 = ws ? w.K : w.M;
  const std::int64_t d2 = w.N;
  const std::int64_t span1 = ws ? acc.array_y : acc.array_x;
  const std::int64_t span2 = ws ? acc.array_x : acc.array_y;

  std::vector<std::int64_t> as;
  for (std::int64_t p = 1; p <= cap; p *= 2) {
    as.push_back(p);
    as.push_back(std::max<std::int64_t>(1, cap / p));
  }
  std::sort(as.begin(), as.end());
  as.erase(std::unique(as.begin(), as.end()), as.end());

  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_area = 0;
  for (std::int64_t a : as) {
    const std::int64_t b = cap / a;
    const std::int64_t t1 = std::min(a * span1, d1);
    const std::int64_t t2 = std::min(b * span2, d2);
    const double macs = static_cast<double>(t1) * static_cast<double>(t2);
    const double compute =
        static_cast<double>(ceil_div(t1, span1) * ceil_div(t2, span2)) / mm.throughput / macs;
    double noc = 0;
    if (ws) {
      noc = (mm.bits_a / static_cast<double>(t2) + 2.0 * mm.bits_o / static_cast<double>(t1)) /
            acc.noc_a_bits_per_cycle();
    } else {
      noc = std::max(mm.bits_a / static_cast<double>(t2) / acc.noc_a_bits_per_cycle(),
                     mm.bits_w / static_cast<double>(t1) / acc.noc_w_bits_per_cycle());
    }
    const double cost = std::max(compute, noc);
    const std::int64_t area = t1 * t2;
    if (cost < best || (cost == best && area > best_area)) {
      best = cost;
      best_area = area;
      env.sub_1 = t1;
      env.sub_2 = t2;
    }
  }
}

bool evaluate(const Env& env, Dataflow df, std::int64_t tm, std::int64_t tn, std::int64_t tk, Cost& cost,
              TilePlan& plan) {
  const GemmWorkload& w = *env.w;
  const AcceleratorConfig& acc = *env.acc;
  const MachineModel& mm = *env.m;
  const double pa = mm.bits_a;
  const double pw = mm.bits_w;
  const double po = mm.bits_o;
  const MachineModel& fm = env.fit != nullptr ? *env.fit : mm;
  const double fa = fm.bits_a;
  const double fw = fm.bits_w;
  const double fo = fm.bits_o;
  const auto X = static_cast<std::int64_t>(acc.array_x);
  const auto Y = static_cast<std::int64_t>(acc.array_y);
  const double M = static_cast<double>(w.M);
  const double N = static_cast<double>(w.N);
  const double K = static_cast<double>(w.K);
  const double tput = mm.throughput;
  const double dram_bw = acc.offchip_bits_per_cycle();
  const double nocw_bw = acc.noc_w_bits_per_cycle();
  const double noca_bw = acc.noc_a_bits_per_cycle();

  cost = {};
  plan = {};
  plan.dataflow = df;
  plan.tile_m = tm;
  plan.tile_n = tn;
  plan.tile_k = tk;
  const std::int64_t nm = ceil_div(w.M, tm);
  const std::int64_t nn = ceil_div(w.N, tn);
  const std::int64_t nk = ceil_div(w.K, tk);
  plan.steps = nm * nn * nk;

  auto add_phase = [&](double count, double compute, double rd, double wr, double nw, double na, double no_rd,
                       double no_wr) {
    const double dram = (rd + wr) / dram_bw;
    const double noc = std::max(nw / nocw_bw, (na + no_rd + no_wr) / noca_bw);
    cost.cycles += count * std::max({compute, std::ceil(dram), std::ceil(noc)});
    cost.compute += count * compute;
    cost.dram_cyc += count * dram;
    cost.noc_cyc += count * noc;
    cost.dram_rd += count * rd;
    cost.dram_wr += count * wr;
    cost.noc_w += count * nw;
    cost.noc_a += count * na;
    cost.noc_o_rd += count * no_rd;
    cost.noc_o_wr += count * no_wr;
  };

  const double dtm = static_cast<double>(tm);
  const double dtn = static_cast<double>(tn);
  const double dtk = static_cast<double>(tk);
  if (dtm * dtk * fa + dtm * dtn * fo > env.glb_ao) return false;

  if (df == Dataflow::WeightStationary) {
    if (dtk * dtn * fw > env.glb_w) return false;
    plan.act_resident = M * K * fa + dtm * dtn * fo <= env.glb_ao;
    plan.out_resident = dtm * dtk * fa + M * dtn * fo <= env.glb_ao;
    plan.weight_reuse = static_cast<double>(nm);
    plan.output_reuse = 1;
    plan.sub_k = std::min(env.sub_1, tk);
    plan.sub_n = std::min(env.sub_2, tn);
    plan.sub_m = tm;

    for (const Block& nb : block_classes(w.N, tn)) {
      for (const Block& kb : block_classes(w.K, tk)) {
        const double bn = static_cast<double>(nb.size);
        const double bk = static_cast<double>(kb.size);
        const std::int64_t sk = std::min(env.sub_1, kb.size);
        const std::int64_t sn = std::min(env.sub_2, nb.size);
        const double rows_k = over_blocks(kb.size, sk, [&](std::int64_t t) { return double(ceil_div(t, Y)); });
        const double cols_n = over_blocks(nb.size, sn, [&](std::int64_t t) { return double(ceil_div(t, X)); });
        const double sub_k = static_cast<double>(ceil_div(kb.size, sk));
        const double sub_n = static_cast<double>(ceil_div(nb.size, sn));
        const double compute = over_blocks(
            w.M, tm, [&](std::int64_t t) { return std::ceil(static_cast<double>(t) * rows_k * cols_n / tput); });

        double rd = bk * bn * pw;
        rd += plan.act_resident ? (nb.first ? M * bk * pa : 0.0) : M * bk * pa;
        const bool spill = nk > 1 && !plan.out_resident;
        if (spill && !kb.first) rd += M * bn * po;
        const double wr = (spill || kb.last) ? M * bn * po : 0.0;

        const double noc_w = static_cast<double>(nm) * bk * bn * pw;
        const double noc_a = M * bk * pa * sub_n;
        const double no_wr = M * bn * po * sub_k;
        const double no_rd = M * bn * po * (sub_k - 1 + (kb.first ? 0 : 1));
        add_phase(static_cast<double>(nb.count * kb.count), compute, rd, wr, noc_w, noc_a, no_rd, no_wr);
      }
    }
  } else {
    // K streams through the array while outputs stay in the PEs.
    if (tk != w.K) return false;
    const bool w_all = K * N * fw <= env.glb_w;
    const bool w_panel = K * dtn * fw <= env.glb_w;
    plan.act_resident = dtm * K * fa + dtm * dtn * fo <= env.glb_ao;
    plan.out_resident = true;
    plan.weight_reuse = w_all ? static_cast<double>(nm) : 1.0;
    plan.output_reuse = K;
    plan.sub_m = std::min(env.sub_1, tm);
    plan.sub_n = std::min(env.sub_2, tn);
    plan.sub_k = tk;

    for (const Block& mb : block_classes(w.M, tm)) {
      for (const Block& nb : block_classes(w.N, tn)) {
        const double bm = static_cast<double>(mb.size);
        const double bn = static_cast<double>(nb.size);
        const std::int64_t sm = std::min(env.sub_1, mb.size);
        const std::int64_t sn = std::min(env.sub_2, nb.size);
        const double rows_m = over_blocks(mb.size, sm, [&](std::int64_t t) { return double(ceil_div(t, X)); });
        const double cols_n = over_blocks(nb.size, sn, [&](std::int64_t t) { return double(ceil_div(t, Y)); });
        const double sub_m = static_cast<double>(ceil_div(mb.size, sm));
        const double sub_n = static_cast<double>(ceil_div(nb.size, sn));
        const double compute = std::ceil(rows_m * cols_n * K / tput);

        double rd = plan.act_resident ? (nb.first ? bm * K * pa : 0.0) : bm * K * pa * sub_n;
        if (w_all) {
          rd += mb.first ? K * bn * pw : 0.0;
        } else {
          rd += w_panel ? K * bn * pw : K * bn * pw * sub_m;
        }
        const double wr = bm * bn * po;
        add_phase(static_cast<double>(mb.count * nb.count), compute, rd, wr, K * bn * pw * sub_m, bm * K * pa * sub_n,
                  0.0, bm * bn * po);
      }
    }
  }
  return true;
}

std::vector<std::int64_t> tile_candidates(std::int64_t dim) {
  std::vector<std::int64_t> c{dim};
  for (std::int64_t p = 1; p < dim; p *= 2) c.push_back(p);
  for (std::int64_t d = 2; d <= 8; ++d) c.push_back(ceil_div(dim, d));
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

std::pair<TilePlan, Cost> search(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df,
                                 const MachineModel& m) {
  w.validate();
  acc.validate();
  Env env{&w, &acc, &m, acc.wgt_glb_bytes * 8, acc.act_out_glb_bytes * 8,
          std::floor(acc.local_buf_bytes_per_pe * 8)};
  choose_compute_tile(env, df);

  TilePlan best_plan;
  Cost best;
  bool found = false;
  double best_vol = 0;
  const auto cm = tile_candidates(w.M);
  const auto cn = tile_candidates(w.N);
  const std::vector<std::int64_t> ck =
      df == Dataflow::OutputStationary ? std::vector<std::int64_t>{w.K} : tile_candidates(w.K);
  TilePlan plan;
  Cost cost;
  for (auto tm : cm) {
    for (auto tn : cn) {
      for (auto tk : ck) {
        if (!evaluate(env, df, tm, tn, tk, cost, plan)) continue;
        const double vol = static_cast<double>(tm) * static_cast<double>(tn) * static_cast<double>(tk);
        if (!found || cost.cycles < best.cycles || (cost.cycles == best.cycles && vol > best_vol)) {
          best = cost;
          best_plan = plan;
          best_vol = vol;
          found = true;
        }
      }
    }
  }
  if (!found) {
    throw ConfigError("no tiling of " + w.label + " fits the buffers of " + acc.name + " under " + to_string(df));
  }
  return {best_plan, best};
}

/// Costs `w` on model `m` under the mapping `fixed` that was planned for `fit`.
Cost replay(const GemmWorkload& w, const AcceleratorConfig& acc, const MachineModel& m, const MachineModel& fit,
            const TilePlan& fixed) {
  Env env{&w, &acc, &m, acc.wgt_glb_bytes * 8, acc.act_out_glb_bytes * 8,
          std::floor(acc.local_buf_bytes_per_pe * 8)};
  const bool ws = fixed.dataflow == Dataflow::WeightStationary;
  env.sub_1 = ws ? fixed.sub_k : fixed.sub_m;
  env.sub_2 = fixed.sub_n;
  env.fit = &fit;
  Cost cost;
  TilePlan plan;
  evaluate(env, fixed.dataflow, fixed.tile_m, fixed.tile_n, fixed.tile_k, cost, plan);
  return cost;
}

SimReport make_report(const GemmWorkload& w, const AcceleratorConfig& acc, const MachineModel& m,
                      const TilePlan& plan, const Cost& c);

}  // namespace
TilePlan plan_tiles(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const MachineModel& model) {
  return search(w, acc, df, model).first;
}

TilePlan plan_tiles(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df) {
  return plan_tiles(w, acc, df, flexibit_model(w, acc.pe_config()));
}

SimReport simulate_model(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const MachineModel& m) {
  const auto [plan, c] = search(w, acc, df, m);
  return make_report(w, acc, m, plan, c);
}

namespace {

SimReport make_report(const GemmWorkload& w, const AcceleratorConfig& acc, const MachineModel& m,
                      const TilePlan& plan, const Cost& c) {
  const double count = static_cast<double>(w.count);

  SimReport r;
  r.machine = acc.name;
  r.arch = m.arch;
  r.workload = w.label;
  r.plan = plan;
  r.pe_throughput = m.throughput;
  r.cycles = count * c.cycles + kReconfigCycles;
  r.seconds = r.cycles / acc.clock_hz;
  r.dram_bits_read = count * c.dram_rd;
  r.dram_bits_written = count * c.dram_wr;
  r.noc_bits = count * (c.noc_w + c.noc_a + c.noc_o_rd + c.noc_o_wr);
  const double macs = w.macs();
  r.macs_per_cycle = macs / r.cycles;
  r.pe_util = std::min(1.0, macs / (r.cycles * acc.num_pes * m.throughput));
  r.breakdown["compute_cycles"] = count * c.compute;
  r.breakdown["dram_cycles"] = count * c.dram_cyc;
  r.breakdown["noc_cycles"] = count * c.noc_cyc;
  r.breakdown["reconfig_cycles"] = kReconfigCycles;

  ActionCounts& a = r.actions;
  a.macs = macs;
  a.prim_ands = macs * m.prims_per_mac;
  a.tree_bit_ops = a.prim_ands * m.tree_levels;
  a.fbea_bit_ops = m.exp_add_bits > 0 ? macs * (m.exp_add_bits + 1) : 0.0;
  a.noc_bits = r.noc_bits;
  a.dram_bits = r.dram_bits_read + r.dram_bits_written;
  a.sram_rd_bits = count * (c.noc_w + c.noc_a + c.noc_o_rd + c.dram_wr);
  a.sram_wr_bits = count * (c.dram_rd + c.noc_o_wr);
  return r;
}

}  // namespace

SimReport simulate(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df, const PEConfig& pe_cfg) {
  return simulate_model(w, acc, df, flexibit_model(w, pe_cfg));
}

SimReport simulate(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df) {
  return simulate(w, acc, df, acc.pe_config());
}

SimReport simulate_best(const GemmWorkload& w, const AcceleratorConfig& acc, const MachineModel& model) {
  SimReport ws = simulate_model(w, acc, Dataflow::WeightStationary, model);
  SimReport os = simulate_model(w, acc, Dataflow::OutputStationary, model);
  return os.cycles < ws.cycles ? os : ws;
}

SimReport simulate_baseline(const GemmWorkload& w, const AcceleratorConfig& acc, ArchKind kind, Dataflow df) {
  return simulate_model(w, acc, df, baseline_model(w, kind, acc.pe_config()));
}

double AblationResult::latency_improvement() const { return 1.0 - packed.cycles / padded.cycles; }

namespace {

AblationResult ablate_with(const GemmWorkload& w, const AcceleratorConfig& acc, SimReport packed) {
  const MachineModel pk = flexibit_model(w, acc.pe_config(), Storage::Packed);
  const MachineModel padded = flexibit_model(w, acc.pe_config(), Storage::Padded);
  SimReport pad = make_report(w, acc, padded, packed.plan, replay(w, acc, padded, pk, packed.plan));
  return {std::move(packed), std::move(pad)};
}

}  // namespace

AblationResult packing_ablation(const GemmWorkload& w, const AcceleratorConfig& acc, Dataflow df) {
  return ablate_with(w, acc, simulate_model(w, acc, df, flexibit_model(w, acc.pe_config(), Storage::Packed)));
}

AblationResult packing_ablation(const GemmWorkload& w, const AcceleratorConfig& acc) {
  return ablate_with(w, acc, simulate_best(w, acc, flexibit_model(w, acc.pe_config(), Storage::Packed)));
}

SimReport combine(const std::vector<SimReport>& parts) {
  SimReport r;
  if (parts.empty()) return r;
  r.machine = parts.front().machine;
  r.arch = parts.front().arch;
  r.workload = "combined";
  double util_weighted = 0;
  for (const auto& p : parts) {
    r.cycles += p.cycles;
    r.seconds += p.seconds;
    r.energy_j += p.energy_j;
    r.dram_bits_read += p.dram_bits_read;
    r.dram_bits_written += p.dram_bits_written;
    r.noc_bits += p.noc_bits;
    r.precision_loss_events += p.precision_loss_events;
    util_weighted += p.pe_util * p.cycles;
    for (const auto& [k, v] : p.breakdown) r.breakdown[k] += v;
    r.actions.macs += p.actions.macs;
    r.actions.prim_ands += p.actions.prim_ands;
    r.actions.tree_bit_ops += p.actions.tree_bit_ops;
    r.actions.fbea_bit_ops += p.actions.fbea_bit_ops;
    r.actions.sram_rd_bits += p.actions.sram_rd_bits;
    r.actions.sram_wr_bits += p.actions.sram_wr_bits;
    r.actions.noc_bits += p.actions.noc_bits;
    r.actions.dram_bits += p.actions.dram_bits;
  }
  r.pe_util = r.cycles > 0 ? util_weighted / r.cycles : 0;
  r.macs_per_cycle = r.cycles > 0 ? r.actions.macs / r.cycles : 0;
  return r;
}

}  // namespace flexibit
