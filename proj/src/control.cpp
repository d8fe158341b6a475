// SPDX-License-Identifier: Apache-2.0
#include "flexibit/control.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

int next_pow2(int n) {
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(n, 1))));
}

}  // namespace

// ---------------------------------------------------------------------------
// Separator

int SeparatorPlan::sign_bits_used() const {
  return static_cast<int>(std::count_if(routes.begin(), routes.end(),
                                        [](const SepRoute& r) { return r.dest == SepDest::Sign; }));
}

int SeparatorPlan::exp_bits_used() const {
  return static_cast<int>(std::count_if(routes.begin(), routes.end(),
                                        [](const SepRoute& r) { return r.dest == SepDest::Exp; }));
}

int SeparatorPlan::man_bits_used() const {
  return static_cast<int>(std::count_if(routes.begin(), routes.end(),
                                        [](const SepRoute& r) { return r.dest == SepDest::Man; }));
}

int elements_per_register(const FormatSpec& fmt, const PEConfig& cfg) {
  fmt.validate();
  const int p = fmt.total_bits();
  const int s = fmt.sign_bits();
  const int e = fmt.exp_bits;
  const int m = fmt.man_bits;
  if (p > cfg.reg_width || s > cfg.r_s || e > cfg.r_e || m > cfg.r_m) {
    throw CapacityError("format " + to_string(fmt) + " does not fit one PE register load");
  }
  int n = cfg.reg_width / p;
  if (s > 0) n = std::min(n, cfg.r_s / s);
  if (e > 0) n = std::min(n, cfg.r_e / e);
  if (m > 0) n = std::min(n, cfg.r_m / m);
  return n;
}

SeparatorPlan compile_separator(const FormatSpec& fmt, const PEConfig& cfg) {
  SeparatorPlan plan;
  plan.fmt = fmt;
  plan.elements = elements_per_register(fmt, cfg);
  plan.routes.assign(static_cast<std::size_t>(cfg.reg_width), SepRoute{});

  const int p = fmt.total_bits();
  const int s = fmt.sign_bits();
  int next_sign = 0;
  int next_exp = 0;
  int next_man = 0;
  for (int i = 0; i < plan.elements * p; ++i) {
    const int bit = i % p;
    SepRoute& r = plan.routes[static_cast<std::size_t>(i)];
    if (bit < s) {
      r = {SepDest::Sign, next_sign++};
    } else if (bit < s + fmt.exp_bits) {
      r = {SepDest::Exp, next_exp++};
    } else {
      r = {SepDest::Man, next_man++};
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Primitive generator

int PrimGenPlan::ops_in_cycle(int cycle) const {
  if (cycle < 0 || cycle >= cycles) return 0;
  return std::min(ops_per_cycle, total_ops - cycle * ops_per_cycle);
}

PrimGenPlan compile_primgen(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg) {
  PrimGenPlan plan;
  plan.act_man_bits = fmt_a.man_bits;
  plan.wgt_man_bits = fmt_w.man_bits;
  plan.num_acts = elements_per_register(fmt_a, cfg);
  plan.num_wgts = elements_per_register(fmt_w, cfg);
  plan.total_ops = plan.num_acts * plan.num_wgts;

  const int p = plan.act_man_bits;
  const int q = plan.wgt_man_bits;
  const int pq = p * q;
  plan.ops_per_cycle = pq == 0 ? plan.total_ops : std::min(plan.total_ops, cfg.l_prim / pq);
  if (plan.ops_per_cycle <= 0) {
    throw CapacityError("one multiplication needs more primitives than the primitive register holds");
  }
  plan.cycles = (plan.total_ops + plan.ops_per_cycle - 1) / plan.ops_per_cycle;

  const auto lprim = static_cast<std::size_t>(cfg.l_prim);
  plan.oids.assign(lprim, -1);
  plan.sids.assign(lprim, -1);
  for (int slot = 0; slot < plan.ops_per_cycle && pq > 0; ++slot) {
    for (int j = 0; j < q; ++j) {
      for (int i = 0; i < p; ++i) {
        const auto b = static_cast<std::size_t>(slot * pq + j * p + i);
        plan.oids[b] = slot;
        plan.sids[b] = j;
      }
    }
  }

  plan.routes.assign(static_cast<std::size_t>(plan.cycles), std::vector<PrimSource>(lprim));
  for (int c = 0; c < plan.cycles && pq > 0; ++c) {
    for (int slot = 0; slot < plan.ops_in_cycle(c); ++slot) {
      const OpSlot op = plan.op_pair(c * plan.ops_per_cycle + slot);
      for (int j = 0; j < q; ++j) {
        for (int i = 0; i < p; ++i) {
          const auto b = static_cast<std::size_t>(slot * pq + j * p + i);
          // Mantissa registers hold each element MSB first.
          plan.routes[static_cast<std::size_t>(c)][b] = {op.act * p + (p - 1 - i), op.wgt * q + (q - 1 - j)};
        }
      }
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// FBRT

std::string to_string(SwitchMode m) {
  switch (m.mode) {
    case NodeMode::Idle: return "I";
    case NodeMode::D: return "D";
    case NodeMode::C2: return "C2";
    case NodeMode::C3: return "C3";
    case NodeMode::A2: return "A2";
    case NodeMode::A3: return "A3";
    case NodeMode::ConcatAdd: return m.side == LinkSide::Left ? "CAL" : "CAR";
  }
  return "?";
}

bool FbrtPlan::has_additional_link(int level, int node) const {
  return level >= 1 && level < levels && node % 2 == 1 && node + 1 < nodes_at(level);
}

namespace {

struct Label {
  int oid;
  int sid;  // kSummedSegment once two segments have been added
};

void check_runs(std::span<const int> oids, std::span<const int> sids) {
  if (oids.size() != sids.size()) throw ControlError("oid and sid arrays differ in length");
  int last_oid = -1;
  int last_sid = -1;
  bool in_idle = false;
  std::vector<bool> seen_oid;
  for (std::size_t k = 0; k < oids.size(); ++k) {
    const int o = oids[k];
    if (o < 0) {
      in_idle = true;
      continue;
    }
    if (sids[k] < 0) throw ControlError("active leaf without a segment id");
    if (o != last_oid) {
      if (o < last_oid) throw ControlError("output ids must be non-decreasing across leaves");
      last_oid = o;
      last_sid = sids[k];
    } else {
      if (in_idle) throw ControlError("output id run interrupted by idle leaves");
      if (sids[k] < last_sid) throw ControlError("segment ids must be non-decreasing within one output");
      last_sid = sids[k];
    }
    in_idle = false;
  }
}

}  // namespace

FbrtPlan compile_fbrt(std::span<const int> oids, std::span<const int> sids, const PEConfig& cfg) {
  return compile_fbrt(oids, sids, next_pow2(std::max<int>(cfg.l_prim, static_cast<int>(oids.size()))));
}

FbrtPlan compile_fbrt(std::span<const int> oids, std::span<const int> sids, int leaves) {
  check_runs(oids, sids);
  if (leaves < static_cast<int>(oids.size()) || !std::has_single_bit(static_cast<unsigned>(std::max(leaves, 1)))) {
    throw ControlError("leaf count must be a power of two covering every primitive");
  }

  FbrtPlan plan;
  plan.leaves = std::max(leaves, 1);
  plan.levels = std::countr_zero(static_cast<unsigned>(plan.leaves));
  const auto n = static_cast<std::size_t>(plan.leaves);
  plan.leaf_oids.assign(n, -1);
  plan.leaf_sids.assign(n, -1);
  plan.leaf_lo.assign(n, -1);
  for (std::size_t k = 0; k < oids.size(); ++k) {
    if (oids[k] < 0) continue;
    plan.leaf_oids[k] = oids[k];
    plan.leaf_sids[k] = sids[k];
    const bool continues = k > 0 && oids[k - 1] == oids[k] && sids[k - 1] == sids[k];
    plan.leaf_lo[k] = continues ? plan.leaf_lo[k - 1] + 1 : 0;
  }

  std::vector<std::vector<Label>> below(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (plan.leaf_oids[k] >= 0) below[k].push_back({plan.leaf_oids[k], plan.leaf_sids[k]});
  }

  plan.modes.assign(static_cast<std::size_t>(plan.levels) + 1, {});
  for (int level = 1; level <= plan.levels; ++level) {
    const int count = plan.nodes_at(level);
    std::vector<std::vector<Label>> here(static_cast<std::size_t>(count));
    auto& modes = plan.modes[static_cast<std::size_t>(level)];
    modes.assign(static_cast<std::size_t>(count), SwitchMode{});

    for (int j = count - 1; j >= 0; --j) {
      const auto& left = below[static_cast<std::size_t>(2 * j)];
      const auto& right = below[static_cast<std::size_t>(2 * j + 1)];
      auto& out = here[static_cast<std::size_t>(j)];
      SwitchMode& mode = modes[static_cast<std::size_t>(j)];

      if (left.empty() && right.empty()) continue;  // Idle
      const bool share_oid = !left.empty() && !right.empty() && left.back().oid == right.front().oid;
      if (!share_oid) {
        mode = {NodeMode::D, LinkSide::None};
        out = left;
        out.insert(out.end(), right.begin(), right.end());
        continue;
      }

      const Label lb = left.back();
      const Label rf = right.front();
      const bool share_sid = lb.sid >= 0 && lb.sid == rf.sid;

      std::vector<Label>* neighbour = nullptr;
      bool nb_oid = false;
      bool nb_sid = false;
      if (plan.has_additional_link(level, j) && right.size() == 1) {
        neighbour = &here[static_cast<std::size_t>(j + 1)];
        if (!neighbour->empty() && neighbour->front().oid == lb.oid) {
          nb_oid = true;
          nb_sid = rf.sid >= 0 && neighbour->front().sid == rf.sid;
        }
      }

      int merged_sid = kSummedSegment;
      if (share_sid) {
        if (nb_oid && nb_sid) {
          mode = {NodeMode::C3, LinkSide::Right};
          merged_sid = lb.sid;
        } else if (nb_oid) {
          mode = {NodeMode::ConcatAdd, LinkSide::Left};
        } else {
          mode = {NodeMode::C2, LinkSide::None};
          merged_sid = lb.sid;
        }
      } else {
        if (nb_oid && nb_sid) {
          mode = {NodeMode::ConcatAdd, LinkSide::Right};
        } else if (nb_oid) {
          mode = {NodeMode::A3, LinkSide::Right};
        } else {
          mode = {NodeMode::A2, LinkSide::None};
        }
      }

      out.assign(left.begin(), left.end() - 1);
      out.push_back({lb.oid, merged_sid});
      out.insert(out.end(), right.begin() + 1, right.end());
      if (nb_oid) neighbour->erase(neighbour->begin());
    }
    below = std::move(here);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// FBEA

FbeaPlan compile_fbea_width(int add_width, int l_add) {
  FbeaPlan plan;
  plan.breaks.resize(static_cast<std::size_t>(std::max(l_add, 0)));
  if (add_width <= 0) return plan;
  plan.add_width = add_width;
  plan.segment_width = add_width + 1;
  plan.segments = l_add / plan.segment_width;
  if (plan.segments == 0) throw CapacityError("exponent adder narrower than one segment");
  for (int i = 0; i < l_add; ++i) {
    if ((i + 1) % plan.segment_width == 0) plan.breaks.set(static_cast<std::size_t>(i));
  }
  return plan;
}

FbeaPlan compile_fbea(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg) {
  if (fmt_a.is_int() || fmt_w.is_int()) return compile_fbea_width(0, cfg.l_add);
  return compile_fbea_width(std::max(fmt_a.exp_bits, fmt_w.exp_bits), cfg.l_add);
}

// ---------------------------------------------------------------------------
// Accumulation path

AccumPlan compile_accum(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const PEConfig& cfg) {
  AccumPlan plan;
  if (fmt_a.is_int()) {
    plan.frac_bits = 0;
    plan.product_width = fmt_a.total_bits() + fmt_w.total_bits();
    plan.guard_bits = 0;
  } else {
    plan.frac_bits = fmt_a.man_bits + fmt_w.man_bits;
    plan.product_width = plan.frac_bits + 2;
    plan.guard_bits = plan.product_width;
  }
  plan.segment_width = plan.product_width + plan.guard_bits;
  plan.terms_per_pass = cfg.l_cst / plan.segment_width;
  if (plan.terms_per_pass == 0) throw CapacityError("concat-shift tree narrower than one aligned product");
  if (plan.segment_width > 62) throw CapacityError("aligned product wider than the modelled CST segment");

  std::vector<int> oids(static_cast<std::size_t>(cfg.l_cst), -1);
  std::vector<int> sids(static_cast<std::size_t>(cfg.l_cst), -1);
  for (int t = 0; t < plan.terms_per_pass; ++t) {
    for (int b = 0; b < plan.segment_width; ++b) {
      const auto k = static_cast<std::size_t>(t * plan.segment_width + b);
      oids[k] = t;
      sids[k] = 0;
    }
  }
  plan.cst = compile_fbrt(oids, sids, next_pow2(cfg.l_cst));
  return plan;
}

// ---------------------------------------------------------------------------
// Bundle

ControlBundle compile_bundle(const FormatSpec& fmt_a, const FormatSpec& fmt_w, const FormatSpec& out_fmt,
                             const PEConfig& cfg) {
  cfg.validate();
  fmt_a.validate();
  fmt_w.validate();
  out_fmt.validate();
  if (fmt_a.kind != fmt_w.kind) {
    throw ConfigError("PE operands must both be floating point or both be integers");
  }
  if (fmt_a.total_bits() > cfg.r_m + cfg.r_e || fmt_w.total_bits() > cfg.r_m + cfg.r_e) {
    throw CapacityError("operand wider than the mantissa and exponent registers combined");
  }

  ControlBundle b;
  b.act_fmt = fmt_a;
  b.wgt_fmt = fmt_w;
  b.out_fmt = out_fmt;
  b.cfg = cfg;
  b.act_sep = compile_separator(fmt_a, cfg);
  b.wgt_sep = compile_separator(fmt_w, cfg);
  b.prim = compile_primgen(fmt_a, fmt_w, cfg);
  b.fbrt = compile_fbrt(b.prim.oids, b.prim.sids, cfg);
  b.fbea = compile_fbea(fmt_a, fmt_w, cfg);
  b.accum = compile_accum(fmt_a, fmt_w, cfg);
  return b;
}

namespace {

char dest_char(SepDest d) {
  switch (d) {
    case SepDest::Sign: return 'S';
    case SepDest::Exp: return 'E';
    case SepDest::Man: return 'M';
    case SepDest::Inactive: return '-';
  }
  return '?';
}

void write_separator(std::ostream& os, const char* name, const SeparatorPlan& sep) {
  os << "[separator." << name << "]\n";
  os << "format " << to_string(sep.fmt) << "\n";
  os << "elements " << sep.elements << "\n";
  os << "routes";
  for (const auto& r : sep.routes) {
    os << ' ' << dest_char(r.dest);
    if (r.dest != SepDest::Inactive) os << r.index;
  }
  os << "\n";
}

void write_ints(std::ostream& os, const char* key, const std::vector<int>& v) {
  os << key;
  for (int x : v) os << ' ' << x;
  os << "\n";
}

void write_tree(std::ostream& os, const char* name, const FbrtPlan& t) {
  os << "[" << name << "]\n";
  os << "leaves " << t.leaves << "\n";
  for (int l = 1; l <= t.levels; ++l) {
    os << "level " << l;
    for (const auto& m : t.modes[static_cast<std::size_t>(l)]) os << ' ' << to_string(m);
    os << "\n";
  }
}

}  // namespace

std::string serialize(const ControlBundle& b) {
  std::ostringstream os;
  os << "flexibit-control-bundle 1\n";
  os << "act " << to_string(b.act_fmt) << "\n";
  os << "wgt " << to_string(b.wgt_fmt) << "\n";
  os << "out " << to_string(b.out_fmt) << "\n";
  os << "pe reg_width=" << b.cfg.reg_width << " r_m=" << b.cfg.r_m << " r_e=" << b.cfg.r_e << " r_s=" << b.cfg.r_s
     << " l_prim=" << b.cfg.l_prim << " l_add=" << b.cfg.l_add << " l_acc=" << b.cfg.l_acc
     << " l_cst=" << b.cfg.l_cst << "\n";
  os << "reconfig_cycles " << b.reconfig_cycles << "\n";
  write_separator(os, "act", b.act_sep);
  write_separator(os, "wgt", b.wgt_sep);

  os << "[primgen]\n";
  os << "p " << b.prim.act_man_bits << " q " << b.prim.wgt_man_bits << " acts " << b.prim.num_acts << " wgts "
     << b.prim.num_wgts << " ops " << b.prim.total_ops << " ops_per_cycle " << b.prim.ops_per_cycle << " cycles "
     << b.prim.cycles << "\n";
  for (std::size_t c = 0; c < b.prim.routes.size(); ++c) {
    os << "cycle " << c;
    for (const auto& src : b.prim.routes[c]) {
      if (!src.active()) break;
      os << ' ' << src.act_bit << '&' << src.wgt_bit;
    }
    os << "\n";
  }
  write_ints(os, "oids", b.prim.oids);
  write_ints(os, "sids", b.prim.sids);

  write_tree(os, "fbrt", b.fbrt);

  os << "[fbea]\n";
  os << "add_width " << b.fbea.add_width << " segment_width " << b.fbea.segment_width << " segments "
     << b.fbea.segments << "\n";
  os << "breaks ";
  for (std::size_t i = 0; i < b.fbea.breaks.size(); ++i) os << (b.fbea.breaks.test(i) ? '1' : '0');
  os << "\n";

  os << "[accum]\n";
  os << "frac_bits " << b.accum.frac_bits << " product_width " << b.accum.product_width << " guard_bits "
     << b.accum.guard_bits << " segment_width " << b.accum.segment_width << " terms_per_pass "
     << b.accum.terms_per_pass << "\n";
  write_tree(os, "cst", b.accum.cst);
  return os.str();
}

}  // namespace flexibit
