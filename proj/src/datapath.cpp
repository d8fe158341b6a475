// SPDX-License-Identifier: Apache-2.0
#include "flexibit/datapath.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

std::uint64_t mask(int bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

/// `width` bits starting at `start`, first bit most significant.
std::uint64_t read_field(const BitVector& reg, int start, int width) {
  std::uint64_t v = 0;
  for (int t = 0; t < width; ++t) v = (v << 1) | (reg.test(static_cast<std::size_t>(start + t)) ? 1u : 0u);
  return v;
}

std::string bits_of(const BitVector& v) {
  std::string s;
  s.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s.push_back(v.test(i) ? '1' : '0');
  return s;
}

struct Fields {
  bool sign = false;
  std::uint64_t exp = 0;
  std::uint64_t man = 0;
  bool zero = true;
};

Fields element_fields(const BitVector& sign_reg, const BitVector& exp_reg, const BitVector& man_reg,
                      const FormatSpec& fmt, int k) {
  Fields f;
  if (fmt.sign_bits()) f.sign = sign_reg.test(static_cast<std::size_t>(k));
  f.exp = read_field(exp_reg, k * fmt.exp_bits, fmt.exp_bits);
  f.man = read_field(man_reg, k * fmt.man_bits, fmt.man_bits);
  f.zero = !f.sign && f.exp == 0 && f.man == 0;
  return f;
}

std::int64_t msb_index(std::uint64_t v) { return std::bit_width(v) - 1; }
std::int64_t msb_index(const BigUInt& v) { return static_cast<std::int64_t>(boost::multiprecision::msb(v)); }

std::uint64_t shifted_to_u64(std::uint64_t v, std::int64_t shift) {
  if (shift >= 0) return shift >= 64 ? 0 : v << shift;
  return -shift >= 64 ? 0 : v >> -shift;
}

std::uint64_t shifted_to_u64(const BigUInt& v, std::int64_t shift) {
  BigUInt r = shift >= 0 ? BigUInt(v << static_cast<unsigned>(shift)) : BigUInt(v >> static_cast<unsigned>(-shift));
  return static_cast<std::uint64_t>(r & BigUInt(~std::uint64_t{0}));
}

/// Output-stage rounding of (-1)^neg * mag * 2^lsb: truncate, saturate on
/// overflow, flush on underflow.
template <class U>
ScalarValue round_to_format(bool neg, const U& mag, std::int64_t lsb, const FormatSpec& fmt, bool& saturated) {
  saturated = false;
  if (mag == 0) return decode(std::uint64_t{0}, fmt);
  const std::int64_t lead = msb_index(mag);

  if (fmt.is_int()) {
    const int m = fmt.man_bits;
    const std::int64_t top = lead + lsb;
    const bool huge = top > 62;
    const std::uint64_t ival = top < 0 ? 0 : (huge ? 0 : shifted_to_u64(mag, lsb));
    std::uint64_t word = 0;
    if (!neg) {
      const std::uint64_t limit = mask(m);
      saturated = huge || ival > limit;
      word = saturated ? limit : ival;
    } else if (!fmt.is_signed) {
      saturated = ival != 0 || huge;
    } else {
      const std::uint64_t limit = std::uint64_t{1} << m;
      saturated = huge || ival > limit;
      const std::uint64_t clamped = saturated ? limit : ival;
      word = clamped == 0 ? 0 : (limit | ((limit - clamped) & mask(m)));
    }
    return decode(word, fmt);
  }

  const int m = fmt.man_bits;
  const std::int64_t field = lead + lsb + fmt.bias;
  if (field < 0) return decode(std::uint64_t{0}, fmt);
  std::uint64_t exp_field = 0;
  std::uint64_t man = 0;
  if (static_cast<std::uint64_t>(field) > fmt.max_exp_field()) {
    saturated = true;
    exp_field = fmt.max_exp_field();
    man = mask(m);
  } else {
    exp_field = static_cast<std::uint64_t>(field);
    // Fraction bits below the leading one, aligned to the m-bit field.
    const U one = U(1);
    const U frac = mag - (one << static_cast<unsigned>(lead));
    man = shifted_to_u64(frac, m - lead);
  }
  std::uint64_t word = man | (exp_field << m);
  if (neg) word |= std::uint64_t{1} << (m + fmt.exp_bits);
  return decode(word, fmt);
}

Fault g_no_fault = Fault::None;

std::vector<std::uint64_t> add_exponents_impl(const PERegisters& regs, const ControlBundle& b, int cycle, Fault fault,
                                              PeCounters* counters) {
  const int ops = b.prim.ops_in_cycle(cycle);
  std::vector<std::uint64_t> sums(static_cast<std::size_t>(std::max(ops, 0)), 0);
  if (!b.fbea.enabled() || ops <= 0) return sums;

  const int sw = b.fbea.segment_width;
  const int segs = b.fbea.segments;
  const auto l_add = static_cast<std::size_t>(b.cfg.l_add);
  BitVector breaks = b.fbea.breaks;
  if (fault == Fault::ExponentGuard) {
    // Break one bit early, so the carry into the guard bit is lost.
    breaks.reset();
    for (std::size_t i = 0; i < l_add; ++i) {
      if ((i + 2) % static_cast<std::size_t>(sw) == 0) breaks.set(i);
    }
  }

  for (int first = 0; first < ops; first += segs) {
    BitVector x(l_add), y(l_add);
    const int n = std::min(segs, ops - first);
    for (int s = 0; s < n; ++s) {
      const OpSlot op = b.prim.op_pair(cycle * b.prim.ops_per_cycle + first + s);
      const std::uint64_t ea = read_field(regs.act_exp, op.act * b.act_fmt.exp_bits, b.act_fmt.exp_bits);
      const std::uint64_t ew = read_field(regs.wgt_exp, op.wgt * b.wgt_fmt.exp_bits, b.wgt_fmt.exp_bits);
      for (int t = 0; t < b.fbea.add_width; ++t) {
        const auto pos = static_cast<std::size_t>(s * sw + t);
        x[pos] = ((ea >> t) & 1) != 0;
        y[pos] = ((ew >> t) & 1) != 0;
      }
    }
    const BitVector sum = fbea_add(x, y, breaks);
    for (int s = 0; s < n; ++s) {
      std::uint64_t v = 0;
      for (int t = sw - 1; t >= 0; --t) v = (v << 1) | (sum.test(static_cast<std::size_t>(s * sw + t)) ? 1u : 0u);
      sums[static_cast<std::size_t>(first + s)] = v;
    }
    if (counters) ++counters->fbea_passes;
  }
  return sums;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registers and separator

PERegisters PERegisters::sized_for(const PEConfig& cfg) {
  PERegisters r;
  const auto sz = [](int v) { return static_cast<std::size_t>(v); };
  r.act_reg.resize(sz(cfg.reg_width));
  r.wgt_reg.resize(sz(cfg.reg_width));
  r.act_sign.resize(sz(cfg.r_s));
  r.wgt_sign.resize(sz(cfg.r_s));
  r.act_exp.resize(sz(cfg.r_e));
  r.wgt_exp.resize(sz(cfg.r_e));
  r.act_man.resize(sz(cfg.r_m));
  r.wgt_man.resize(sz(cfg.r_m));
  r.prim_reg.resize(sz(cfg.l_prim));
  r.acc_reg.resize(sz(cfg.l_acc));
  return r;
}

void load_operands(PERegisters& regs, const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& b) {
  auto load = [](BitVector& reg, const PackedBuffer& buf, const SeparatorPlan& sep, const char* which) {
    if (!(buf.fmt == sep.fmt)) throw FormatError(std::string(which) + " buffer format differs from the bundle");
    if (buf.elem_count > static_cast<std::size_t>(sep.elements)) {
      throw CapacityError(std::string(which) + " buffer holds more elements than one register load");
    }
    reg.reset();
    const std::size_t n = buf.packed_bits();
    for (std::size_t i = 0; i < n; ++i) reg[i] = buf.bits.test(buf.start_bit + i);
  };
  load(regs.act_reg, act, b.act_sep, "activation");
  load(regs.wgt_reg, wgt, b.wgt_sep, "weight");
}

PERegisters separate(PERegisters regs, const ControlBundle& b) {
  auto split = [](const BitVector& in, const SeparatorPlan& sep, BitVector& s, BitVector& e, BitVector& m) {
    s.reset();
    e.reset();
    m.reset();
    for (std::size_t i = 0; i < sep.routes.size(); ++i) {
      const SepRoute& r = sep.routes[i];
      const auto idx = static_cast<std::size_t>(r.index);
      switch (r.dest) {
        case SepDest::Sign: s[idx] = in.test(i); break;
        case SepDest::Exp: e[idx] = in.test(i); break;
        case SepDest::Man: m[idx] = in.test(i); break;
        case SepDest::Inactive: break;
      }
    }
  };
  split(regs.act_reg, b.act_sep, regs.act_sign, regs.act_exp, regs.act_man);
  split(regs.wgt_reg, b.wgt_sep, regs.wgt_sign, regs.wgt_exp, regs.wgt_man);
  return regs;
}

BitVector gen_primitives(const PERegisters& regs, const ControlBundle& b, int cycle) {
  BitVector prim(static_cast<std::size_t>(b.cfg.l_prim));
  if (cycle < 0 || cycle >= static_cast<int>(b.prim.routes.size())) return prim;
  const auto& routes = b.prim.routes[static_cast<std::size_t>(cycle)];
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const PrimSource& src = routes[k];
    if (!src.active()) continue;
    prim[k] = regs.act_man.test(static_cast<std::size_t>(src.act_bit)) &&
              regs.wgt_man.test(static_cast<std::size_t>(src.wgt_bit));
  }
  return prim;
}

// ---------------------------------------------------------------------------
// Reduction tree

TreeExecutor::TreeExecutor(const FbrtPlan& plan) : plan_(&plan) {
  for (int o : plan.leaf_oids) outputs_ = std::max(outputs_, o + 1);
  below_.resize(static_cast<std::size_t>(plan.leaves));
  here_.resize(static_cast<std::size_t>(plan.leaves));
  result_.assign(static_cast<std::size_t>(outputs_), 0);
}

std::uint64_t TreeExecutor::absolute(const Partial& p) {
  return p.sid == kSummedSegment ? p.value : p.value << (p.lo + p.sid);
}

TreeExecutor::Partial TreeExecutor::concat(const Partial& a, const Partial& b) {
  if (a.oid != b.oid || a.sid != b.sid || a.sid == kSummedSegment || b.lo != a.lo + a.width) {
    throw ControlError("concatenation of non-adjacent fragments");
  }
  if (a.width + b.width > 63) throw ControlError("concatenated fragment wider than the modelled datapath");
  return {a.oid, a.sid, a.lo, a.width + b.width, a.value | (b.value << a.width)};
}

TreeExecutor::Partial TreeExecutor::add(const Partial& a, const Partial& b) {
  if (a.oid != b.oid) throw ControlError("shift-add across different outputs");
  return {a.oid, kSummedSegment, 0, 0, absolute(a) + absolute(b)};
}

const std::vector<std::uint64_t>& TreeExecutor::run(const BitVector& leaves) {
  const FbrtPlan& plan = *plan_;
  const auto n = static_cast<std::size_t>(plan.leaves);
  for (std::size_t k = 0; k < n; ++k) {
    below_[k].clear();
    const int oid = plan.leaf_oids[k];
    if (oid < 0) continue;
    const bool bit = k < leaves.size() && leaves.test(k);
    below_[k].push_back({oid, plan.leaf_sids[k], plan.leaf_lo[k], 1, bit ? 1u : 0u});
  }

  for (int level = 1; level <= plan.levels; ++level) {
    const int count = plan.nodes_at(level);
    const auto& modes = plan.modes[static_cast<std::size_t>(level)];
    for (int j = count - 1; j >= 0; --j) {
      const auto& left = below_[static_cast<std::size_t>(2 * j)];
      const auto& right = below_[static_cast<std::size_t>(2 * j + 1)];
      auto& out = here_[static_cast<std::size_t>(j)];
      out.clear();
      const SwitchMode m = modes[static_cast<std::size_t>(j)];

      if (m.mode == NodeMode::Idle) {
        if (!left.empty() || !right.empty()) throw ControlError("idle node received data");
        continue;
      }
      if (m.mode == NodeMode::D) {
        if (!left.empty() && !right.empty() && left.back().oid == right.front().oid) {
          throw ControlError("forward mode would split one output");
        }
        out = left;
        out.insert(out.end(), right.begin(), right.end());
        continue;
      }

      if (left.empty() || right.empty() || left.back().oid != right.front().oid) {
        throw ControlError("merge mode on children of different outputs");
      }
      const Partial& l = left.back();
      const Partial& r = right.front();
      const bool three_way = m.mode == NodeMode::C3 || m.mode == NodeMode::A3 || m.mode == NodeMode::ConcatAdd;
      std::vector<Partial>* nb = nullptr;
      if (three_way) {
        if (!plan.has_additional_link(level, j) || right.size() != 1) {
          throw ControlError("three-operand mode without a usable additional link");
        }
        nb = &here_[static_cast<std::size_t>(j + 1)];
        if (nb->empty() || nb->front().oid != l.oid) throw ControlError("additional link carries another output");
      }

      Partial merged{};
      switch (m.mode) {
        case NodeMode::C2: merged = concat(l, r); break;
        case NodeMode::A2: merged = add(l, r); break;
        case NodeMode::C3: merged = concat(concat(l, r), nb->front()); break;
        case NodeMode::A3: merged = add(add(l, r), nb->front()); break;
        case NodeMode::ConcatAdd:
          merged = m.side == LinkSide::Left ? add(concat(l, r), nb->front()) : add(l, concat(r, nb->front()));
          break;
        default: break;
      }
      out.assign(left.begin(), left.end() - 1);
      out.push_back(merged);
      out.insert(out.end(), right.begin() + 1, right.end());
      if (nb) nb->erase(nb->begin());
    }
    std::swap(below_, here_);
  }

  std::fill(result_.begin(), result_.end(), 0);
  std::vector<bool> seen(result_.size(), false);
  for (const Partial& p : below_[0]) {
    const auto o = static_cast<std::size_t>(p.oid);
    if (seen[o]) throw ControlError("output " + std::to_string(p.oid) + " left the tree in pieces");
    seen[o] = true;
    result_[o] = absolute(p);
  }
  return result_;
}

std::vector<std::uint64_t> run_fbrt(const BitVector& prim_reg, const ControlBundle& b) {
  const auto slots = static_cast<std::size_t>(b.prim.ops_per_cycle);
  if (b.prim.prims_per_op() == 0) return std::vector<std::uint64_t>(slots, 0);
  TreeExecutor exec(b.fbrt);
  std::vector<std::uint64_t> out = exec.run(prim_reg);
  out.resize(slots, 0);
  return out;
}

std::uint64_t apply_implicit_one(std::uint64_t raw, std::uint64_t a, std::uint64_t w, int p, int q) {
  return raw + (w << p) + (a << q) + (std::uint64_t{1} << (p + q));
}

std::int64_t apply_sign_correction(std::uint64_t raw, std::uint64_t a, std::uint64_t w, int p, int q, bool sign_a,
                                   bool sign_w) {
  auto v = static_cast<std::int64_t>(raw);
  if (sign_a) v -= static_cast<std::int64_t>(w << p);
  if (sign_w) v -= static_cast<std::int64_t>(a << q);
  if (sign_a && sign_w) v += std::int64_t{1} << (p + q);
  return v;
}

// ---------------------------------------------------------------------------
// Exponent adder

BitVector fbea_add(const BitVector& x, const BitVector& y, const BitVector& breaks) {
  if (x.size() != y.size() || x.size() != breaks.size()) throw ShapeError("adder operands differ in width");
  BitVector s(x.size());
  bool carry = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool a = x.test(i);
    const bool b = y.test(i);
    s[i] = a ^ b ^ carry;
    carry = (a && b) || (carry && (a ^ b));
    if (breaks.test(i)) carry = false;
  }
  return s;
}

std::vector<std::uint64_t> add_exponents(const PERegisters& regs, const ControlBundle& b, int cycle) {
  return add_exponents_impl(regs, b, cycle, g_no_fault, nullptr);
}

// ---------------------------------------------------------------------------
// Multiplication

std::vector<ProductTerm> multiply_terms(const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& b,
                                        const PeOptions& opts) {
  PERegisters regs = PERegisters::sized_for(b.cfg);
  load_operands(regs, act, wgt, b);
  regs = separate(std::move(regs), b);

  const auto na = static_cast<int>(act.elem_count);
  const auto nw = static_cast<int>(wgt.elem_count);
  std::vector<ProductTerm> out(static_cast<std::size_t>(na) * static_cast<std::size_t>(nw));
  const int p = b.prim.act_man_bits;
  const int q = b.prim.wgt_man_bits;
  const bool fp = !b.integer_mode();

  std::ostream* tr = opts.trace;
  if (tr) {
    *tr << "# pe act=" << to_string(b.act_fmt) << " wgt=" << to_string(b.wgt_fmt) << "\n";
    *tr << "act_reg  " << bits_of(regs.act_reg) << "\n";
    *tr << "wgt_reg  " << bits_of(regs.wgt_reg) << "\n";
    *tr << "act_sign " << bits_of(regs.act_sign) << "\nact_exp  " << bits_of(regs.act_exp) << "\nact_man  "
        << bits_of(regs.act_man) << "\n";
    *tr << "wgt_sign " << bits_of(regs.wgt_sign) << "\nwgt_exp  " << bits_of(regs.wgt_exp) << "\nwgt_man  "
        << bits_of(regs.wgt_man) << "\n";
  }

  std::optional<TreeExecutor> exec;
  if (p * q > 0) exec.emplace(b.fbrt);
  if (opts.counters) ++opts.counters->register_loads;

  for (int c = 0; c < b.prim.cycles; ++c) {
    const int ops = b.prim.ops_in_cycle(c);
    bool any = false;
    for (int s = 0; s < ops && !any; ++s) {
      const OpSlot op = b.prim.op_pair(c * b.prim.ops_per_cycle + s);
      any = op.act < na && op.wgt < nw;
    }
    if (!any) continue;  // nothing loaded for this step

    const BitVector prim = gen_primitives(regs, b, c);
    std::vector<std::uint64_t> raws(static_cast<std::size_t>(ops), 0);
    if (exec) {
      const auto& r = exec->run(prim);
      std::copy_n(r.begin(), std::min(r.size(), raws.size()), raws.begin());
    }
    const std::vector<std::uint64_t> exps =
        fp ? add_exponents_impl(regs, b, c, opts.fault, opts.counters) : std::vector<std::uint64_t>{};
    if (opts.counters) ++opts.counters->multiply_cycles;
    if (tr) {
      *tr << "cycle " << c << " prim " << bits_of(prim) << "\n";
      *tr << "cycle " << c << " fbrt";
      for (auto v : raws) *tr << ' ' << v;
      *tr << "\n";
    }

    for (int s = 0; s < ops; ++s) {
      const OpSlot op = b.prim.op_pair(c * b.prim.ops_per_cycle + s);
      if (op.act >= na || op.wgt >= nw) continue;
      const Fields fa = element_fields(regs.act_sign, regs.act_exp, regs.act_man, b.act_fmt, op.act);
      const Fields fw = element_fields(regs.wgt_sign, regs.wgt_exp, regs.wgt_man, b.wgt_fmt, op.wgt);
      const std::uint64_t raw = raws[static_cast<std::size_t>(s)];
      ProductTerm t;
      OpRecord rec{op.act, op.wgt, fa.man, fw.man, raw, 0, 0, fa.zero || fw.zero};

      if (fp) {
        std::uint64_t sig = apply_implicit_one(raw, fa.man, fw.man, p, q);
        if (opts.fault == Fault::ImplicitOne) sig -= fa.man << q;
        rec.corrected = static_cast<std::int64_t>(sig);
        rec.exp_sum = exps[static_cast<std::size_t>(s)];
        if (!rec.zero) {
          t.is_zero = false;
          t.sign = fa.sign != fw.sign;
          t.significand = sig;
          t.frac_bits = p + q;
          t.exponent = static_cast<std::int64_t>(rec.exp_sum) - b.act_fmt.bias - b.wgt_fmt.bias;
        }
      } else {
        const std::int64_t v = apply_sign_correction(raw, fa.man, fw.man, p, q, fa.sign, fw.sign);
        rec.corrected = v;
        if (v != 0) {
          t.is_zero = false;
          t.sign = v < 0;
          t.significand = static_cast<std::uint64_t>(v < 0 ? -v : v);
        }
      }
      if (tr) {
        *tr << "op a=" << op.act << " w=" << op.wgt << " raw=" << raw << " corrected=" << rec.corrected
            << " exp_sum=" << rec.exp_sum << " sign=" << (t.sign ? 1 : 0) << " zero=" << (t.is_zero ? 1 : 0) << "\n";
      }
      if (opts.records) opts.records->push_back(rec);
      if (opts.counters) ++opts.counters->ops;
      out[static_cast<std::size_t>(op.wgt) * static_cast<std::size_t>(na) + static_cast<std::size_t>(op.act)] = t;
    }
  }
  return out;
}

ScalarValue normalize_product(const ProductTerm& t, const FormatSpec& out, PeCounters* counters) {
  if (t.is_zero) return decode(std::uint64_t{0}, out);
  bool sat = false;
  ScalarValue v = round_to_format(t.sign, t.significand, t.exponent - t.frac_bits, out, sat);
  if (sat && counters) ++counters->saturations;
  return v;
}

std::vector<ScalarValue> pe_multiply(const PackedBuffer& act, const PackedBuffer& wgt, const ControlBundle& b,
                                     const FormatSpec& out_fmt, const PeOptions& opts) {
  const std::vector<ProductTerm> terms = multiply_terms(act, wgt, b, opts);
  std::vector<ScalarValue> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(normalize_product(t, out_fmt, opts.counters));
  return out;
}

// ---------------------------------------------------------------------------
// Accumulation path

std::vector<AlignedOperand> normalize_exponents(std::span<const ProductTerm> products) {
  std::int64_t ref = 0;
  bool have = false;
  for (const auto& t : products) {
    if (t.is_zero) continue;
    ref = have ? std::max(ref, t.exponent) : t.exponent;
    have = true;
  }
  std::vector<AlignedOperand> out;
  out.reserve(products.size());
  for (const auto& t : products) {
    AlignedOperand a;
    a.ref_exp = ref;
    if (!t.is_zero) {
      const auto mag = static_cast<std::int64_t>(t.significand);
      a.significand = t.sign ? -mag : mag;
      a.delta = static_cast<int>(std::min<std::int64_t>(ref - t.exponent, 1 << 20));
    }
    out.push_back(a);
  }
  return out;
}

std::vector<std::int64_t> concat_shift(std::span<const AlignedOperand> aligned, const ControlBundle& b,
                                       PeCounters* counters) {
  const AccumPlan& plan = b.accum;
  if (aligned.size() > static_cast<std::size_t>(plan.terms_per_pass)) {
    throw ShapeError("more operands than one concat-shift pass holds");
  }
  const int sw = plan.segment_width;
  BitVector leaves(static_cast<std::size_t>(plan.cst.leaves));
  for (std::size_t t = 0; t < aligned.size(); ++t) {
    const std::int64_t s = aligned[t].significand;
    const std::uint64_t mag = static_cast<std::uint64_t>(s < 0 ? -s : s) << plan.guard_bits;
    if (sw < 64 && (mag >> sw) != 0) throw CapacityError("significand wider than its concat-shift segment");
    for (int k = 0; k < sw; ++k) leaves[t * static_cast<std::size_t>(sw) + static_cast<std::size_t>(k)] = (mag >> k) & 1;
  }

  TreeExecutor exec(plan.cst);
  const auto& joined = exec.run(leaves);

  std::vector<std::int64_t> out(aligned.size(), 0);
  for (std::size_t t = 0; t < aligned.size(); ++t) {
    const std::uint64_t mag = joined[t];
    const int d = aligned[t].delta;
    std::uint64_t shifted = 0;
    bool lost = false;
    if (d >= sw) {
      lost = mag != 0;
    } else {
      shifted = mag >> d;
      lost = (mag & mask(d)) != 0;
    }
    if (lost && counters) ++counters->precision_loss_events;
    const auto v = static_cast<std::int64_t>(shifted);
    out[t] = aligned[t].significand < 0 ? -v : v;
  }
  if (counters) ++counters->cst_passes;
  return out;
}

Accumulator::Accumulator(const ControlBundle& bundle, PeCounters* counters)
    : bundle_(&bundle), counters_(counters) {}

void Accumulator::add_pass(std::span<const std::int64_t> shifted, std::int64_t ref_exp) {
  BigInt pass = 0;
  for (auto s : shifted) pass += s;
  if (pass == 0) return;
  const std::int64_t lsb = ref_exp - bundle_->accum.frac_bits - bundle_->accum.guard_bits;

  if (value_ == 0) {
    value_ = pass;
    lsb_exp_ = lsb;
  } else if (lsb < lsb_exp_) {
    value_ = (value_ << static_cast<unsigned>(lsb_exp_ - lsb)) + pass;
    lsb_exp_ = lsb;
  } else {
    value_ += pass << static_cast<unsigned>(lsb - lsb_exp_);
  }
  if (value_ == 0) return;

  // Keep the sum inside the L_acc-bit register (sign plus magnitude).
  const bool neg = value_ < 0;
  BigInt mag = neg ? BigInt(-value_) : value_;
  const auto lead = static_cast<std::int64_t>(boost::multiprecision::msb(mag));
  const std::int64_t limit = bundle_->cfg.l_acc - 2;
  if (lead > limit) {
    const auto drop = static_cast<unsigned>(lead - limit);
    const BigInt kept = mag >> drop;
    if ((kept << drop) != mag && counters_) ++counters_->precision_loss_events;
    mag = kept;
    lsb_exp_ += drop;
  }
  value_ = neg ? BigInt(-mag) : mag;
}

void Accumulator::add_terms(std::span<const ProductTerm> terms) {
  std::vector<ProductTerm> live;
  live.reserve(terms.size());
  for (const auto& t : terms) {
    if (!t.is_zero) live.push_back(t);
  }
  const auto per = static_cast<std::size_t>(bundle_->accum.terms_per_pass);
  for (std::size_t first = 0; first < live.size(); first += per) {
    const std::span<const ProductTerm> chunk(live.data() + first, std::min(per, live.size() - first));
    const auto aligned = normalize_exponents(chunk);
    const auto shifted = concat_shift(aligned, *bundle_, counters_);
    add_pass(shifted, aligned.front().ref_exp);
  }
}

ScalarValue Accumulator::finalize(const FormatSpec& out, const std::optional<ScalarValue>& scale_a,
                                  const std::optional<ScalarValue>& scale_w) const {
  BigInt v = value_;
  std::int64_t lsb = lsb_exp_;
  for (const auto* s : {&scale_a, &scale_w}) {
    if (!s->has_value()) continue;
    const ExactNumber x = to_exact(**s);
    v *= x.significand();
    if (x.sign()) v = -v;
    lsb += x.exp2();
  }
  const bool neg = v < 0;
  const BigUInt mag = neg ? BigUInt(-v) : BigUInt(v);
  bool sat = false;
  ScalarValue r = round_to_format(neg, mag, lsb, out, sat);
  if (sat && counters_) ++counters_->saturations;
  return r;
}

ScalarValue accumulate(std::span<const ProductTerm> terms, const ControlBundle& b, const FormatSpec& out_fmt,
                       PeCounters* counters) {
  Accumulator acc(b, counters);
  acc.add_terms(terms);
  return acc.finalize(out_fmt);
}

// ---------------------------------------------------------------------------
// Tiles

PackedTile PackedTile::from_words(std::span<const std::uint64_t> words, std::size_t rows, std::size_t cols,
                                  const FormatSpec& fmt) {
  if (words.size() != rows * cols) throw ShapeError("tile word count does not match its shape");
  return {PackedBuffer::from_words(words, fmt), rows, cols};
}

PackedTile pe_mac_tile(const PackedTile& a, const PackedTile& w, const ControlBundle& b, const FormatSpec& out_fmt,
                       const std::optional<MxScales>& mx, const PeOptions& opts) {
  if (a.cols != w.rows) throw ShapeError("inner dimensions differ: " + std::to_string(a.cols) + " vs " +
                                         std::to_string(w.rows));
  if (a.data.elem_count != a.rows * a.cols || w.data.elem_count != w.rows * w.cols) {
    throw ShapeError("tile buffer length does not match its shape");
  }
  const std::size_t m = a.rows;
  const std::size_t n = w.cols;
  const std::size_t kdim = a.cols;
  const auto na_max = static_cast<std::size_t>(b.act_sep.elements);
  const auto nw_max = static_cast<std::size_t>(b.wgt_sep.elements);

  std::vector<std::vector<ProductTerm>> partial(m * n);
  for (auto& v : partial) v.reserve(kdim);

  std::vector<std::uint64_t> col;
  std::vector<std::uint64_t> row;
  for (std::size_t k = 0; k < kdim; ++k) {
    for (std::size_t i0 = 0; i0 < m; i0 += na_max) {
      const std::size_t na = std::min(na_max, m - i0);
      col.clear();
      for (std::size_t i = 0; i < na; ++i) col.push_back(a.at(i0 + i, k));
      const PackedBuffer act = PackedBuffer::from_words(col, b.act_fmt);
      for (std::size_t n0 = 0; n0 < n; n0 += nw_max) {
        const std::size_t nw = std::min(nw_max, n - n0);
        row.clear();
        for (std::size_t j = 0; j < nw; ++j) row.push_back(w.at(k, n0 + j));
        const PackedBuffer wgt = PackedBuffer::from_words(row, b.wgt_fmt);
        const auto terms = multiply_terms(act, wgt, b, opts);
        for (std::size_t j = 0; j < nw; ++j) {
          for (std::size_t i = 0; i < na; ++i) partial[(i0 + i) * n + n0 + j].push_back(terms[j * na + i]);
        }
      }
    }
  }

  std::vector<std::uint64_t> words(m * n);
  for (std::size_t idx = 0; idx < m * n; ++idx) {
    Accumulator acc(b, opts.counters);
    acc.add_terms(partial[idx]);
    const ScalarValue r = mx ? acc.finalize(out_fmt, mx->act, mx->wgt) : acc.finalize(out_fmt);
    words[idx] = r.word();
  }
  return PackedTile::from_words(words, m, n, out_fmt);
}

}  // namespace flexibit
