// SPDX-License-Identifier: Apache-2.0
#include "flexibit/validate.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <random>
#include <sstream>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void note(CategoryReport& r, const ValidationOptions& opts, std::string where, std::string stage,
          std::string detail) {
  ++r.mismatches;
  if (r.examples.size() < opts.max_reports) r.examples.push_back({std::move(where), std::move(stage), std::move(detail)});
}

std::string pair_name(const FormatSpec& a, const FormatSpec& w) { return to_string(a) + " x " + to_string(w); }

/// Re-runs one product with per-stage records and names the first stage
/// whose intermediate value disagrees with an independent computation.
std::string localize(std::uint64_t aw, std::uint64_t ww, const ControlBundle& b, Fault fault) {
  const std::uint64_t aws[] = {aw};
  const std::uint64_t wws[] = {ww};
  std::vector<OpRecord> recs;
  PeOptions o;
  o.fault = fault;
  o.records = &recs;
  multiply_terms(PackedBuffer::from_words(aws, b.act_fmt), PackedBuffer::from_words(wws, b.wgt_fmt), b, o);
  if (recs.empty()) return "scheduling";
  const OpRecord& r = recs.front();
  const ScalarValue da = decode(aw, b.act_fmt);
  const ScalarValue dw = decode(ww, b.wgt_fmt);
  if (r.a_man != da.man_field || r.w_man != dw.man_field) return "separator";
  if (r.raw != r.a_man * r.w_man) return "fbrt";
  if (b.integer_mode()) return "sign-correction";
  const int p = b.prim.act_man_bits;
  const int q = b.prim.wgt_man_bits;
  const std::uint64_t full = ((std::uint64_t{1} << p) + r.a_man) * ((std::uint64_t{1} << q) + r.w_man);
  if (static_cast<std::uint64_t>(r.corrected) != full) return "implicit-one";
  if (!r.zero && r.exp_sum != da.exp_field + dw.exp_field) return "fbea";
  return "normalize";
}

/// Checks every (act, wgt) combination of the two word lists, one register
/// load at a time.
void check_products(CategoryReport& rep, const ValidationOptions& opts, const ControlBundle& b,
                    std::span<const FormatSpec> outs, std::span<const std::uint64_t> acts,
                    std::span<const std::uint64_t> wgts) {
  const auto na = static_cast<std::size_t>(b.act_sep.elements);
  const auto nw = static_cast<std::size_t>(b.wgt_sep.elements);
  PeOptions o;
  o.fault = opts.fault;
  auto run = [&](std::span<const std::uint64_t> ac, std::span<const std::uint64_t> wc) {
    const auto ab = PackedBuffer::from_words(ac, b.act_fmt);
    const auto wb = PackedBuffer::from_words(wc, b.wgt_fmt);
    const auto terms = multiply_terms(ab, wb, b, o);
    for (std::size_t j = 0; j < wc.size(); ++j) {
      for (std::size_t i = 0; i < ac.size(); ++i) {
        const ProductTerm& t = terms[j * ac.size() + i];
        const ExactNumber ref = mul_ref(decode(ac[i], b.act_fmt), decode(wc[j], b.wgt_fmt));
        for (const FormatSpec& out : outs) {
          ++rep.cases;
          const ScalarValue got = normalize_product(t, out);
          const ScalarValue want = encode(ref, out);
          if (got.word() != want.word()) {
            std::ostringstream w;
            w << pair_name(b.act_fmt, b.wgt_fmt) << " -> " << to_string(out) << " act=" << ac[i]
              << " wgt=" << wc[j];
            std::ostringstream d;
            d << "got " << got.word() << " want " << want.word();
            note(rep, opts, w.str(), localize(ac[i], wc[j], b, opts.fault), d.str());
          }
        }
      }
    }
  };
  for (std::size_t a0 = 0; a0 < acts.size(); a0 += na) {
    const auto ac = acts.subspan(a0, std::min(na, acts.size() - a0));
    for (std::size_t w0 = 0; w0 < wgts.size(); w0 += nw) run(ac, wgts.subspan(w0, std::min(nw, wgts.size() - w0)));
  }
}

std::vector<std::uint64_t> all_words(const FormatSpec& f) {
  std::vector<std::uint64_t> v(std::size_t{1} << f.total_bits());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

std::vector<FormatSpec> fp_formats(int lo, int hi) {
  std::vector<FormatSpec> out;
  for (int total = std::max(lo, 2); total <= hi; ++total) {
    for (int e = 1; e <= total - 1; ++e) out.push_back(FormatSpec::fp(e, total - 1 - e));
  }
  return out;
}

CategoryReport validate_codec(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "codec";
  std::vector<FormatSpec> fmts = fp_formats(2, opts.max_bits);
  for (int bits = 2; bits <= std::min(opts.max_bits, 16); ++bits) {
    fmts.push_back(FormatSpec::integer(bits, true));
    fmts.push_back(FormatSpec::integer(bits, false));
  }
  for (const FormatSpec& f : fmts) {
    const std::uint64_t n = std::uint64_t{1} << f.total_bits();
    for (std::uint64_t w = 0; w < n; ++w) {
      ++rep.cases;
      const ScalarValue v = decode(w, f);
      const std::uint64_t back = encode(to_exact(v), f).word();
      const std::uint64_t want = v.is_zero ? 0 : w;
      if (back != want) {
        note(rep, opts, to_string(f) + " word=" + std::to_string(w), "codec",
             "round trip gave " + std::to_string(back));
      }
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

CategoryReport validate_pe_multiply(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "pe-multiply";
  std::mt19937_64 rng(opts.seed);
  const auto fmts = fp_formats(3, opts.max_bits);
  for (const FormatSpec& fa : fmts) {
    for (const FormatSpec& fw : fmts) {
      const ControlBundle b = compile_bundle(fa, fw, product_format(fa, fw));
      // Exhaustive sweeps also exercise the truncating path into the
      // activation format; random samples check the exact product format.
      const FormatSpec outs[] = {product_format(fa, fw), fa};
      const bool exhaustive = fa.total_bits() <= opts.exhaustive_bits && fw.total_bits() <= opts.exhaustive_bits;
      if (exhaustive) {
        const auto aw = all_words(fa);
        const auto ww = all_words(fw);
        check_products(rep, opts, b, outs, aw, ww);
      } else {
        // Random register loads: every act of a load meets every wgt of it.
        std::uniform_int_distribution<std::uint64_t> da(0, (std::uint64_t{1} << fa.total_bits()) - 1);
        std::uniform_int_distribution<std::uint64_t> dw(0, (std::uint64_t{1} << fw.total_bits()) - 1);
        const auto na = static_cast<std::size_t>(b.act_sep.elements);
        const auto nw = static_cast<std::size_t>(b.wgt_sep.elements);
        std::vector<std::uint64_t> aw(na);
        std::vector<std::uint64_t> ww(nw);
        for (std::uint64_t done = 0; done < opts.random_pairs; done += na * nw) {
          for (auto& v : aw) v = da(rng);
          for (auto& v : ww) v = dw(rng);
          check_products(rep, opts, b, std::span(outs, 1), aw, ww);
        }
      }
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

CategoryReport validate_pe_integer(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "pe-integer";
  std::vector<FormatSpec> fmts;
  for (int bits = 2; bits <= std::min(opts.exhaustive_bits, 8); ++bits) {
    fmts.push_back(FormatSpec::integer(bits, true));
    fmts.push_back(FormatSpec::integer(bits, false));
  }
  for (const FormatSpec& fa : fmts) {
    for (const FormatSpec& fw : fmts) {
      if (fa.is_signed != fw.is_signed) continue;
      const ControlBundle b = compile_bundle(fa, fw, product_format(fa, fw));
      const FormatSpec outs[] = {product_format(fa, fw)};
      const auto aw = all_words(fa);
      const auto ww = all_words(fw);
      check_products(rep, opts, b, outs, aw, ww);
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

CategoryReport validate_fbrt(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "fbrt";
  constexpr int kExp = 3;
  for (int p = 0; p <= 6; ++p) {
    for (int q = 0; q <= 6; ++q) {
      const FormatSpec fa = FormatSpec::fp(kExp, p);
      const FormatSpec fw = FormatSpec::fp(kExp, q);
      const ControlBundle b = compile_bundle(fa, fw, product_format(fa, fw));
      // Exponent field 1 keeps every operand nonzero.
      auto words = [](const FormatSpec& f) {
        std::vector<std::uint64_t> v;
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << f.man_bits); ++m) v.push_back((std::uint64_t{1} << f.man_bits) | m);
        return v;
      };
      const auto aw = words(fa);
      const auto ww = words(fw);
      const auto na = static_cast<std::size_t>(b.act_sep.elements);
      const auto nw = static_cast<std::size_t>(b.wgt_sep.elements);
      for (std::size_t a0 = 0; a0 < aw.size(); a0 += na) {
        const std::span<const std::uint64_t> ac(aw.data() + a0, std::min(na, aw.size() - a0));
        for (std::size_t w0 = 0; w0 < ww.size(); w0 += nw) {
          const std::span<const std::uint64_t> wc(ww.data() + w0, std::min(nw, ww.size() - w0));
          std::vector<OpRecord> recs;
          PeOptions o;
          o.fault = opts.fault;
          o.records = &recs;
          multiply_terms(PackedBuffer::from_words(ac, fa), PackedBuffer::from_words(wc, fw), b, o);
          for (const OpRecord& r : recs) {
            ++rep.cases;
            const std::uint64_t a = ac[static_cast<std::size_t>(r.act)] & ((std::uint64_t{1} << p) - 1);
            const std::uint64_t w = wc[static_cast<std::size_t>(r.wgt)] & ((std::uint64_t{1} << q) - 1);
            const std::uint64_t want = ((std::uint64_t{1} << p) + a) * ((std::uint64_t{1} << q) + w);
            const std::uint64_t got = apply_implicit_one(r.raw, a, w, p, q);
            const bool tree_ok = r.raw == a * w;
            if (!tree_ok || got != want || static_cast<std::uint64_t>(r.corrected) != want) {
              note(rep, opts, "p=" + std::to_string(p) + " q=" + std::to_string(q) + " a=" + std::to_string(a) +
                                  " w=" + std::to_string(w),
                   tree_ok ? "implicit-one" : "fbrt", "got " + std::to_string(r.corrected) + " want " + std::to_string(want));
            }
          }
        }
      }
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

CategoryReport validate_fbea(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "fbea";
  constexpr int kLAdd = 144;
  std::mt19937_64 rng(opts.seed ^ 0xfbeaULL);
  for (int width = 1; width <= 12; ++width) {
    const FbeaPlan plan = compile_fbea_width(width, kLAdd);
    const int sw = plan.segment_width;
    const auto segs = static_cast<std::size_t>(plan.segments);
    const std::uint64_t mask = (std::uint64_t{1} << width) - 1;

    std::vector<std::pair<std::uint64_t, std::uint64_t>> cases;
    if (width <= 6) {
      for (std::uint64_t x = 0; x <= mask; ++x) {
        for (std::uint64_t y = 0; y <= mask; ++y) cases.emplace_back(x, y);
      }
    } else {
      std::uniform_int_distribution<std::uint64_t> d(0, mask);
      for (int k = 0; k < 10000; ++k) cases.emplace_back(d(rng), d(rng));
    }

    for (std::size_t first = 0; first < cases.size(); first += segs) {
      const std::size_t n = std::min(segs, cases.size() - first);
      BitVector x(kLAdd), y(kLAdd);
      for (std::size_t s = 0; s < n; ++s) {
        for (int t = 0; t < width; ++t) {
          const std::size_t pos = s * static_cast<std::size_t>(sw) + static_cast<std::size_t>(t);
          x[pos] = ((cases[first + s].first >> t) & 1) != 0;
          y[pos] = ((cases[first + s].second >> t) & 1) != 0;
        }
      }
      const BitVector sum = fbea_add(x, y, plan.breaks);
      for (std::size_t s = 0; s < n; ++s) {
        ++rep.cases;
        std::uint64_t got = 0;
        for (int t = 0; t < sw; ++t) {
          if (sum[s * static_cast<std::size_t>(sw) + static_cast<std::size_t>(t)]) got |= std::uint64_t{1} << t;
        }
        const auto [a, b] = cases[first + s];
        if (got != a + b) {
          note(rep, opts, "width=" + std::to_string(width) + " " + std::to_string(a) + "+" + std::to_string(b),
               "fbea", "got " + std::to_string(got));
        }
      }
      // Bits past the last used segment must stay clear (no carry leakage).
      for (std::size_t i = n * static_cast<std::size_t>(sw); i < static_cast<std::size_t>(kLAdd); ++i) {
        if (sum[i]) {
          note(rep, opts, "width=" + std::to_string(width), "fbea", "carry leaked into bit " + std::to_string(i));
          break;
        }
      }
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

CategoryReport validate_pack(const ValidationOptions& opts) {
  const Timer timer;
  CategoryReport rep;
  rep.name = "pack";
  // FP6 in 8-bit containers: input bits 8..13 land on output bits 6..11.
  for (std::size_t i = 8; i <= 13; ++i) {
    ++rep.cases;
    const auto j = packed_index(i, 0, 8, 6);
    if (!j || *j != i - 2) note(rep, opts, "FP6/8 bit " + std::to_string(i), "bpu-index", "wrong output index");
  }
  for (std::size_t i : {6u, 7u, 14u, 15u}) {
    ++rep.cases;
    if (packed_index(i, 0, 8, 6)) note(rep, opts, "FP6/8 bit " + std::to_string(i), "bpu-index", "padding bit mapped");
  }

  std::mt19937_64 rng(opts.seed ^ 0xb9ULL);
  const auto fmts = fp_formats(3, 12);
  std::uniform_int_distribution<std::size_t> pick(0, fmts.size() - 1);
  std::uniform_int_distribution<std::size_t> len(0, 300);
  std::uniform_int_distribution<std::size_t> start(0, 63);
  for (int k = 0; k < 1000; ++k) {
    ++rep.cases;
    const FormatSpec f = fmts[pick(rng)];
    const int container = padded_container_bits(f);
    std::uniform_int_distribution<std::uint64_t> word(0, (std::uint64_t{1} << f.total_bits()) - 1);
    std::vector<std::uint64_t> elems(len(rng));
    for (auto& e : elems) e = word(rng);
    const PaddedStream s = PaddedStream::from_elements(elems, f, container);
    const std::size_t st = start(rng);
    const PackedBuffer b = pack(s, st);
    const bool ok = unpack(b, container) == s && pack(unpack(b, container), st) == b &&
                    b.packed_bits() == elems.size() * static_cast<std::size_t>(f.total_bits());
    if (!ok) note(rep, opts, to_string(f) + " n=" + std::to_string(elems.size()), "bpu", "round trip differs");
  }
  rep.seconds = timer.seconds();
  return rep;
}

ValidationScope parse_validation_scope(std::string_view s) {
  std::string n(s);
  for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "codec") return ValidationScope::Codec;
  if (n == "pe") return ValidationScope::Pe;
  if (n == "pack") return ValidationScope::Pack;
  if (n == "all") return ValidationScope::All;
  throw ConfigError("unknown validation scope '" + std::string(s) + "' (codec, pe, pack, all)");
}

std::vector<CategoryReport> run_validation(ValidationScope scope, const ValidationOptions& opts) {
  if (opts.max_bits < 3 || opts.max_bits > 12) throw ConfigError("max_bits must be in [3, 12]");
  std::vector<CategoryReport> out;
  const bool all = scope == ValidationScope::All;
  if (all || scope == ValidationScope::Codec) out.push_back(validate_codec(opts));
  if (all || scope == ValidationScope::Pe) {
    out.push_back(validate_fbrt(opts));
    out.push_back(validate_fbea(opts));
    out.push_back(validate_pe_multiply(opts));
    out.push_back(validate_pe_integer(opts));
  }
  if (all || scope == ValidationScope::Pack) out.push_back(validate_pack(opts));
  return out;
}

}  // namespace flexibit
