#include "doctest.h"

#include <cstdint>
#include <random>
#include <vector>

#include "flexibit/codec.hpp"
#include "flexibit/control.hpp"
#include "flexibit/datapath.hpp"
#include "flexibit/errors.hpp"
#include "support.hpp"

using namespace flexibit;

namespace {

struct MulRow {
  FormatSpec fa;
  FormatSpec fw;
  std::uint64_t a;
  std::uint64_t w;
  std::uint64_t product_word;
  std::uint64_t act_word;
};

struct DotRow {
  std::vector<std::uint64_t> a;
  std::vector<std::uint64_t> w;
  test::Dyadic exact;
  std::uint64_t e5m10_word;
};

const std::vector<MulRow> kMul = {
#include "frozen/mul_vectors.inc"
};

const std::vector<DotRow> kDot = {
#include "frozen/dot_vectors.inc"
};

std::vector<std::uint64_t> random_words(std::mt19937_64& rng, std::size_t n, const FormatSpec& fmt) {
  std::uniform_int_distribution<std::uint64_t> d(0, (std::uint64_t{1} << fmt.total_bits()) - 1);
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

/// Position of a word on the real line, counted in steps of one word.
std::int64_t ordinal(std::uint64_t word, const FormatSpec& fmt) {
  const int top = fmt.total_bits() - 1;
  const auto mag = static_cast<std::int64_t>(word & ((std::uint64_t{1} << top) - 1));
  return ((word >> top) & 1) ? -mag : mag;
}

ScalarValue mac_dot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> w, const ControlBundle& b,
                    PeCounters* counters) {
  const auto ta = PackedTile::from_words(a, 1, a.size(), b.act_fmt);
  const auto tw = PackedTile::from_words(w, w.size(), 1, b.wgt_fmt);
  PeOptions opts;
  opts.counters = counters;
  return decode(pe_mac_tile(ta, tw, b, b.out_fmt, std::nullopt, opts).at(0, 0), b.out_fmt);
}

}  // namespace

TEST_CASE("single products match the frozen oracle") {
  REQUIRE(kMul.size() == 94);
  for (const auto& r : kMul) {
    CAPTURE(to_string(r.fa));
    CAPTURE(to_string(r.fw));
    CAPTURE(r.a);
    CAPTURE(r.w);
    const auto b = compile_bundle(r.fa, r.fw, r.fa);
    const auto act = PackedBuffer::from_words(std::vector<std::uint64_t>{r.a}, r.fa);
    const auto wgt = PackedBuffer::from_words(std::vector<std::uint64_t>{r.w}, r.fw);
    CHECK(pe_multiply(act, wgt, b, product_format(r.fa, r.fw)).at(0).word() == r.product_word);
    CHECK(pe_multiply(act, wgt, b, r.fa).at(0).word() == r.act_word);
  }
}

TEST_CASE("full register loads agree with the exact product") {
  std::mt19937_64 rng(21);
  const std::vector<std::pair<FormatSpec, FormatSpec>> pairs{
      {FormatSpec::fp(2, 3), FormatSpec::fp(2, 3)}, {FormatSpec::fp(4, 3), FormatSpec::fp(2, 1)},
      {FormatSpec::fp(5, 10), FormatSpec::fp(2, 3)}, {FormatSpec::fp(3, 4), FormatSpec::fp(1, 5)},
      {FormatSpec::integer(4), FormatSpec::integer(3)}, {FormatSpec::integer(8, false), FormatSpec::integer(4)}};
  for (const auto& [fa, fw] : pairs) {
    const auto b = compile_bundle(fa, fw, fa);
    const auto out = product_format(fa, fw);
    for (int t = 0; t < 50; ++t) {
      const auto aw = random_words(rng, static_cast<std::size_t>(b.act_sep.elements), fa);
      const auto ww = random_words(rng, static_cast<std::size_t>(b.wgt_sep.elements), fw);
      const auto got = pe_multiply(PackedBuffer::from_words(aw, fa), PackedBuffer::from_words(ww, fw), b, out);
      REQUIRE(got.size() == aw.size() * ww.size());
      for (std::size_t j = 0; j < ww.size(); ++j) {
        for (std::size_t i = 0; i < aw.size(); ++i) {
          const auto exact = mul_ref(decode(aw[i], fa), decode(ww[j], fw));
          CHECK(got[j * aw.size() + i].word() == encode(exact, out).word());
        }
      }
    }
  }
}

TEST_CASE("reduction tree products with the implicit one") {
  std::mt19937_64 rng(4);
  for (int p = 1; p <= 6; ++p) {
    for (int q = 1; q <= 6; ++q) {
      const auto fa = FormatSpec::fp(2, p);
      const auto fw = FormatSpec::fp(2, q);
      const auto b = compile_bundle(fa, fw, fa);
      const auto aw = random_words(rng, static_cast<std::size_t>(b.act_sep.elements), fa);
      const auto ww = random_words(rng, static_cast<std::size_t>(b.wgt_sep.elements), fw);
      auto regs = PERegisters::sized_for(b.cfg);
      load_operands(regs, PackedBuffer::from_words(aw, fa), PackedBuffer::from_words(ww, fw), b);
      regs = separate(std::move(regs), b);
      for (int c = 0; c < b.prim.cycles; ++c) {
        const auto raw = run_fbrt(gen_primitives(regs, b, c), b);
        for (int slot = 0; slot < b.prim.ops_in_cycle(c); ++slot) {
          const auto op = b.prim.op_pair(c * b.prim.ops_per_cycle + slot);
          const std::uint64_t am = aw[static_cast<std::size_t>(op.act)] & ((1u << p) - 1);
          const std::uint64_t wm = ww[static_cast<std::size_t>(op.wgt)] & ((1u << q) - 1);
          CHECK(raw.at(static_cast<std::size_t>(slot)) == am * wm);
          CHECK(apply_implicit_one(raw[static_cast<std::size_t>(slot)], am, wm, p, q) ==
                ((std::uint64_t{1} << p) + am) * ((std::uint64_t{1} << q) + wm));
        }
      }
    }
  }
}

TEST_CASE("sign correction yields two's complement products") {
  for (int a = -8; a < 8; ++a) {
    for (int w = -4; w < 4; ++w) {
      const auto am = static_cast<std::uint64_t>(a & 7);
      const auto wm = static_cast<std::uint64_t>(w & 3);
      CHECK(apply_sign_correction(am * wm, am, wm, 3, 2, a < 0, w < 0) == a * w);
    }
  }
}

TEST_CASE("segmented exponent addition never leaks a carry") {
  std::mt19937_64 rng(8);
  for (int width = 1; width <= 12; ++width) {
    const auto plan = compile_fbea_width(width, 144);
    const auto sw = static_cast<std::size_t>(plan.segment_width);
    std::uniform_int_distribution<std::uint64_t> d(0, (std::uint64_t{1} << width) - 1);
    for (int t = 0; t < 20; ++t) {
      BitVector x(plan.breaks.size()), y(plan.breaks.size());
      std::vector<std::uint64_t> xs, ys;
      for (int s = 0; s < plan.segments; ++s) {
        xs.push_back(d(rng));
        ys.push_back(d(rng));
        for (int bit = 0; bit < width; ++bit) {
          x[static_cast<std::size_t>(s) * sw + static_cast<std::size_t>(bit)] = (xs.back() >> bit) & 1;
          y[static_cast<std::size_t>(s) * sw + static_cast<std::size_t>(bit)] = (ys.back() >> bit) & 1;
        }
      }
      const auto sum = fbea_add(x, y, plan.breaks);
      for (int s = 0; s < plan.segments; ++s) {
        std::uint64_t v = 0;
        for (std::size_t bit = 0; bit < sw; ++bit) {
          if (sum[static_cast<std::size_t>(s) * sw + bit]) v |= std::uint64_t{1} << bit;
        }
        CHECK(v == xs[static_cast<std::size_t>(s)] + ys[static_cast<std::size_t>(s)]);
      }
    }
  }
}

TEST_CASE("FP6 dot products match the frozen exact sums") {
  const auto fp6 = FormatSpec::fp(2, 3);
  const auto half = FormatSpec::fp(5, 10);
  const auto b = compile_bundle(fp6, fp6, half);
  REQUIRE(kDot.size() == 15);
  for (const auto& r : kDot) {
    std::vector<ScalarValue> av, wv;
    for (auto x : r.a) av.push_back(decode(x, fp6));
    for (auto x : r.w) wv.push_back(decode(x, fp6));
    CHECK(dot_ref(av, wv) == r.exact.exact());
    PeCounters counters;
    const auto got = mac_dot(r.a, r.w, b, &counters);
    CHECK(counters.precision_loss_events == 0);
    CHECK(got.word() == r.e5m10_word);
  }
}

TEST_CASE("dot products without alignment loss are exact") {
  std::mt19937_64 rng(12);
  const std::vector<std::pair<FormatSpec, FormatSpec>> pairs{{FormatSpec::fp(2, 3), FormatSpec::fp(5, 10)},
                                                             {FormatSpec::fp(2, 3), FormatSpec::fp(2, 3)},
                                                             {FormatSpec::fp(4, 3), FormatSpec::fp(4, 3)},
                                                             {FormatSpec::fp(5, 2), FormatSpec::fp(5, 10)}};
  int lossy = 0;
  for (const auto& [in, out] : pairs) {
    const auto b = compile_bundle(in, in, out);
    for (int t = 0; t < 300; ++t) {
      const std::size_t n = 1 + rng() % 16;
      const auto a = random_words(rng, n, in);
      const auto w = random_words(rng, n, in);
      std::vector<ScalarValue> av, wv;
      for (auto x : a) av.push_back(decode(x, in));
      for (auto x : w) wv.push_back(decode(x, in));
      const auto expect = encode(dot_ref(av, wv), out).word();
      PeCounters counters;
      const auto got = mac_dot(a, w, b, &counters).word();
      CAPTURE(to_string(in));
      CAPTURE(to_string(out));
      if (counters.precision_loss_events == 0) {
        CHECK(std::abs(ordinal(got, out) - ordinal(expect, out)) <= 1);
        CHECK(got == expect);
      } else {
        ++lossy;
      }
    }
  }
  MESSAGE("dot products with alignment loss: " << lossy);
}

TEST_CASE("aligning equal exponents loses nothing") {
  const auto fp6 = FormatSpec::fp(2, 3);
  const auto b = compile_bundle(fp6, fp6, FormatSpec::fp(5, 10));
  std::vector<ProductTerm> terms;
  for (std::uint64_t s = 1; s <= 12; ++s) {
    terms.push_back({s % 3 == 0, false, 2, 64 + s, 6});
  }
  const auto aligned = normalize_exponents(terms);
  for (const auto& x : aligned) CHECK(x.delta == 0);
  PeCounters counters;
  const auto r = accumulate(terms, b, FormatSpec::fp(5, 10), &counters);
  CHECK(counters.precision_loss_events == 0);
  ExactNumber exact;
  for (const auto& t : terms) {
    exact = exact + ExactNumber(t.sign, BigUInt(t.significand), t.exponent - t.frac_bits);
  }
  CHECK(r.word() == encode(exact, FormatSpec::fp(5, 10)).word());
}

TEST_CASE("tiles and MX scaling") {
  std::mt19937_64 rng(2);
  const auto fp6 = FormatSpec::fp(2, 3);
  const auto out = FormatSpec::fp(5, 10);
  const auto b = compile_bundle(fp6, fp6, out);
  const std::size_t m = 5, k = 9, n = 6;
  const auto aw = random_words(rng, m * k, fp6);
  const auto ww = random_words(rng, k * n, fp6);
  const auto ta = PackedTile::from_words(aw, m, k, fp6);
  const auto tw = PackedTile::from_words(ww, k, n, fp6);
  const MxScales mx{decode(0b010001, fp6), decode(0b101000, fp6)};
  const auto plain = pe_mac_tile(ta, tw, b, out);
  const auto scaled = pe_mac_tile(ta, tw, b, out, mx);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      MxBlock ba{mx.act, {}}, bw{mx.wgt, {}};
      for (std::size_t kk = 0; kk < k; ++kk) {
        ba.elements.push_back(decode(ta.at(i, kk), fp6));
        bw.elements.push_back(decode(tw.at(kk, j), fp6));
      }
      CHECK(plain.at(i, j) == encode(dot_ref(ba.elements, bw.elements), out).word());
      CHECK(scaled.at(i, j) == encode(mx_dot_ref(ba, bw), out).word());
    }
  }
  CHECK_THROWS_AS(pe_mac_tile(ta, ta, b, out), ShapeError);
}

TEST_CASE("injected faults are visible at the output") {
  const auto fp6 = FormatSpec::fp(2, 3);
  const auto b = compile_bundle(fp6, fp6, fp6);
  const auto act = PackedBuffer::from_words(std::vector<std::uint64_t>{0b001101}, fp6);
  const auto wgt = PackedBuffer::from_words(std::vector<std::uint64_t>{0b001011}, fp6);
  const auto out = product_format(fp6, fp6);
  const auto good = pe_multiply(act, wgt, b, out).at(0).word();
  PeOptions opts;
  opts.fault = Fault::ImplicitOne;
  CHECK(pe_multiply(act, wgt, b, out, opts).at(0).word() != good);
}

TEST_CASE("counters track loads and cycles") {
  const auto fp8 = FormatSpec::fp(4, 3);
  const auto b = compile_bundle(fp8, fp8, fp8);
  PeCounters c;
  PeOptions opts;
  opts.counters = &c;
  std::mt19937_64 rng(1);
  const auto act = PackedBuffer::from_words(random_words(rng, 3, fp8), fp8);
  const auto wgt = PackedBuffer::from_words(random_words(rng, 3, fp8), fp8);
  pe_multiply(act, wgt, b, fp8, opts);
  CHECK(c.ops == 9);
  CHECK(c.register_loads == 1);
  CHECK(c.multiply_cycles == static_cast<std::uint64_t>(b.prim.cycles));
}
