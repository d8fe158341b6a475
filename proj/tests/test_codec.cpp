#include "doctest.h"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "flexibit/codec.hpp"
#include "flexibit/errors.hpp"
#include "flexibit/format.hpp"
#include "support.hpp"

using namespace flexibit;
using flexibit::test::fraction;

namespace {

struct DecodeRow {
  FormatSpec fmt;
  std::uint64_t word;
  test::Dyadic value;
};

struct EncodeRow {
  FormatSpec fmt;
  test::Dyadic value;
  std::uint64_t word;
};

const std::vector<DecodeRow> kDecode = {
#include "frozen/decode_vectors.inc"
};

const std::vector<EncodeRow> kEncode = {
#include "frozen/encode_vectors.inc"
};

}  // namespace

TEST_CASE("decode matches the frozen rational oracle") {
  REQUIRE(kDecode.size() > 100);
  for (const auto& row : kDecode) {
    CAPTURE(to_string(row.fmt));
    CAPTURE(row.word);
    const auto v = decode(row.word, row.fmt);
    CHECK(to_exact(v) == row.value.exact());
    CHECK(v.word() == row.word);
  }
}

TEST_CASE("encode matches the frozen rational oracle") {
  REQUIRE(kEncode.size() > 90);
  for (const auto& row : kEncode) {
    CAPTURE(to_string(row.fmt));
    CAPTURE(row.value.exact().to_string());
    CHECK(encode(row.value.exact(), row.fmt).word() == row.word);
  }
}

TEST_CASE("every word of small formats survives decode then encode") {
  for (int e = 1; e <= 5; ++e) {
    for (int m = 0; m + e + 1 <= 10; ++m) {
      const auto fmt = FormatSpec::fp(e, m);
      for (std::uint64_t w = 0; w < (std::uint64_t{1} << fmt.total_bits()); ++w) {
        REQUIRE(encode(to_exact(decode(w, fmt)), fmt).word() == w);
      }
    }
  }
  for (int bits : {2, 4, 8}) {
    for (bool s : {true, false}) {
      const auto fmt = FormatSpec::integer(bits, s);
      for (std::uint64_t w = 0; w < (std::uint64_t{1} << bits); ++w) {
        REQUIRE(encode(to_exact(decode(w, fmt)), fmt).word() == w);
      }
    }
  }
}

TEST_CASE("encode is monotone and never rounds away from zero") {
  const auto fmt = FormatSpec::fp(3, 2);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> dist(-1 << 14, 1 << 14);
  for (int i = 0; i < 2000; ++i) {
    const auto a = ExactNumber::from_int(dist(rng)).scaled(-10);
    const auto b = ExactNumber::from_int(dist(rng)).scaled(-10);
    const auto ea = to_exact(encode(a, fmt));
    const auto eb = to_exact(encode(b, fmt));
    if (a <= b) CHECK(ea <= eb);
    CHECK(ea.abs() <= a.abs());
  }
}

TEST_CASE("overflow saturates and underflow flushes") {
  const auto fmt = FormatSpec::fp(2, 3);
  const auto big = encode(ExactNumber::from_int(1000), fmt);
  CHECK(big.exp_field == fmt.max_exp_field());
  CHECK(big.man_field == 7);
  CHECK(encode(ExactNumber::from_int(-1000), fmt).word() == 0b111111);
  CHECK(encode(ExactNumber::from_int(1).scaled(-5), fmt).is_zero);
  CHECK(encode(ExactNumber::from_int(300), FormatSpec::integer(8)).word() == 127);
  CHECK(encode(ExactNumber::from_int(-300), FormatSpec::integer(8)).word() == 0x80);
}

TEST_CASE("the smallest normal shares the zero word and decodes as zero") {
  const auto fmt = FormatSpec::fp(2, 3);
  CHECK(to_exact(decode(0, fmt)).is_zero());
  CHECK(encode(ExactNumber::from_int(1).scaled(-fmt.bias), fmt).word() == 0);
  CHECK(to_exact(decode(1, fmt)) == fraction(9, 16));
}

TEST_CASE("format strings") {
  CHECK(parse_format("e2m3") == FormatSpec::fp(2, 3));
  CHECK(parse_format("FP6:E2M3") == FormatSpec::fp(2, 3));
  CHECK(parse_format("int4") == FormatSpec::integer(4));
  CHECK(parse_format("uint8") == FormatSpec::integer(8, false));
  CHECK(to_string(FormatSpec::fp(5, 10)) == "e5m10");
  CHECK_THROWS_AS(parse_format("fp6"), FormatError);
  CHECK_THROWS_AS(parse_format("fp7:e2m3"), FormatError);
  CHECK_THROWS_AS(parse_format("e0m3"), FormatError);
  CHECK_THROWS_AS(parse_format("banana"), FormatError);
  CHECK_THROWS_AS(FormatSpec::fp(40, 40).validate(), FormatError);
}

TEST_CASE("product and container formats") {
  CHECK(product_format(FormatSpec::fp(5, 10), FormatSpec::fp(2, 3)) == FormatSpec::fp(5, 14));
  CHECK(product_format(FormatSpec::fp(5, 10), FormatSpec::fp(2, 3)).total_bits() == 20);
  CHECK(product_format(FormatSpec::integer(4), FormatSpec::integer(4)).total_bits() == 8);
  CHECK_THROWS_AS(product_format(FormatSpec::fp(2, 3), FormatSpec::integer(4)), FormatError);
  CHECK(padded_container_bits(FormatSpec::fp(2, 3)) == 8);
  CHECK(padded_container_bits(FormatSpec::fp(2, 1)) == 8);
  CHECK(padded_container_bits(FormatSpec::fp(3, 5)) == 16);
  CHECK(padded_container_bits(FormatSpec::fp(5, 10)) == 16);
}

TEST_CASE("bit strings") {
  const auto fmt = FormatSpec::fp(2, 3);
  CHECK(decode("0_01_100", fmt).word() == 0b001100);
  CHECK(to_bit_string(0b101010, fmt) == "101010");
  CHECK_THROWS_AS(decode("0101", fmt), FormatError);
  CHECK_THROWS_AS(decode("01x101", fmt), FormatError);
  CHECK_THROWS_AS(decode(std::uint64_t{64}, fmt), FormatError);
}

TEST_CASE("exact references") {
  const auto fmt = FormatSpec::fp(2, 3);
  const auto a = decode(0b001100, fmt);  // 1.5 * 2^0
  const auto b = decode(0b110000, fmt);  // -1 * 2^1
  CHECK(mul_ref(a, b) == ExactNumber::from_int(-3));
  std::vector<ScalarValue> xs{a, a};
  std::vector<ScalarValue> ys{b, a};
  CHECK(dot_ref(xs, ys) == fraction(-3, 1) + fraction(9, 4));
  std::vector<ScalarValue> shorter{a};
  CHECK_THROWS_AS(dot_ref(xs, shorter), ShapeError);

  MxBlock ba{decode(0b010000, fmt), {a, a}};
  MxBlock bw{decode(0b010000, fmt), {a, b}};
  CHECK(mx_dot_ref(ba, bw) == (to_exact(ba.scale) * to_exact(bw.scale)) * (fraction(9, 4) + fraction(-3, 1)));
}

TEST_CASE("ExactNumber arithmetic is exact and canonical") {
  CHECK(ExactNumber::from_double(0.375) == fraction(3, 8));
  CHECK(ExactNumber::from_double(-6.0) == ExactNumber::from_int(-6));
  CHECK((fraction(1, 1024) + fraction(-1, 1024)).is_zero());
  CHECK((fraction(1, 1024) + fraction(-1, 1024)) == ExactNumber{});
  CHECK(fraction(3, 8) * fraction(5, 2) == fraction(15, 16));
  CHECK(fraction(-5, 4) < fraction(1, 1024));
  CHECK(fraction(12, 1).magnitude_exponent() == 3);
  CHECK(fraction(1, 1).scaled(200).magnitude_exponent() == 200);
  CHECK_THROWS_AS(ExactNumber::from_double(std::numeric_limits<double>::infinity()), Error);
}
