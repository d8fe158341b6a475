#include "doctest.h"

#include <numeric>
#include <string>
#include <vector>

#include "flexibit/errors.hpp"
#include "flexibit/workloads.hpp"

using namespace flexibit;

TEST_CASE("expanded GEMMs add up to the closed-form MAC count") {
  for (const auto& name : ModelSpec::preset_names()) {
    for (bool attention : {true, false}) {
      auto m = ModelSpec::preset(name);
      m.include_attention = attention;
      const auto classes = expand_classes(m);
      CHECK(classes.size() == gemm_classes(attention).size());
      double per_class = 0;
      for (const auto& g : classes) per_class += g.macs();
      CAPTURE(name);
      CHECK(per_class == doctest::Approx(closed_form_macs(m)).epsilon(1e-12));
      if (m.num_layers <= 32) {
        const auto all = expand(m);
        CHECK(all.size() == classes.size() * static_cast<std::size_t>(m.num_layers));
        double total = 0;
        for (const auto& g : all) total += g.macs();
        CHECK(total == doctest::Approx(closed_form_macs(m)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("closed form for a small hand-computed model") {
  ModelSpec m;
  m.name = "tiny";
  m.seq_len = 8;
  m.num_layers = 2;
  m.d_model = 4;
  m.d_ff = 16;
  m.head_dim = 2;
  CHECK(closed_form_macs(m) == 2.0 * (8 * (4 * 16 + 2 * 4 * 16) + 2 * 64 * 4));
  m.include_attention = false;
  CHECK(closed_form_macs(m) == 2.0 * 8 * (4 * 16 + 2 * 4 * 16));
}

TEST_CASE("layer classes carry the model precision") {
  auto m = ModelSpec::preset("Llama-2-7b");
  m.precision = {FormatSpec::fp(4, 3), FormatSpec::fp(2, 1)};
  CHECK(gemm_classes(true).size() == 6);
  CHECK(gemm_classes(false).size() == 4);
  for (const auto& g : expand_classes(m)) {
    CHECK(g.fmt_a == FormatSpec::fp(4, 3));
    CHECK(g.fmt_o == g.fmt_a);
    CHECK_NOTHROW(g.validate());
  }
}

TEST_CASE("named formats and pairs") {
  CHECK(parse_named_format("FP6") == FormatSpec::fp(2, 3));
  CHECK(parse_named_format("fp16") == FormatSpec::fp(5, 10));
  CHECK(parse_named_format("BF16") == FormatSpec::fp(8, 7));
  CHECK(parse_named_format("e3m2") == FormatSpec::fp(3, 2));
  CHECK(short_name(FormatSpec::fp(2, 2)) == "FP5");
  CHECK(short_name(FormatSpec::fp(3, 3)) == "e3m3");
  const auto pairs = proposed_pairs();
  CHECK(pairs.size() == 13);
  CHECK(pairs.front().label() == "AFP16-WFP16");
  CHECK(pairs.back().label() == "AFP4-WFP4");
}

TEST_CASE("pairs a PE cannot hold are skipped with a warning") {
  const auto m = ModelSpec::preset("Bert");
  std::vector<PrecisionPair> pairs{{FormatSpec::fp(2, 3), FormatSpec::fp(2, 3)},
                                   {FormatSpec::fp(8, 23), FormatSpec::fp(2, 3)}};
  std::vector<std::string> warnings;
  const auto sweep = precision_sweep(m, pairs, &warnings);
  CHECK(sweep.size() == 1);
  CHECK(warnings.size() == 1);
  PEConfig narrow;
  narrow.reg_width = 12;
  warnings.clear();
  const std::vector<PrecisionPair> fp16{{FormatSpec::fp(5, 10), FormatSpec::fp(5, 10)}};
  CHECK(precision_sweep(m, fp16, &warnings, narrow).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("model validation") {
  CHECK(ModelSpec::preset_names().size() == 4);
  CHECK(ModelSpec::preset("gpt-3").d_model == 12288);
  CHECK_THROWS_AS(ModelSpec::preset("T5"), ConfigError);
  ModelSpec m;
  m.d_ff = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
