// SPDX-License-Identifier: Apache-2.0
#include "flexibit/workloads.hpp"

#include <cctype>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

std::string lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

struct Alias {
  const char* name;
  FormatSpec fmt;
};

const std::vector<Alias>& aliases() {
  static const std::vector<Alias> a{
      {"FP16", FormatSpec::fp(5, 10)}, {"BF16", FormatSpec::fp(8, 7)}, {"FP8", FormatSpec::fp(4, 3)},
      {"FP6", FormatSpec::fp(2, 3)},   {"FP5", FormatSpec::fp(2, 2)},  {"FP4", FormatSpec::fp(2, 1)},
  };
  return a;
}

}  // namespace

FormatSpec parse_named_format(std::string_view text) {
  const std::string n = lower(text);
  for (const auto& a : aliases()) {
    if (lower(a.name) == n) return a.fmt;
  }
  return parse_format(text);
}

std::string short_name(const FormatSpec& fmt) {
  for (const auto& a : aliases()) {
    if (a.fmt == fmt) return a.name;
  }
  return to_string(fmt);
}

std::string PrecisionPair::label() const { return "A" + short_name(act) + "-W" + short_name(wgt); }

void ModelSpec::validate() const {
  if (seq_len <= 0 || num_layers <= 0 || d_model <= 0 || d_ff <= 0 || head_dim <= 0) {
    throw ConfigError("model '" + name + "' has a non-positive dimension");
  }
  if (d_model % head_dim != 0) throw ConfigError("model '" + name + "': d_model is not a multiple of head_dim");
  precision.act.validate();
  precision.wgt.validate();
}

ModelSpec ModelSpec::preset(std::string_view name) {
  const std::string n = lower(name);
  ModelSpec m;
  if (n == "bert" || n == "bert-base") {
    m.name = "Bert";
    m.num_layers = 12;
    m.d_model = 768;
    m.d_ff = 3072;
  } else if (n == "llama-2-7b" || n == "llama2-7b") {
    m.name = "Llama-2-7b";
    m.num_layers = 32;
    m.d_model = 4096;
    m.d_ff = 11008;
  } else if (n == "llama-2-70b" || n == "llama2-70b") {
    m.name = "Llama-2-70b";
    m.num_layers = 80;
    m.d_model = 8192;
    m.d_ff = 28672;
  } else if (n == "gpt-3" || n == "gpt3") {
    m.name = "GPT-3";
    m.num_layers = 96;
    m.d_model = 12288;
    m.d_ff = 49152;
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) + "'");
  }
  m.seq_len = 2048;
  return m;
}

std::vector<std::string> ModelSpec::preset_names() { return {"Bert", "Llama-2-7b", "Llama-2-70b", "GPT-3"}; }

std::vector<std::string> gemm_classes(bool include_attention) {
  if (include_attention) return {"qkv", "attn_score", "attn_context", "out_proj", "ffn_up", "ffn_down"};
  return {"qkv", "out_proj", "ffn_up", "ffn_down"};
}

namespace {

GemmWorkload class_gemm(const ModelSpec& m, const std::string& cls) {
  GemmWorkload g;
  g.fmt_a = m.precision.act;
  g.fmt_w = m.precision.wgt;
  g.fmt_o = m.precision.act;
  const std::int64_t s = m.seq_len;
  const std::int64_t d = m.d_model;
  if (cls == "qkv") {
    g.M = s, g.K = d, g.N = 3 * d;
  } else if (cls == "attn_score") {
    g.M = s, g.K = m.head_dim, g.N = s, g.count = m.heads();
  } else if (cls == "attn_context") {
    g.M = s, g.K = s, g.N = m.head_dim, g.count = m.heads();
  } else if (cls == "out_proj") {
    g.M = s, g.K = d, g.N = d;
  } else if (cls == "ffn_up") {
    g.M = s, g.K = d, g.N = m.d_ff;
  } else {
    g.M = s, g.K = m.d_ff, g.N = d;
  }
  return g;
}

}  // namespace

std::vector<GemmWorkload> expand(const ModelSpec& model) {
  model.validate();
  std::vector<GemmWorkload> out;
  const auto classes = gemm_classes(model.include_attention);
  out.reserve(static_cast<std::size_t>(model.num_layers) * classes.size());
  for (std::int64_t layer = 0; layer < model.num_layers; ++layer) {
    for (const auto& cls : classes) {
      GemmWorkload g = class_gemm(model, cls);
      g.label = model.name + ".L" + std::to_string(layer) + "." + cls;
      out.push_back(g);
    }
  }
  return out;
}

std::vector<GemmWorkload> expand_classes(const ModelSpec& model) {
  model.validate();
  std::vector<GemmWorkload> out;
  for (const auto& cls : gemm_classes(model.include_attention)) {
    GemmWorkload g = class_gemm(model, cls);
    g.count *= model.num_layers;
    g.label = model.name + "." + cls;
    out.push_back(g);
  }
  return out;
}

double closed_form_macs(const ModelSpec& m) {
  const double s = static_cast<double>(m.seq_len);
  const double d = static_cast<double>(m.d_model);
  const double f = static_cast<double>(m.d_ff);
  double per_layer = s * (4 * d * d + 2 * d * f);
  if (m.include_attention) per_layer += 2 * s * s * d;
  return per_layer * static_cast<double>(m.num_layers);
}

std::vector<PrecisionPair> proposed_pairs() {
  const auto f = [](int bits) {
    switch (bits) {
      case 16: return FormatSpec::fp(5, 10);
      case 8: return FormatSpec::fp(4, 3);
      case 6: return FormatSpec::fp(2, 3);
      case 5: return FormatSpec::fp(2, 2);
      default: return FormatSpec::fp(2, 1);
    }
  };
  const int pairs[13][2] = {{16, 16}, {16, 8}, {16, 6}, {16, 4}, {8, 8}, {8, 6}, {8, 4},
                            {6, 6},   {6, 5},  {6, 4},  {5, 5},  {5, 4}, {4, 4}};
  std::vector<PrecisionPair> out;
  for (const auto& p : pairs) out.push_back({f(p[0]), f(p[1])});
  return out;
}

std::vector<SweepPoint> precision_sweep(const ModelSpec& model, std::span<const PrecisionPair> pairs,
                                        std::vector<std::string>* warnings, const PEConfig& cfg) {
  std::vector<SweepPoint> out;
  for (const auto& pair : pairs) {
    try {
      pair.act.validate();
      pair.wgt.validate();
      pe_throughput(pair.act, pair.wgt, cfg);
    } catch (const Error& e) {
      if (warnings) warnings->push_back("skipping " + pair.label() + ": " + e.what());
      continue;
    }
    ModelSpec m = model;
    m.precision = pair;
    out.push_back({pair, expand_classes(m)});
  }
  return out;
}

}  // namespace flexibit
