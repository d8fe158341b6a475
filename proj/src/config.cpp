// SPDX-License-Identifier: Apache-2.0
#include "flexibit/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

using nlohmann::json;
constexpr double kMiB = 1024.0 * 1024.0;

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in what().
    throw ConfigError(source + ": " + e.what());
  }
}

/// Reads typed values out of a JSON object and names the source on failure.
class Reader {
 public:
  Reader(const json& j, std::string source) : j_(j), source_(std::move(source)) {
    if (!j_.is_object()) throw ConfigError(source_ + ": expected a JSON object");
  }

  template <class T>
  T get(const char* key) const {
    const auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
    return convert<T>(*it, key);
  }

  template <class T>
  T get_or(const char* key, T fallback) const {
    const auto it = j_.find(key);
    return it == j_.end() ? fallback : convert<T>(*it, key);
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const {
    if (!has(key)) throw ConfigError(source_ + ": missing key '" + key + "'");
    return j_.at(key);
  }
  const std::string& source() const { return source_; }

 private:
  template <class T>
  T convert(const json& v, const char* key) const {
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(source_ + ": key '" + key + "': " + e.what());
    }
  }

  const json& j_;
  std::string source_;
};

std::string lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

PrecisionPair parse_pair(const json& j, const std::string& source) {
  try {
    if (j.is_array() && j.size() == 2) {
      return {parse_named_format(j[0].get<std::string>()), parse_named_format(j[1].get<std::string>())};
    }
    if (j.is_object()) {
      return {parse_named_format(j.at("act").get<std::string>()), parse_named_format(j.at("wgt").get<std::string>())};
    }
  } catch (const FormatError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(source + ": bad precision pair: " + e.what());
  }
  throw ConfigError(source + ": a precision pair is [act, wgt] or {\"act\": .., \"wgt\": ..}");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> string_or_list(const Reader& r, const char* one, const char* many) {
  std::vector<std::string> out;
  if (r.has(one)) out.push_back(r.get<std::string>(one));
  if (r.has(many)) {
    for (auto& s : r.get<std::vector<std::string>>(many)) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AcceleratorConfig parse_machine(std::string_view text, const std::string& source) {
  const json j = parse_json(text, source);
  const Reader r(j, source);
  AcceleratorConfig c;
  c.name = r.get<std::string>("name");
  c.num_pes = r.get<int>("num_pes");
  c.array_x = r.get<int>("array_x");
  c.array_y = r.get<int>("array_y");
  c.reg_width = r.get<int>("reg_width");
  c.wgt_glb_bytes = r.get<double>("wgt_glb_mib") * kMiB;
  c.act_out_glb_bytes = r.get<double>("act_out_glb_mib") * kMiB;
  c.local_buf_bytes_per_pe = r.get<double>("local_buf_kib_per_pe") * 1024.0;
  c.noc_w_gbps = r.get<double>("noc_w_gbps");
  c.noc_a_gbps = r.get<double>("noc_a_gbps");
  c.offchip_gbps = r.get<double>("offchip_gbps");
  c.clock_hz = r.get<double>("clock_hz");
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ModelSpec parse_model(std::string_view text, const std::string& source) {
  const json j = parse_json(text, source);
  const Reader r(j, source);
  ModelSpec m;
  m.name = r.get<std::string>("name");
  m.seq_len = r.get<std::int64_t>("seq_len");
  m.num_layers = r.get<std::int64_t>("num_layers");
  m.d_model = r.get<std::int64_t>("d_model");
  m.d_ff = r.get<std::int64_t>("d_ff");
  m.head_dim = r.get_or<std::int64_t>("head_dim", 64);
  m.include_attention = r.get_or<bool>("include_attention", true);
  if (r.has("precision")) m.precision = parse_pair(r.at("precision"), source);
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return m;
}

EnergyTable parse_energy_table(std::string_view text, const std::string& source) {
  const json j = parse_json(text, source);
  const Reader r(j, source);
  EnergyTable t;
  t.provenance = r.get<std::string>("provenance");
  t.prim_and_pj = r.get<double>("prim_and_pj");
  t.tree_node_pj = r.get<double>("tree_node_pj");
  t.fbea_pj = r.get<double>("fbea_pj");
  t.sram_rd_pj = r.get<double>("sram_rd_pj");
  t.sram_wr_pj = r.get<double>("sram_wr_pj");
  t.noc_pj = r.get<double>("noc_pj");
  t.noc_hops = r.get<double>("noc_hops");
  t.dram_pj = r.get<double>("dram_pj");
  t.pe_mm2 = r.get<std::map<std::string, double>>("pe_mm2");
  t.glb_mm2_per_mib = r.get<double>("glb_mm2_per_mib");
  t.noc_mm2 = r.get<double>("noc_mm2");
  t.bpu_mm2 = r.get<double>("bpu_mm2");
  t.machine_area_mm2 = r.get_or<std::map<std::string, double>>("machine_area_mm2", {});
  for (const auto& [k, v] : r.get_or<std::map<std::string, double>>("pe_mm2_by_reg_width", {})) {
    try {
      t.pe_mm2_by_reg_width[std::stoi(k)] = v;
    } catch (const std::exception&) {
      throw ConfigError(source + ": pe_mm2_by_reg_width key '" + k + "' is not an integer");
    }
  }
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return t;
}

AcceleratorConfig load_machine(const std::filesystem::path& path) {
  return parse_machine(read_text_file(path), path.string());
}

ModelSpec load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path), path.string()); }

EnergyTable load_energy_table(const std::filesystem::path& path) {
  return parse_energy_table(read_text_file(path), path.string());
}

std::string machine_to_json(const AcceleratorConfig& c) {
  json j = {{"name", c.name},
            {"num_pes", c.num_pes},
            {"array_x", c.array_x},
            {"array_y", c.array_y},
            {"reg_width", c.reg_width},
            {"wgt_glb_mib", c.wgt_glb_bytes / kMiB},
            {"act_out_glb_mib", c.act_out_glb_bytes / kMiB},
            {"local_buf_kib_per_pe", c.local_buf_bytes_per_pe / 1024.0},
            {"noc_w_gbps", c.noc_w_gbps},
            {"noc_a_gbps", c.noc_a_gbps},
            {"offchip_gbps", c.offchip_gbps},
            {"clock_hz", c.clock_hz}};
  return j.dump(2) + "\n";
}

std::string model_to_json(const ModelSpec& m) {
  json j = {{"name", m.name},         {"seq_len", m.seq_len}, {"num_layers", m.num_layers},
            {"d_model", m.d_model},   {"d_ff", m.d_ff},       {"head_dim", m.head_dim},
            {"include_attention", m.include_attention},
            {"precision", {short_name(m.precision.act), short_name(m.precision.wgt)}}};
  return j.dump(2) + "\n";
}

std::string energy_table_to_json(const EnergyTable& t) {
  json by_width = json::object();
  for (const auto& [k, v] : t.pe_mm2_by_reg_width) by_width[std::to_string(k)] = v;
  json j = {{"provenance", t.provenance},
            {"prim_and_pj", t.prim_and_pj},
            {"tree_node_pj", t.tree_node_pj},
            {"fbea_pj", t.fbea_pj},
            {"sram_rd_pj", t.sram_rd_pj},
            {"sram_wr_pj", t.sram_wr_pj},
            {"noc_pj", t.noc_pj},
            {"noc_hops", t.noc_hops},
            {"dram_pj", t.dram_pj},
            {"pe_mm2", t.pe_mm2},
            {"glb_mm2_per_mib", t.glb_mm2_per_mib},
            {"noc_mm2", t.noc_mm2},
            {"bpu_mm2", t.bpu_mm2},
            {"machine_area_mm2", t.machine_area_mm2},
            {"pe_mm2_by_reg_width", by_width}};
  return j.dump(2) + "\n";
}

std::string to_string(DataflowPolicy p) {
  switch (p) {
    case DataflowPolicy::WeightStationary: return "WS";
    case DataflowPolicy::OutputStationary: return "OS";
    case DataflowPolicy::Best: return "Best";
  }
  return "?";
}

DataflowPolicy parse_dataflow_policy(std::string_view s) {
  if (lower(s) == "best") return DataflowPolicy::Best;
  return parse_dataflow(s) == Dataflow::WeightStationary ? DataflowPolicy::WeightStationary
                                                         : DataflowPolicy::OutputStationary;
}

void RunManifest::validate() const {
  for (const auto& p : machines) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError("machine config '" + p.string() + "' does not exist");
  }
  for (const auto& p : models) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError("model config '" + p.string() + "' does not exist");
  }
  if (energy && !std::filesystem::is_regular_file(*energy)) {
    throw ConfigError("energy table '" + energy->string() + "' does not exist");
  }
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

RunManifest parse_manifest(std::string_view text, const std::string& source, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, source);
  const Reader r(j, source);
  RunManifest m;
  for (const auto& p : string_or_list(r, "machine", "machines")) m.machines.push_back(resolve(base_dir, p));
  for (const auto& p : string_or_list(r, "model", "models")) m.models.push_back(resolve(base_dir, p));
  if (m.machines.empty()) throw ConfigError(source + ": missing key 'machine' or 'machines'");
  if (m.models.empty()) throw ConfigError(source + ": missing key 'model' or 'models'");

  const json& pairs = r.at("pairs");
  if (pairs.is_string()) {
    if (lower(pairs.get<std::string>()) != "proposed") {
      throw ConfigError(source + ": 'pairs' must be a list or the string \"proposed\"");
    }
    m.pairs = proposed_pairs();
  } else if (pairs.is_array()) {
    for (const auto& p : pairs) m.pairs.push_back(parse_pair(p, source));
  } else {
    throw ConfigError(source + ": 'pairs' must be a list or the string \"proposed\"");
  }

  try {
    m.dataflow = parse_dataflow_policy(r.get_or<std::string>("dataflow", "Best"));
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (r.has("energy")) m.energy = resolve(base_dir, r.get<std::string>("energy"));
  m.output_dir = resolve(base_dir, r.get_or<std::string>("output_dir", "out"));
  m.seed = r.get_or<std::uint64_t>("seed", 1);
  m.threads = r.get_or<int>("threads", 0);
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  RunManifest m = parse_manifest(read_text_file(path), path.string(), path.parent_path());
  m.validate();
  return m;
}

}  // namespace flexibit
