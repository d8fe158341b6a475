// SPDX-License-Identifier: Apache-2.0
#include "flexibit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "flexibit/bitpack.hpp"
#include "flexibit/errors.hpp"
#include "flexibit/validate.hpp"

namespace flexibit {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += '"';
    r += c;
  }
  return r + "\"";
}

/// Runs f(i) for i in [0, n) on `threads` workers. The first exception (in
/// index order) is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int threads, F f) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<SimReport> try_baseline(const GemmWorkload& g, const AcceleratorConfig& acc, ArchKind kind,
                                      std::optional<Dataflow> df) {
  try {
    const MachineModel m = baseline_model(g, kind, acc.pe_config());
    return df ? simulate_model(g, acc, *df, m) : simulate_best(g, acc, m);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

struct Point {
  std::size_t model;
  std::size_t machine;
  PrecisionPair pair;
  GemmWorkload gemm;
  std::string layer;
  std::optional<Dataflow> dataflow;  // nullopt: best
};

struct PointResult {
  SimReport flexibit;
  SimReport padded;
  double energy_j = 0;
  std::optional<SimReport> tc;
  std::optional<SimReport> bf;
};

const char* kColumns =
    "model,layer,machine,act,wgt,pair,policy,dataflow,M,N,K,count,macs,pe_throughput,cycles,seconds,"
    "compute_cycles,dram_cycles,noc_cycles,dram_bits,noc_bits,pe_util,energy_j,edp_js,padded_cycles,"
    "tc_cycles,bf_cycles,norm_latency_vs_tc,norm_padded_vs_tc,norm_latency_vs_bf";

std::string layer_of(const std::string& label) {
  const auto dot = label.rfind('.');
  return dot == std::string::npos ? label : label.substr(dot + 1);
}

int write_file(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write '" << path.string() << "'\n";
    return 2;
  }
  f << text;
  return 0;
}

std::filesystem::path output_dir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("FLEXIBIT_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return fallback;
}

Fault parse_fault(const std::string& s) {
  if (s == "none") return Fault::None;
  if (s == "implicit-one") return Fault::ImplicitOne;
  if (s == "exponent-guard") return Fault::ExponentGuard;
  throw ConfigError("unknown fault '" + s + "' (none, implicit-one, exponent-guard)");
}

std::vector<PrecisionPair> parse_pairs(const std::vector<std::string>& items) {
  std::vector<PrecisionPair> out;
  for (const auto& item : items) {
    if (item == "proposed") {
      const auto all = proposed_pairs();
      out.insert(out.end(), all.begin(), all.end());
      continue;
    }
    const auto sep = item.find_first_of(":x");
    if (sep == std::string::npos) throw ConfigError("precision pair '" + item + "' is not ACT:WGT");
    try {
      out.push_back({parse_named_format(item.substr(0, sep)), parse_named_format(item.substr(sep + 1))});
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

}  // namespace

AcceleratorConfig machine_by_name_or_path(const std::string& s) {
  if (std::filesystem::is_regular_file(s)) return load_machine(s);
  return AcceleratorConfig::preset(s);
}

ModelSpec model_by_name_or_path(const std::string& s) {
  if (std::filesystem::is_regular_file(s)) return load_model(s);
  return ModelSpec::preset(s);
}

RunInputs resolve(const RunManifest& manifest) {
  manifest.validate();
  RunInputs in;
  for (const auto& p : manifest.machines) in.machines.push_back(load_machine(p));
  for (const auto& p : manifest.models) in.models.push_back(load_model(p));
  in.pairs = manifest.pairs;
  in.dataflow = manifest.dataflow;
  if (manifest.energy) in.energy = load_energy_table(*manifest.energy);
  in.threads = manifest.threads;
  return in;
}

RunOutput run(const RunInputs& in) {
  std::vector<Point> points;
  std::vector<std::string> warnings;
  std::vector<std::optional<Dataflow>> flows;
  switch (in.dataflow) {
    case DataflowPolicy::WeightStationary: flows = {Dataflow::WeightStationary}; break;
    case DataflowPolicy::OutputStationary: flows = {Dataflow::OutputStationary}; break;
    case DataflowPolicy::Best: flows = {std::nullopt}; break;
  }
  for (std::size_t mi = 0; mi < in.models.size(); ++mi) {
    for (std::size_t ai = 0; ai < in.machines.size(); ++ai) {
      std::vector<std::string> w;
      const auto sweep = precision_sweep(in.models[mi], in.pairs, &w, in.machines[ai].pe_config());
      for (auto& msg : w) warnings.push_back(in.models[mi].name + " on " + in.machines[ai].name + ": " + msg);
      for (const SweepPoint& sp : sweep) {
        for (const GemmWorkload& g : sp.gemms) {
          for (const auto& df : flows) points.push_back({mi, ai, sp.pair, g, layer_of(g.label), df});
        }
      }
    }
  }

  std::vector<PointResult> results(points.size());
  parallel_for(points.size(), in.threads, [&](std::size_t i) {
    const Point& p = points[i];
    const AcceleratorConfig& acc = in.machines[p.machine];
    PointResult& r = results[i];
    const AblationResult ab = p.dataflow ? packing_ablation(p.gemm, acc, *p.dataflow) : packing_ablation(p.gemm, acc);
    r.flexibit = ab.packed;
    r.padded = ab.padded;
    r.energy_j = energy(r.flexibit, in.energy).total_j;
    r.tc = try_baseline(p.gemm, acc, ArchKind::TensorCoreLike, p.dataflow);
    r.bf = try_baseline(p.gemm, acc, ArchKind::BitFusionLike, p.dataflow);
  });

  std::ostringstream csv;
  csv << "# " << kRunCsvSchema << "; energy table: " << in.energy.provenance << "\n" << kColumns << "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const PointResult& r = results[i];
    const SimReport& f = r.flexibit;
    const auto opt = [](const std::optional<SimReport>& s) { return s ? num(s->cycles) : std::string(); };
    const auto ratio = [&](double x, const std::optional<SimReport>& s) {
      return s && s->cycles > 0 ? num(x / s->cycles) : std::string();
    };
    csv << quoted(in.models[p.model].name) << ',' << p.layer << ',' << quoted(in.machines[p.machine].name) << ','
        << short_name(p.pair.act) << ',' << short_name(p.pair.wgt) << ',' << p.pair.label() << ','
        << (p.dataflow ? to_string(*p.dataflow) : std::string("Best")) << ',' << to_string(f.plan.dataflow) << ','
        << p.gemm.M << ',' << p.gemm.N << ',' << p.gemm.K << ',' << p.gemm.count << ',' << num(p.gemm.macs()) << ','
        << num(f.pe_throughput) << ',' << num(f.cycles) << ',' << num(f.seconds) << ','
        << num(f.breakdown.at("compute_cycles")) << ',' << num(f.breakdown.at("dram_cycles")) << ','
        << num(f.breakdown.at("noc_cycles")) << ',' << num(f.actions.dram_bits) << ',' << num(f.noc_bits) << ','
        << num(f.pe_util) << ',' << num(r.energy_j) << ',' << num(edp(f.seconds, r.energy_j)) << ','
        << num(r.padded.cycles) << ',' << opt(r.tc) << ',' << opt(r.bf) << ',' << ratio(f.cycles, r.tc) << ','
        << ratio(r.padded.cycles, r.tc) << ',' << ratio(f.cycles, r.bf) << "\n";
  }

  // Totals per (model, machine, pair, dataflow policy entry).
  std::ostringstream sum;
  sum << std::fixed << std::setprecision(4);
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    double fc = 0, tc = 0, bf = 0, e = 0;
    bool have_tc = true, have_bf = true;
    while (j < points.size() && points[j].model == points[i].model && points[j].machine == points[i].machine &&
           points[j].pair == points[i].pair) {
      fc += results[j].flexibit.cycles;
      e += results[j].energy_j;
      if (results[j].tc) tc += results[j].tc->cycles; else have_tc = false;
      if (results[j].bf) bf += results[j].bf->cycles; else have_bf = false;
      ++j;
    }
    const AcceleratorConfig& acc = in.machines[points[i].machine];
    sum << in.models[points[i].model].name << " / " << acc.name << " / " << points[i].pair.label()
        << ": latency " << fc / acc.clock_hz << " s, energy " << e << " J";
    if (have_tc && tc > 0) sum << ", vs TensorCoreLike " << 100.0 * (1.0 - fc / tc) << "% lower";
    if (have_bf && bf > 0) sum << ", vs BitFusionLike " << 100.0 * (1.0 - fc / bf) << "% lower";
    sum << "\n";
    i = j;
  }
  for (const auto& w : warnings) sum << "warning: " << w << "\n";
  return {csv.str(), sum.str()};
}

std::string ablation_csv(const AcceleratorConfig& machine, const ModelSpec& model) {
  std::ostringstream csv;
  csv << "# flexibit-ablation-csv 1\n"
      << "model,layer,machine,pair,dataflow,packed_cycles,padded_cycles,latency_improvement,"
         "packed_dram_bits,padded_dram_bits,tc_cycles,norm_packed_vs_tc,norm_padded_vs_tc\n";
  for (const GemmWorkload& g : expand_classes(model)) {
    const AblationResult r = packing_ablation(g, machine);
    const auto tc = try_baseline(g, machine, ArchKind::TensorCoreLike, std::nullopt);
    const auto norm = [&](double c) { return tc ? num(c / tc->cycles) : std::string(); };
    csv << quoted(model.name) << ',' << layer_of(g.label) << ',' << quoted(machine.name) << ','
        << model.precision.label() << ',' << to_string(r.packed.plan.dataflow) << ',' << num(r.packed.cycles) << ','
        << num(r.padded.cycles) << ',' << num(r.latency_improvement()) << ',' << num(r.packed.actions.dram_bits)
        << ',' << num(r.padded.actions.dram_bits) << ',' << (tc ? num(tc->cycles) : std::string()) << ','
        << norm(r.packed.cycles) << ',' << norm(r.padded.cycles) << "\n";
  }
  return csv.str();
}

namespace {

int do_validate(const std::string& scope, const ValidationOptions& opts, std::ostream& out) {
  const auto reports = run_validation(parse_validation_scope(scope), opts);
  std::uint64_t bad = 0;
  std::uint64_t cases = 0;
  for (const auto& r : reports) {
    out << r.name << ": " << r.mismatches << " mismatches / " << r.cases << " cases (" << std::fixed
        << std::setprecision(2) << r.seconds << " s)\n";
    for (const auto& m : r.examples) out << "  " << m.where << " [stage: " << m.stage << "] " << m.detail << "\n";
    bad += r.mismatches;
    cases += r.cases;
  }
  out << bad << " mismatches / " << cases << " cases\n";
  return bad == 0 ? 0 : 1;
}

int do_run(const RunInputs& in, const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  const RunOutput r = run(in);
  std::filesystem::create_directories(dir);
  if (int rc = write_file(dir / "run.csv", r.csv, err); rc != 0) return rc;
  if (int rc = write_file(dir / "summary.txt", r.summary, err); rc != 0) return rc;
  out << r.summary << "wrote " << (dir / "run.csv").string() << "\n";
  return 0;
}

int do_pack(const std::string& in_path, const std::string& out_path, const std::string& fmt, int container,
            std::size_t start) {
  const FormatSpec f = parse_named_format(fmt);
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + in_path + "'");
  const PaddedStream s = read_padded(in, f, container);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + out_path + "'");
  write_fxbp(out, pack(s, start));
  return 0;
}

int do_unpack(const std::string& in_path, const std::string& out_path, int container) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + in_path + "'");
  const PackedBuffer b = read_fxbp(in);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + out_path + "'");
  write_padded(out, unpack(b, container > 0 ? container : padded_container_bits(b.fmt)));
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bit-parallel flexible-precision accelerator model"};
  app.require_subcommand(1);

  // validate
  auto* val = app.add_subcommand("validate", "Check the datapath against exact oracles");
  std::string scope = "all";
  std::string fault = "none";
  ValidationOptions vopts;
  val->add_option("--scope", scope, "codec, pe, pack or all")->capture_default_str();
  val->add_option("--max-bits", vopts.max_bits, "Widest operand format")->capture_default_str();
  val->add_option("--exhaustive-bits", vopts.exhaustive_bits, "Operands up to this width are swept exhaustively")
      ->capture_default_str();
  val->add_option("--samples", vopts.random_pairs, "Random products per wider format pair")->capture_default_str();
  val->add_option("--seed", vopts.seed)->capture_default_str();
  val->add_option("--inject-fault", fault, "none, implicit-one or exponent-guard")->capture_default_str();

  // run
  auto* runc = app.add_subcommand("run", "Simulate models on machines and write run.csv");
  std::string manifest_path;
  std::vector<std::string> machines, models, pairs;
  std::string policy = "Best";
  std::string energy_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;
  runc->add_option("--manifest", manifest_path, "JSON run manifest");
  runc->add_option("--machine", machines, "Machine preset or JSON file (repeatable)");
  runc->add_option("--model", models, "Model preset or JSON file (repeatable)");
  runc->add_option("--pair", pairs, "ACT:WGT precision pair, or 'proposed' (repeatable)");
  runc->add_option("--dataflow", policy, "WS, OS or Best")->capture_default_str();
  runc->add_option("--energy", energy_path, "Energy/area table JSON");
  runc->add_option("--out", out_dir, "Output directory (FLEXIBIT_OUT_DIR overrides)")->capture_default_str();
  runc->add_option("--seed", seed)->capture_default_str();
  runc->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();

  // ablate
  auto* abl = app.add_subcommand("ablate", "Packed versus padded storage per layer class");
  std::string abl_machine = "Mobile-A";
  std::string abl_model = "Bert";
  std::string abl_pair = "FP6:FP6";
  std::string abl_out;
  abl->add_option("--machine", abl_machine)->capture_default_str();
  abl->add_option("--model", abl_model)->capture_default_str();
  abl->add_option("--pair", abl_pair)->capture_default_str();
  abl->add_option("--out", abl_out, "Output directory; prints to stdout when empty");

  // pack / unpack
  auto* pk = app.add_subcommand("pack", "Pack a padded host file into an FXBP file");
  std::string pk_in, pk_out, pk_fmt;
  int pk_container = 8;
  std::size_t pk_start = 0;
  pk->add_option("input", pk_in)->required();
  pk->add_option("output", pk_out)->required();
  pk->add_option("--format", pk_fmt, "Element format, e.g. FP6 or e2m3")->required();
  pk->add_option("--container", pk_container, "Container bits")->capture_default_str();
  pk->add_option("--start", pk_start, "Start bit of the packed buffer")->capture_default_str();
  auto* up = app.add_subcommand("unpack", "Unpack an FXBP file into a padded host file");
  std::string up_in, up_out;
  int up_container = 0;
  up->add_option("input", up_in)->required();
  up->add_option("output", up_out)->required();
  up->add_option("--container", up_container, "Container bits (default: next power of two, min 8)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*val) {
      vopts.fault = parse_fault(fault);
      return do_validate(scope, vopts, out);
    }
    if (*runc) {
      RunInputs in;
      std::filesystem::path dir = out_dir;
      if (!manifest_path.empty()) {
        const RunManifest m = load_manifest(manifest_path);
        in = resolve(m);
        dir = m.output_dir;
        seed = m.seed;
      }
      for (const auto& s : machines) in.machines.push_back(machine_by_name_or_path(s));
      for (const auto& s : models) in.models.push_back(model_by_name_or_path(s));
      if (!pairs.empty()) in.pairs = parse_pairs(pairs);
      if (runc->count("--dataflow") > 0 || manifest_path.empty()) in.dataflow = parse_dataflow_policy(policy);
      if (!energy_path.empty()) in.energy = load_energy_table(energy_path);
      if (runc->count("--threads") > 0 || manifest_path.empty()) in.threads = threads;
      if (runc->count("--out") > 0) dir = out_dir;
      if (in.machines.empty() || in.models.empty()) throw ConfigError("run needs at least one machine and one model");
      return do_run(in, output_dir(dir), out, err);
    }
    if (*abl) {
      ModelSpec model = model_by_name_or_path(abl_model);
      const auto pr = parse_pairs({abl_pair});
      model.precision = pr.front();
      const std::string csv = ablation_csv(machine_by_name_or_path(abl_machine), model);
      if (abl_out.empty() && std::getenv("FLEXIBIT_OUT_DIR") == nullptr) {
        out << csv;
        return 0;
      }
      const std::filesystem::path dir = output_dir(abl_out);
      std::filesystem::create_directories(dir);
      return write_file(dir / "ablation.csv", csv, err);
    }
    if (*pk) return do_pack(pk_in, pk_out, pk_fmt, pk_container, pk_start);
    if (*up) return do_unpack(up_in, up_out, up_container);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace flexibit
