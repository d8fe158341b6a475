// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flexibit/config.hpp"

namespace flexibit {

/// A manifest with every file loaded.
struct RunInputs {
  std::vector<AcceleratorConfig> machines;
  std::vector<ModelSpec> models;
  std::vector<PrecisionPair> pairs;
  DataflowPolicy dataflow = DataflowPolicy::Best;
  EnergyTable energy = EnergyTable::synthetic();
  int threads = 0;
};

RunInputs resolve(const RunManifest& manifest);

/// A machine preset name or a machine JSON file.
AcceleratorConfig machine_by_name_or_path(const std::string& s);
/// A model preset name or a model JSON file.
ModelSpec model_by_name_or_path(const std::string& s);

inline constexpr const char* kRunCsvSchema = "flexibit-run-csv 1";

struct RunOutput {
  std::string csv;
  std::string summary;  // per (model, machine, pair) totals and warnings
};

/// One CSV row per (model, layer class, machine, pair, dataflow). Rows are
/// computed in parallel and written in manifest order.
RunOutput run(const RunInputs& in);

/// Packed versus padded storage for every layer class of one model.
std::string ablation_csv(const AcceleratorConfig& machine, const ModelSpec& model);

/// Entry point of the `flexibit` tool. Exit codes: 0 ok, 1 validation
/// mismatch, 2 configuration or usage error.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace flexibit
