// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flexibit/arch.hpp"
#include "flexibit/cost.hpp"
#include "flexibit/workloads.hpp"

namespace flexibit {

// JSON loaders. Every error is a ConfigError naming the source and, for
// syntax errors, the line and column.

AcceleratorConfig parse_machine(std::string_view json_text, const std::string& source);
ModelSpec parse_model(std::string_view json_text, const std::string& source);
EnergyTable parse_energy_table(std::string_view json_text, const std::string& source);

AcceleratorConfig load_machine(const std::filesystem::path& path);
ModelSpec load_model(const std::filesystem::path& path);
EnergyTable load_energy_table(const std::filesystem::path& path);

std::string machine_to_json(const AcceleratorConfig& acc);
std::string model_to_json(const ModelSpec& model);
std::string energy_table_to_json(const EnergyTable& table);

enum class DataflowPolicy : std::uint8_t { WeightStationary, OutputStationary, Best };

std::string to_string(DataflowPolicy p);
DataflowPolicy parse_dataflow_policy(std::string_view s);

struct RunManifest {
  std::vector<std::filesystem::path> machines;
  std::vector<std::filesystem::path> models;
  std::vector<PrecisionPair> pairs;
  DataflowPolicy dataflow = DataflowPolicy::Best;
  std::optional<std::filesystem::path> energy;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0: one per hardware thread

  /// Throws ConfigError if a referenced file is missing.
  void validate() const;
};

/// Relative paths inside the manifest are resolved against `base_dir`.
RunManifest parse_manifest(std::string_view json_text, const std::string& source,
                           const std::filesystem::path& base_dir);
RunManifest load_manifest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace flexibit
