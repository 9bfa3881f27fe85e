#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebk/symbol_catalog.hpp"

namespace ebk {

struct Tolerances {
  double trace_tol = 1e-10;
  // Oracle self-consistency gate and floor for convergence fits.
  double oracle_tol = 1e-8;
  int action_samples = 65;
};

struct RunConfig {
  std::string symbol_name;
  nlohmann::ordered_json symbol_params = nlohmann::ordered_json::object();
  EnergyWindow window;
  std::vector<double> hbars;
  std::vector<std::string> pipeline;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::string output_dir = "ebk_out";
};

// Stage names in execution order.
const std::vector<std::string>& stage_names();

// Throws ConfigError; messages carry "line L, column C" where available.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every field spelled out, defaults included, in a fixed key order.
nlohmann::ordered_json to_json(const RunConfig& config);
std::string canonical_json(const RunConfig& config);

// Builds the catalog symbol named in the config.
SymbolSpec make_symbol(const std::string& name, const nlohmann::ordered_json& params);

}  // namespace ebk
