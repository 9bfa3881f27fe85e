#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebk/config.hpp"

namespace ebk {

inline constexpr const char* toolkit_version = "0.1.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_hypothesis = 3,
  exit_verification = 4,
};

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  unsigned threads = 1;
  // Progress messages go here when set.
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = exit_ok;
  std::filesystem::path output_dir;
  nlohmann::ordered_json manifest;
};

// Requested stages plus their prerequisites, in execution order. Entries
// not in `requested` are marked auto-inserted by the runner.
std::vector<std::string> resolve_pipeline(const std::vector<std::string>& requested);

// Executes the pipeline and writes every report plus manifest.json.
RunResult run(const RunConfig& config, const RunOptions& opts = {});

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ebk
