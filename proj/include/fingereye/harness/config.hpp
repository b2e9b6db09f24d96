#pragma once

#include "fingereye/harness/pipeline.hpp"
#include "fingereye/sim/experiment.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace fingereye::harness {

/// Environment variables read by load_app_config.
inline constexpr const char* kEnvConfig = "FINGEREYE_CONFIG";  // config file path
inline constexpr const char* kEnvOut = "FINGEREYE_OUT";        // output directory
inline constexpr const char* kEnvHost = "FINGEREYE_HOST";
inline constexpr const char* kEnvPort = "FINGEREYE_PORT";
inline constexpr const char* kEnvOcr = "FINGEREYE_OCR";        // OCR engine selection

/// The single layered document behind every subcommand.
struct AppConfig {
  std::string outDir = "out";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string staticDir;  // optional web client bundle served at /
  PipelineConfig pipeline = default_pipeline_config();
  sim::ExperimentConfig experiment;  // its pipeline mirrors `pipeline`

  void validate() const;
  nlohmann::ordered_json to_json() const;
  void merge_json(const nlohmann::json& j);
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

/// defaults < file (`configPath`, else $FINGEREYE_CONFIG) < environment.
/// Command-line flags are applied by the caller on top.
AppConfig load_app_config(const std::optional<std::filesystem::path>& configPath, const EnvLookup& env = process_env);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace fingereye::harness
