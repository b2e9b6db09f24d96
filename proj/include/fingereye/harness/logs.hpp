#pragma once

#include "fingereye/sim/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

namespace fingereye::harness {

/// Append-only JSONL file with a single owner. Each line is flushed as it is
/// written so a crashed session leaves a parseable prefix.
class JsonlLog {
 public:
  JsonlLog() = default;
  explicit JsonlLog(std::filesystem::path path);
  JsonlLog(JsonlLog&&) = default;
  JsonlLog& operator=(JsonlLog&&) = default;

  void append(const std::string& line);
  void close();
  bool is_open() const { return out_.is_open(); }
  const std::filesystem::path& path() const { return path_; }
  long lines() const { return lines_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  long lines_ = 0;
};

/// Creates `dir` (and parents) and returns it.
std::filesystem::path ensure_dir(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct ExperimentOutputs {
  std::filesystem::path metricsJson;
  std::filesystem::path metricsCsv;
  std::filesystem::path trajectoryCsv;
  std::vector<std::filesystem::path> trajectoryLogs;
  std::vector<std::filesystem::path> commandLogs;
  std::vector<std::filesystem::path> plots;
};

/// Writes per-run trajectory and command JSONL, the combined trajectory CSV,
/// metrics JSON/CSV and the plots under `dir`.
ExperimentOutputs write_experiment_outputs(const std::filesystem::path& dir, const sim::ExperimentResult& result,
                                           const sim::MetricsReport& report, bool plots = true);

/// Static figures: drift envelope, offset histogram, speed profile and
/// command raster. Returns the files written.
std::vector<std::filesystem::path> write_plots(const std::filesystem::path& dir,
                                               const std::vector<sim::TrajectoryLog>& logs,
                                               const sim::MetricsReport& report);

}  // namespace fingereye::harness
