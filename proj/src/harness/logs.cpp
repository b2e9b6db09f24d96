#include "fingereye/harness/logs.hpp"

#include <cstdio>
#include <sstream>

namespace fingereye::harness {

namespace fs = std::filesystem;

JsonlLog::JsonlLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) ensure_dir(path_.parent_path());
  out_.open(path_, std::ios::out | std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::InvalidArgument, "cannot open log " + path_.string());
}

void JsonlLog::append(const std::string& line) {
  if (!out_.is_open()) throw Error(ErrorCode::InvalidArgument, "log is closed");
  out_ << line << '\n';
  out_.flush();
  ++lines_;
}

void JsonlLog::close() {
  if (out_.is_open()) out_.close();
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

ExperimentOutputs write_experiment_outputs(const fs::path& dir, const sim::ExperimentResult& result,
                                           const sim::MetricsReport& report, bool plots) {
  ExperimentOutputs o;
  ensure_dir(dir / "runs");
  for (std::size_t i = 0; i < result.logs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    std::ostringstream traj;
    sim::write_trajectory_jsonl(traj, result.logs[i]);
    o.trajectoryLogs.push_back(dir / "runs" / (std::string(name) + ".jsonl"));
    write_text_file(o.trajectoryLogs.back(), traj.str());
    if (i < result.commands.size()) {
      std::string cmds;
      for (const auto& r : result.commands[i]) cmds += feedback::to_jsonl(r) + '\n';
      o.commandLogs.push_back(dir / "runs" / (std::string(name) + "_commands.jsonl"));
      write_text_file(o.commandLogs.back(), cmds);
    }
  }
  std::ostringstream csv;
  sim::write_trajectory_csv(csv, result.logs);
  o.trajectoryCsv = dir / "trajectories.csv";
  write_text_file(o.trajectoryCsv, csv.str());
  o.metricsJson = dir / "metrics.json";
  write_text_file(o.metricsJson, report.to_json().dump(2) + '\n');
  std::ostringstream mcsv;
  sim::write_metrics_csv(mcsv, report);
  o.metricsCsv = dir / "metrics.csv";
  write_text_file(o.metricsCsv, mcsv.str());
  if (plots) o.plots = write_plots(dir / "plots", result.logs, report);
  return o;
}

}  // namespace fingereye::harness
