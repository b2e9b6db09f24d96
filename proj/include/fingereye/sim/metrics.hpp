#pragma once

#include "fingereye/feedback/feedback.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace fingereye::sim {

struct TrajectorySample {
  double t = 0.0;
  double xMm = 0.0;  // along the line from its start
  double yMm = 0.0;  // from the tracked baseline, positive down
  feedback::CommandKind commandActive = feedback::CommandKind::None;
};

struct TrajectoryLog {
  std::vector<TrajectorySample> samples;
  nlohmann::ordered_json metadata;  // config snapshot and seed
  double lineLengthMm = 170.0;

  /// Throws InvalidArgument unless t is strictly increasing.
  void validate() const;
};

struct MetricsConfig {
  double containmentMm = 2.0;
  double envelopeBinMm = 1.0;
  double reactionThresholdMm = 0.3;
  double burstQuietS = 0.5;  // a burst starts after this long without commands
  double speedWindowS = 0.5;  // smoothing window for the speed profile
};

struct MetricsReport {
  int runs = 0;
  int samples = 0;
  double meanOffsetMm = 0.0;
  double stdOffsetMm = 0.0;
  double containment2mmFraction = 0.0;
  std::vector<double> envelopeXMm;  // bin centers
  std::vector<double> maxEnvelopeMm;
  std::vector<double> minEnvelopeMm;
  double maxAbsEnvelopeMm = 0.0;
  double meanEndDriftMm = 0.0;  // mean |y| at the end of each run
  std::vector<double> runSpeedsMmPerS;
  double avgSpeedMmPerS = 0.0;
  std::vector<double> reactionTimes;
  std::vector<double> complianceDurations;
  double meanComplianceS = 0.0;
  double medianReactionS = 0.0;
  int commandBursts = 0;
  int burstsFollowedBySpeedDrop = 0;

  nlohmann::ordered_json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// Statistics over a batch of runs. Command intervals are read from each
/// sample's commandActive, so a log re-imported from CSV yields the same
/// report.
MetricsReport compute_metrics(const std::vector<TrajectoryLog>& logs, const MetricsConfig& cfg = {});

/// Smoothed forward speed per sample (central difference over the window).
std::vector<double> speed_profile(const TrajectoryLog& log, double windowS);

/// JSONL: a {"meta":...} line, then one {"t","x","y","command"} line per
/// sample.
void write_trajectory_jsonl(std::ostream& out, const TrajectoryLog& log);
std::string trajectory_meta_jsonl(const nlohmann::ordered_json& metadata, double lineLengthMm);
std::string trajectory_sample_jsonl(const TrajectorySample& sample);
TrajectoryLog read_trajectory_jsonl(std::istream& in);

/// CSV "run,t,x,y,command" over several runs, full double precision.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryLog>& logs);
std::vector<TrajectoryLog> read_trajectory_csv(std::istream& in, double lineLengthMm = 170.0);

/// Flat "metric,value" CSV of the scalar fields.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace fingereye::sim
