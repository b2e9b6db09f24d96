#pragma once

#include "fingereye/harness/pipeline.hpp"
#include "fingereye/sim/camera.hpp"
#include "fingereye/sim/finger.hpp"
#include "fingereye/sim/metrics.hpp"
#include "fingereye/sim/page.hpp"

#include <cstdint>
#include <vector>

namespace fingereye::sim {

enum class ExperimentMode {
  Vision,     // render -> camera -> full pipeline
  Geometric,  // page geometry fed straight to the feedback law
};

struct ExperimentConfig {
  PageLayout layout = default_layout();
  CameraRig rig;
  FingerModelParams finger = FingerModelParams::calibrated();
  harness::PipelineConfig pipeline = harness::default_pipeline_config();
  ExperimentMode mode = ExperimentMode::Vision;
  bool feedbackOn = true;
  int repetitions = 25;
  std::uint64_t seed = 7;
  double pageDpmm = 16.0;
  double noiseSigma = 0.01;  // fraction of full scale
  double yawRad = 0.0;
  double frameRateHz = 3.0;
  double physicsHz = 100.0;
  double logRateHz = 20.0;
  double lineLengthMm = 170.0;
  int firstLine = 1;
  double stallTimeoutS = 2.0;
  double maxRunS = 300.0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  void merge_json(const nlohmann::json& j);
};

struct ExperimentResult {
  std::vector<TrajectoryLog> logs;
  std::vector<std::vector<feedback::CommandRecord>> commands;  // per run, one per processed frame
  std::vector<double> reactionDelays;  // delays drawn by the finger model
  long framesProcessed = 0;
};

/// Runs `repetitions` seeded line traversals. Deterministic for a fixed
/// config. Throws PipelineStall when the vision pipeline finds no lines or
/// no device for longer than stallTimeoutS.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Line used by repetition `rep`.
int experiment_line(const ExperimentConfig& cfg, int rep);

}  // namespace fingereye::sim
