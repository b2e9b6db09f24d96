#pragma once

#include "fingereye/sim/experiment.hpp"

namespace fingereye::sim {

struct CalibrationTargets {
  double openLoopSpeed = 18.21;    // mm/s
  double closedLoopSpeed = 4.87;   // mm/s
  double meanDriftMm = 7.5;        // open-loop end-of-line drift, must exceed 6
  double minDriftMm = 6.0;
  double reactionMedianS = 0.75;
  double complianceMeanS = 2.0;
  double relativeTolerance = 0.10;
};

struct CalibrationReport {
  FingerModelParams params;
  MetricsReport openLoop;
  MetricsReport closedLoop;
  bool converged = false;
  int rounds = 0;
  nlohmann::ordered_json to_json() const;
};

/// Coordinate-wise bisection in the geometric mode of the experiment:
/// scan speed for the open-loop speed, drift bias for the end-of-line drift,
/// compliance slowdown for the closed-loop speed and correction speed for the
/// compliance duration, repeated until every target is within tolerance.
/// Throws CalibrationFailed (message includes the best parameters) when the
/// rounds run out.
CalibrationReport calibrate_finger_model(const CalibrationTargets& targets, ExperimentConfig base, int maxRounds = 6);

/// Same, returning the best attempt instead of throwing.
CalibrationReport calibrate_finger_model_best(const CalibrationTargets& targets, ExperimentConfig base,
                                              int maxRounds = 6);

}  // namespace fingereye::sim
