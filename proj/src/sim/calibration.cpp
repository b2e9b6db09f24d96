#include "fingereye/sim/calibration.hpp"

#include <cmath>
#include <functional>

namespace fingereye::sim {

namespace {

MetricsReport evaluate(ExperimentConfig cfg, const FingerModelParams& p, bool feedbackOn) {
  cfg.finger = p;
  cfg.feedbackOn = feedbackOn;
  return compute_metrics(run_experiment(cfg).logs);
}

// Bisection of a monotone response on [lo, hi]; `increasing` states the
// direction of the response in the parameter.
double bisect(double lo, double hi, double target, bool increasing, int steps, const std::function<double(double)>& f) {
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if ((v < target) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol * std::abs(target); }

}  // namespace

nlohmann::ordered_json CalibrationReport::to_json() const {
  nlohmann::ordered_json j;
  j["converged"] = converged;
  j["rounds"] = rounds;
  j["params"] = params.to_json();
  j["openLoop"] = {{"avgSpeedMmPerS", openLoop.avgSpeedMmPerS},
                   {"meanEndDriftMm", openLoop.meanEndDriftMm},
                   {"maxAbsEnvelopeMm", openLoop.maxAbsEnvelopeMm}};
  j["closedLoop"] = {{"avgSpeedMmPerS", closedLoop.avgSpeedMmPerS},
                     {"meanComplianceS", closedLoop.meanComplianceS},
                     {"medianReactionS", closedLoop.medianReactionS},
                     {"containment2mmFraction", closedLoop.containment2mmFraction}};
  return j;
}

CalibrationReport calibrate_finger_model_best(const CalibrationTargets& targets, ExperimentConfig base,
                                              int maxRounds) {
  base.mode = ExperimentMode::Geometric;
  FingerModelParams p = base.finger;
  p.reactionMedianS = targets.reactionMedianS;
  CalibrationReport report;
  const double tol = targets.relativeTolerance;
  const int steps = 12;
  for (int round = 1; round <= maxRounds; ++round) {
    report.rounds = round;
    p.scanSpeedMmPerS = bisect(5.0, 40.0, targets.openLoopSpeed, true, steps, [&](double v) {
      FingerModelParams q = p;
      q.scanSpeedMmPerS = v;
      return evaluate(base, q, false).avgSpeedMmPerS;
    });
    p.driftBiasMmPerS = bisect(0.0, 3.0, targets.meanDriftMm, true, steps, [&](double v) {
      FingerModelParams q = p;
      q.driftBiasMmPerS = v;
      return evaluate(base, q, false).meanEndDriftMm;
    });
    p.complianceSlowFactor = bisect(0.005, 0.6, targets.closedLoopSpeed, true, steps, [&](double v) {
      FingerModelParams q = p;
      q.complianceSlowFactor = v;
      return evaluate(base, q, true).avgSpeedMmPerS;
    });
    // Faster corrections clear commands sooner.
    p.correctionSpeedMmPerS = bisect(0.2, 4.0, targets.complianceMeanS, false, steps, [&](double v) {
      FingerModelParams q = p;
      q.correctionSpeedMmPerS = v;
      return evaluate(base, q, true).meanComplianceS;
    });

    report.params = p;
    report.openLoop = evaluate(base, p, false);
    report.closedLoop = evaluate(base, p, true);
    report.converged = within(report.openLoop.avgSpeedMmPerS, targets.openLoopSpeed, tol) &&
                       report.openLoop.meanEndDriftMm > targets.minDriftMm &&
                       within(report.closedLoop.avgSpeedMmPerS, targets.closedLoopSpeed, tol) &&
                       within(report.closedLoop.meanComplianceS, targets.complianceMeanS, tol) &&
                       within(report.closedLoop.medianReactionS, targets.reactionMedianS, 0.2);
    if (report.converged) break;
  }
  return report;
}

CalibrationReport calibrate_finger_model(const CalibrationTargets& targets, ExperimentConfig base, int maxRounds) {
  auto report = calibrate_finger_model_best(targets, std::move(base), maxRounds);
  if (!report.converged)
    throw Error(ErrorCode::CalibrationFailed, "targets not met; best parameters: " + report.to_json().dump());
  return report;
}

}  // namespace fingereye::sim
