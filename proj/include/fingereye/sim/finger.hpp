#pragma once

#include "fingereye/feedback/feedback.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace fingereye::sim {

/// Parameters of the delayed-reaction corrector. Lateral drift and the
/// random walk scale with the forward speed relative to scanSpeedMmPerS, so a
/// finger that stops also stops drifting.
struct FingerModelParams {
  double scanSpeedMmPerS = 20.5;
  double scanSpeedSpreadLog = 0.08;   // per-run log-normal spread of the scan speed
  double driftBiasMmPerS = 0.9;       // median magnitude; the sign is drawn per run
  double driftSpreadLog = 0.5;        // per-run log-normal spread of the bias
  double driftSigmaMm = 1.2;          // random walk, mm per sqrt(s) at scan speed
  double reactionMedianS = 0.75;      // log-normal reaction delay
  double reactionLogSigma = 0.55;
  double complianceMeanS = 2.0;       // gamma-distributed compliance bout
  double complianceShape = 4.0;
  double correctionSpeedMmPerS = 0.85;
  double complianceSlowFactor = 0.05;  // forward speed multiplier while reacting/complying
  double accelTauS = 1.5;
  double decelTauS = 0.1;
  double backtrackProbability = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
  static FingerModelParams from_json(const nlohmann::json& j);
  static FingerModelParams parse(std::string_view json);
  /// Calibrated parameters shipped with the library.
  static FingerModelParams calibrated();
  nlohmann::json to_json() const;
};

enum class FingerPhase { Free, Reacting, Complying };

struct FingerState {
  double t = 0.0;
  double x = 0.0;   // mm along the line from its start
  double y = 0.0;   // mm from the baseline, positive down the page
  double vx = 0.0;
  FingerPhase phase = FingerPhase::Free;
  double timer = 0.0;  // remaining reaction delay or compliance time
  feedback::CommandKind following = feedback::CommandKind::None;
  bool backtrack = false;
  double bias = 0.0;       // this run's drift, mm/s at scan speed
  double scanSpeed = 0.0;  // this run's forward speed
  std::mt19937_64 rng;
  /// Reaction delays drawn so far, for the statistics checks.
  std::vector<double> reactionDelays;
};

/// Fresh state at the line start for one run; draws the run's drift sign,
/// bias magnitude and scan speed from `seed`.
FingerState start_finger(const FingerModelParams& params, std::uint64_t seed);

/// Advances the finger by dt. `cmd` is the command currently displayed
/// (None when nothing is shown); only Up and Down are acted upon.
void step_finger(FingerState& state, std::optional<feedback::CommandKind> cmd, const FingerModelParams& params,
                 double dt);

double sample_reaction_delay(std::mt19937_64& rng, const FingerModelParams& params);
double sample_compliance(std::mt19937_64& rng, const FingerModelParams& params);

/// Derived seed of repetition `rep` of an experiment seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, int rep);

}  // namespace fingereye::sim
