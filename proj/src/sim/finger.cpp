#include "fingereye/sim/finger.hpp"

#include "fingereye/embedded_data.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace fingereye::sim {

using feedback::CommandKind;

void FingerModelParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be >= 0");
  };
  positive(scanSpeedMmPerS, "scanSpeedMmPerS");
  nonneg(scanSpeedSpreadLog, "scanSpeedSpreadLog");
  nonneg(driftBiasMmPerS, "driftBiasMmPerS");
  nonneg(driftSpreadLog, "driftSpreadLog");
  nonneg(driftSigmaMm, "driftSigmaMm");
  positive(reactionMedianS, "reactionMedianS");
  nonneg(reactionLogSigma, "reactionLogSigma");
  positive(complianceMeanS, "complianceMeanS");
  positive(complianceShape, "complianceShape");
  nonneg(correctionSpeedMmPerS, "correctionSpeedMmPerS");
  positive(complianceSlowFactor, "complianceSlowFactor");
  positive(accelTauS, "accelTauS");
  positive(decelTauS, "decelTauS");
  if (!(backtrackProbability >= 0.0 && backtrackProbability <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "backtrackProbability must be in [0, 1]");
}

nlohmann::json FingerModelParams::to_json() const {
  nlohmann::ordered_json j;
  j["scanSpeedMmPerS"] = scanSpeedMmPerS;
  j["scanSpeedSpreadLog"] = scanSpeedSpreadLog;
  j["driftBiasMmPerS"] = driftBiasMmPerS;
  j["driftSpreadLog"] = driftSpreadLog;
  j["driftSigmaMm"] = driftSigmaMm;
  j["reactionMedianS"] = reactionMedianS;
  j["reactionLogSigma"] = reactionLogSigma;
  j["complianceMeanS"] = complianceMeanS;
  j["complianceShape"] = complianceShape;
  j["correctionSpeedMmPerS"] = correctionSpeedMmPerS;
  j["complianceSlowFactor"] = complianceSlowFactor;
  j["accelTauS"] = accelTauS;
  j["decelTauS"] = decelTauS;
  j["backtrackProbability"] = backtrackProbability;
  j["seed"] = seed;
  return j;
}

FingerModelParams FingerModelParams::from_json(const nlohmann::json& j) {
  FingerModelParams p;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "scanSpeedMmPerS") p.scanSpeedMmPerS = value.get<double>();
      else if (key == "scanSpeedSpreadLog") p.scanSpeedSpreadLog = value.get<double>();
      else if (key == "driftBiasMmPerS") p.driftBiasMmPerS = value.get<double>();
      else if (key == "driftSpreadLog") p.driftSpreadLog = value.get<double>();
      else if (key == "driftSigmaMm") p.driftSigmaMm = value.get<double>();
      else if (key == "reactionMedianS") p.reactionMedianS = value.get<double>();
      else if (key == "reactionLogSigma") p.reactionLogSigma = value.get<double>();
      else if (key == "complianceMeanS") p.complianceMeanS = value.get<double>();
      else if (key == "complianceShape") p.complianceShape = value.get<double>();
      else if (key == "correctionSpeedMmPerS") p.correctionSpeedMmPerS = value.get<double>();
      else if (key == "complianceSlowFactor") p.complianceSlowFactor = value.get<double>();
      else if (key == "accelTauS") p.accelTauS = value.get<double>();
      else if (key == "decelTauS") p.decelTauS = value.get<double>();
      else if (key == "backtrackProbability") p.backtrackProbability = value.get<double>();
      else if (key == "seed") p.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::ParseError, "unknown finger parameter: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("finger parameters: ") + e.what());
  }
  p.validate();
  return p;
}

FingerModelParams FingerModelParams::parse(std::string_view json) {
  try {
    return from_json(nlohmann::json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("finger parameters: ") + e.what());
  }
}

FingerModelParams FingerModelParams::calibrated() { return parse(embedded::kFingerParams); }

double sample_reaction_delay(std::mt19937_64& rng, const FingerModelParams& p) {
  std::normal_distribution<double> n(0.0, 1.0);
  return p.reactionMedianS * std::exp(p.reactionLogSigma * n(rng));
}

double sample_compliance(std::mt19937_64& rng, const FingerModelParams& p) {
  std::gamma_distribution<double> g(p.complianceShape, p.complianceMeanS / p.complianceShape);
  return g(rng);
}

std::uint64_t derive_seed(std::uint64_t seed, int rep) {
  // splitmix64 of the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(rep + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

FingerState start_finger(const FingerModelParams& p, std::uint64_t seed) {
  p.validate();
  FingerState s;
  s.rng.seed(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double sign = u(s.rng) < 0.5 ? 1.0 : -1.0;
  s.bias = sign * p.driftBiasMmPerS * std::exp(p.driftSpreadLog * n(s.rng));
  s.scanSpeed = p.scanSpeedMmPerS * std::exp(p.scanSpeedSpreadLog * n(s.rng));
  return s;
}

namespace {

void begin_reaction(FingerState& s, CommandKind kind, const FingerModelParams& p) {
  s.phase = FingerPhase::Reacting;
  s.following = kind;
  s.timer = sample_reaction_delay(s.rng, p);
  s.reactionDelays.push_back(s.timer);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.backtrack = u(s.rng) < p.backtrackProbability;
}

}  // namespace

void step_finger(FingerState& s, std::optional<CommandKind> cmd, const FingerModelParams& p, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  CommandKind shown = cmd.value_or(CommandKind::None);
  if (shown != CommandKind::Up && shown != CommandKind::Down) shown = CommandKind::None;

  if (s.phase == FingerPhase::Free) {
    if (shown != CommandKind::None) begin_reaction(s, shown, p);
  } else if (shown == CommandKind::None) {
    s.phase = FingerPhase::Free;
    s.following = CommandKind::None;
  } else if (shown != s.following) {
    begin_reaction(s, shown, p);
  }

  if (s.phase == FingerPhase::Reacting) {
    s.timer -= dt;
    if (s.timer <= 0.0) {
      s.phase = FingerPhase::Complying;
      s.timer = sample_compliance(s.rng, p);
    }
  } else if (s.phase == FingerPhase::Complying) {
    s.timer -= dt;
    if (s.timer <= 0.0) {
      // The bout ran out with the command still shown: react to it afresh.
      s.phase = FingerPhase::Reacting;
      s.timer = sample_reaction_delay(s.rng, p);
      s.reactionDelays.push_back(s.timer);
    }
  }

  double target = s.scanSpeed;
  if (s.phase != FingerPhase::Free) {
    target *= p.complianceSlowFactor;
    if (s.backtrack && s.phase == FingerPhase::Complying) target = -target;
  }
  const double tau = target > s.vx ? p.accelTauS : p.decelTauS;
  s.vx += (target - s.vx) * std::min(1.0, dt / tau);
  s.x += s.vx * dt;

  std::normal_distribution<double> n(0.0, 1.0);
  const double frac = std::abs(s.vx) / p.scanSpeedMmPerS;
  s.y += s.bias * frac * dt + p.driftSigmaMm * std::sqrt(dt * frac) * n(s.rng);
  if (s.phase == FingerPhase::Complying)
    s.y += (s.following == CommandKind::Down ? 1.0 : -1.0) * p.correctionSpeedMmPerS * dt;
  s.t += dt;
}

}  // namespace fingereye::sim
