#include "fingereye/ebraille/stimulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>

namespace fingereye::ebraille {

void StimulationParams::validate() const {
  if (!(frequencyHz > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency must be positive");
  if (!(dutyCycle > 0.0 && dutyCycle < 1.0)) throw Error(ErrorCode::InvalidArgument, "duty cycle must be in (0, 1)");
  if (!(minVoltageV <= voltageV && voltageV <= maxVoltageV))
    throw Error(ErrorCode::InvalidArgument, "voltage outside the regulator range");
  if (!(kp > 0.0)) throw Error(ErrorCode::InvalidArgument, "kp must be positive");
}

int burst_length(double strength) {
  if (!(strength > 0.0)) return 0;
  return std::clamp(static_cast<int>(std::ceil(std::min(strength, 1.0) * 4.0 - 1e-12)), 1, 4);
}

namespace {

WaveformSchedule periodic(std::uint16_t center, std::uint16_t side, const StimulationParams& p, double duration,
                          int burst, double t0) {
  p.validate();
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");
  WaveformSchedule s;
  s.period = 1.0 / p.frequencyHz;
  const long periods = static_cast<long>(std::floor(duration * p.frequencyHz + 1e-9));
  for (long k = 0; k < periods; ++k) {
    std::uint16_t dots = center;
    if (side && (burst == 0 || k % (burst + 1) < burst)) dots |= side;
    if (!dots) continue;
    const double tOn = t0 + k / p.frequencyHz;
    s.events.push_back({tOn, tOn + p.dutyCycle / p.frequencyHz, dots});
  }
  return s;
}

}  // namespace

WaveformSchedule schedule_stimulation(const ElectrodeFrame& frame, const StimulationParams& params, double duration,
                                      double strength, double t0) {
  return periodic(frame.dots16 & kCenterMask, frame.side(), params, duration, burst_length(strength), t0);
}

void append_schedule(WaveformSchedule& into, const WaveformSchedule& more) {
  if (!into.events.empty() && !more.events.empty() && more.events.front().tOn < into.events.back().tOff)
    throw Error(ErrorCode::InvalidArgument, "appended schedule overlaps");
  into.events.insert(into.events.end(), more.events.begin(), more.events.end());
  into.period = more.period;
}

WaveformSchedule training_sequence(int count, const StimulationParams& params, double slotS, double gapS,
                                   const CommandPatterns& patterns) {
  WaveformSchedule out;
  out.period = 1.0 / params.frequencyHz;
  const std::uint16_t up = patterns.side(feedback::CommandKind::Up);
  const std::uint16_t down = patterns.side(feedback::CommandKind::Down);
  double t = 0.0;
  for (int slot = 0; slot < 2 * count; ++slot) {
    append_schedule(out, periodic(0, slot % 2 == 0 ? up : down, params, slotS, 0, t));
    t += slotS + gapS;
  }
  return out;
}

void write_waveform_csv(std::ostream& out, const WaveformSchedule& schedule) {
  std::vector<std::tuple<long long, int, int>> rows;
  for (const auto& e : schedule.events) {
    const long long on = std::llround(e.tOn * 1e6), off = std::llround(e.tOff * 1e6);
    for (int bit = 0; bit < 16; ++bit) {
      if (!(e.activeDots & (1u << bit))) continue;
      rows.emplace_back(on, bit, 1);
      rows.emplace_back(off, bit, 0);
    }
  }
  std::sort(rows.begin(), rows.end());
  out << "t,dotIndex,state\n";
  char buf[64];
  for (const auto& [us, bit, state] : rows) {
    std::snprintf(buf, sizeof buf, "%lld.%06lld,%d,%d\n", us / 1000000, us % 1000000, bit, state);
    out << buf;
  }
}

StimulationParams regulate_current(double measureduA, const StimulationParams& params) {
  if (!(measureduA >= 0.0)) throw Error(ErrorCode::InvalidArgument, "measured current must be >= 0");
  StimulationParams next = params;
  next.voltageV = std::clamp(params.voltageV + params.kp * (params.targetCurrentuA - measureduA), params.minVoltageV,
                             params.maxVoltageV);
  return next;
}

std::vector<double> simulate_regulation(double loadMOhm, StimulationParams params, int steps) {
  if (!(loadMOhm > 0.0)) throw Error(ErrorCode::InvalidArgument, "load must be positive");
  std::vector<double> currents;
  for (int i = 0; i <= steps; ++i) {
    const double current = params.voltageV / loadMOhm;
    currents.push_back(current);
    if (i < steps) params = regulate_current(current, params);
  }
  return currents;
}

}  // namespace fingereye::ebraille
