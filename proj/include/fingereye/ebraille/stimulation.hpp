#pragma once

#include "fingereye/ebraille/braille.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace fingereye::ebraille {

struct StimulationParams {
  double frequencyHz = 30.0;
  double dutyCycle = 0.10;
  double targetCurrentuA = 30.0;
  double voltageV = 80.0;
  double kp = 0.5;  // V per uA
  double minVoltageV = 60.0;
  double maxVoltageV = 100.0;

  void validate() const;
};

struct WaveformEvent {
  double tOn = 0.0;
  double tOff = 0.0;
  std::uint16_t activeDots = 0;
};

struct WaveformSchedule {
  std::vector<WaveformEvent> events;
  double period = 1.0 / 30.0;
};

/// Number of consecutive stimulated periods per side-dot burst for a command
/// strength; each burst is followed by one silent period. 0 means every
/// period (commands without a strength, such as NewLine).
int burst_length(double strength);

/// Pulses at frequencyHz with dutyCycle for every active dot of `frame`,
/// starting at t0. Braille (center) dots fire every period; side dots follow
/// the burst pattern for `strength`.
WaveformSchedule schedule_stimulation(const ElectrodeFrame& frame, const StimulationParams& params, double duration,
                                      double strength, double t0 = 0.0);

/// Appends `more` to `into` (events must not go back in time).
void append_schedule(WaveformSchedule& into, const WaveformSchedule& more);

/// `count` Up/Down pairs: each slot stimulates its pattern for `slotS`
/// seconds, then stays silent for `gapS` seconds.
WaveformSchedule training_sequence(int count, const StimulationParams& params = {}, double slotS = 0.5,
                                   double gapS = 0.5, const CommandPatterns& patterns = CommandPatterns::builtin());

/// CSV rows "t,dotIndex,state" (dotIndex = electrode bit 0..15), one row per
/// switching edge, microsecond resolution, time ordered.
void write_waveform_csv(std::ostream& out, const WaveformSchedule& schedule);

/// One proportional step: V <- clamp(V + kp (target - measured)).
StimulationParams regulate_current(double measureduA, const StimulationParams& params);

/// Currents seen by the regulator on an Ohmic load (I = V / R) over `steps`
/// regulation cycles, starting from params.voltageV. Entry 0 is the current
/// before the first step.
std::vector<double> simulate_regulation(double loadMOhm, StimulationParams params, int steps);

}  // namespace fingereye::ebraille
