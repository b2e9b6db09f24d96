#include "fingereye/sim/experiment.hpp"

#include <cmath>
#include <memory>

namespace fingereye::sim {

using feedback::CommandKind;

void ExperimentConfig::validate() const {
  layout.validate();
  finger.validate();
  pipeline.validate();
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  if (!(pageDpmm > 0 && frameRateHz > 0 && physicsHz >= frameRateHz && logRateHz > 0 && lineLengthMm > 0))
    throw Error(ErrorCode::InvalidArgument, "rates and lengths must be positive");
  if (noiseSigma < 0) throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");
  if (layout.line_count() < firstLine + 2)
    throw Error(ErrorCode::InvalidArgument, "layout needs a line above and below the tracked line");
  if (lineLengthMm > layout.printable_width_mm())
    throw Error(ErrorCode::InvalidArgument, "line length exceeds printable width");
}

int experiment_line(const ExperimentConfig& cfg, int rep) {
  const int usable = cfg.layout.line_count() - 1 - cfg.firstLine;
  return cfg.firstLine + rep % usable;
}

namespace {

struct RunOutput {
  TrajectoryLog log;
  std::vector<feedback::CommandRecord> commands;
  std::vector<double> delays;
  long frames = 0;
};

RunOutput run_once(const ExperimentConfig& cfg, int rep, const CameraSimulator* camera) {
  RunOutput out;
  const std::uint64_t runSeed = derive_seed(cfg.seed, rep);
  FingerState finger = start_finger(cfg.finger, runSeed);
  harness::PipelineConfig pc = cfg.pipeline;
  pc.frameRateHz = cfg.frameRateHz;
  pc.debugDump = false;
  if (cfg.mode == ExperimentMode::Vision) {
    pc.camera = cfg.rig.model;
    pc.cameraPath.clear();
    pc.mmPerPixel = cfg.rig.mm_per_pixel();
    pc.lines.nominalPitchPx = cfg.layout.linePitchMm / pc.mmPerPixel;
  } else {
    pc.undistort = false;
    pc.trackMotion = false;
  }
  harness::Pipeline pipeline(pc);

  const int line = experiment_line(cfg, rep);
  const double x0 = cfg.layout.marginLeftMm;
  const double y0 = cfg.layout.baseline_mm(line);
  const double dt = 1.0 / cfg.physicsHz;
  const double halfGap = 0.5 * cfg.layout.gap_mm();

  CommandKind shown = CommandKind::None;
  long frame = 0, logged = 0;
  double lastGood = 0.0;
  for (long k = 0;; ++k) {
    const double t = k * dt;
    const bool done = finger.x >= cfg.lineLengthMm || t >= cfg.maxRunS;
    if (!done && t + 1e-9 >= frame / cfg.frameRateHz) {
      harness::StepResult r;
      if (cfg.mode == ExperimentMode::Vision) {
        const FingerPose pose{x0 + finger.x, y0 + finger.y, cfg.yawRad};
        const Frame img = camera->capture(pose, cfg.noiseSigma, derive_seed(runSeed, static_cast<int>(frame)), t);
        r = pipeline.step(img);
        const auto& d = r.diagnostics;
        if (d.has_error(ErrorCode::NoLinesFound) || d.has_error(ErrorCode::NoDeviceFound)) {
          if (t - lastGood > cfg.stallTimeoutS)
            throw Error(ErrorCode::PipelineStall, "no lines or device for " + std::to_string(t - lastGood) +
                                                      " s in run " + std::to_string(rep));
        } else {
          lastGood = t;
        }
      } else {
        harness::FeedbackInput in;
        in.t = t;
        in.tipX = finger.x;
        in.tipY = finger.y;
        in.upperBottom = -halfGap;
        in.lowerTop = halfGap;
        in.baselineY = 0.0;
        in.lineLeft = 0.0;
        in.lineRight = cfg.lineLengthMm;
        r = pipeline.decide(in);
      }
      out.commands.push_back(r.record);
      shown = cfg.feedbackOn ? r.command.kind : CommandKind::None;
      ++frame;
    }
    if (done || t + 1e-9 >= logged / cfg.logRateHz) {
      out.log.samples.push_back({t, finger.x, finger.y, shown});
      ++logged;
    }
    if (done) break;
    step_finger(finger, shown, cfg.finger, dt);
  }
  out.frames = frame;
  out.delays = finger.reactionDelays;
  out.log.lineLengthMm = cfg.lineLengthMm;
  out.log.metadata = cfg.to_json();
  out.log.metadata["repetition"] = rep;
  out.log.metadata["runSeed"] = runSeed;
  out.log.metadata["line"] = line;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::unique_ptr<CameraSimulator> camera;
  if (cfg.mode == ExperimentMode::Vision)
    camera = std::make_unique<CameraSimulator>(render_page(cfg.layout, cfg.pageDpmm), cfg.pageDpmm, cfg.rig);
  ExperimentResult res;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    auto run = run_once(cfg, rep, camera.get());
    res.logs.push_back(std::move(run.log));
    res.commands.push_back(std::move(run.commands));
    res.reactionDelays.insert(res.reactionDelays.end(), run.delays.begin(), run.delays.end());
    res.framesProcessed += run.frames;
  }
  return res;
}

}  // namespace fingereye::sim
