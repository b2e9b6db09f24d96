#include "fingereye/harness/benchmark.hpp"

#include "fingereye/sim/camera.hpp"
#include "fingereye/sim/page.hpp"

#include <chrono>

namespace fingereye::harness {

nlohmann::ordered_json BenchmarkReport::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["seconds"] = seconds;
  j["framesPerSecond"] = framesPerSecond;
  j["framesWithLines"] = framesWithLines;
  j["framesWithWord"] = framesWithWord;
  j["meanStageMs"] = {{"rectify", meanTimes.rectifyMs}, {"fingertip", meanTimes.fingertipMs},
                      {"lines", meanTimes.linesMs},     {"word", meanTimes.wordMs},
                      {"ocr", meanTimes.ocrMs},         {"motion", meanTimes.motionMs},
                      {"total", meanTimes.totalMs}};
  return j;
}

BenchmarkReport run_benchmark(const PipelineConfig& cfg, int frames, std::uint64_t seed) {
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "frames must be >= 1");
  const auto layout = sim::default_layout();
  const double dpmm = 16.0;
  sim::CameraRig rig;
  rig.model = cfg.camera;
  sim::CameraSimulator camera(sim::render_page(layout, dpmm), dpmm, rig);

  std::vector<Frame> input;
  const int line = 5;
  for (int i = 0; i < frames; ++i) {
    const double u = (i % 50) / 50.0;
    sim::FingerPose pose{layout.marginLeftMm + 10.0 + 150.0 * u, layout.baseline_mm(line) + 0.4 * std::sin(i * 0.7),
                         0.0};
    input.push_back(camera.capture(pose, 0.01, seed + i, i / cfg.frameRateHz));
  }

  Pipeline pipeline(cfg);
  BenchmarkReport rep;
  rep.frames = frames;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& f : input) {
    const auto r = pipeline.step(f);
    const auto& t = r.diagnostics.times;
    rep.meanTimes.rectifyMs += t.rectifyMs;
    rep.meanTimes.fingertipMs += t.fingertipMs;
    rep.meanTimes.linesMs += t.linesMs;
    rep.meanTimes.wordMs += t.wordMs;
    rep.meanTimes.ocrMs += t.ocrMs;
    rep.meanTimes.motionMs += t.motionMs;
    rep.meanTimes.totalMs += t.totalMs;
    if (r.diagnostics.lineCount > 0) ++rep.framesWithLines;
    if (!r.diagnostics.word.empty()) ++rep.framesWithWord;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.framesPerSecond = frames / std::max(rep.seconds, 1e-9);
  for (double* v : {&rep.meanTimes.rectifyMs, &rep.meanTimes.fingertipMs, &rep.meanTimes.linesMs,
                    &rep.meanTimes.wordMs, &rep.meanTimes.ocrMs, &rep.meanTimes.motionMs, &rep.meanTimes.totalMs})
    *v /= frames;
  return rep;
}

}  // namespace fingereye::harness
