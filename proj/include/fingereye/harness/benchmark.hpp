#pragma once

#include "fingereye/harness/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>

namespace fingereye::harness {

struct BenchmarkReport {
  int frames = 0;
  double seconds = 0.0;
  double framesPerSecond = 0.0;
  StageTimes meanTimes;
  int framesWithWord = 0;
  int framesWithLines = 0;
  nlohmann::ordered_json to_json() const;
};

/// Runs the full per-frame pipeline on `frames` synthetic 640x480 camera
/// frames of a finger sweeping along a text line. Frame synthesis is not
/// timed.
BenchmarkReport run_benchmark(const PipelineConfig& cfg, int frames, std::uint64_t seed = 7);

}  // namespace fingereye::harness
