#pragma once

#include "fingereye/harness/pipeline.hpp"

#include <filesystem>

namespace fingereye::harness {

struct DebugFrame {
  const Frame* rectified = nullptr;
  const page::FingertipEstimate* tip = nullptr;
  const std::vector<Point2>* corners = nullptr;
  const std::vector<page::LineRegion>* lines = nullptr;
  const motion::FlowField* flow = nullptr;
  const Diagnostics* diagnostics = nullptr;
};

/// Writes <dir>/frame_<index>.png (mask tint, corners, line boxes, word box,
/// flow vectors, tip marker) and frame_<index>.json with the detections.
void write_debug_dump(const std::filesystem::path& dir, int index, const DebugFrame& f);

}  // namespace fingereye::harness
