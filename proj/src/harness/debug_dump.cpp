#include "fingereye/harness/debug_dump.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstdio>
#include <fstream>

namespace fingereye::harness {

void write_debug_dump(const std::filesystem::path& dir, int index, const DebugFrame& f) {
  if (!f.rectified || f.rectified->empty()) return;
  std::filesystem::create_directories(dir);
  cv::Mat canvas;
  if (f.rectified->image.channels() == 3)
    canvas = f.rectified->image.clone();
  else
    cv::cvtColor(f.rectified->image, canvas, cv::COLOR_GRAY2BGR);

  nlohmann::ordered_json j;
  j["frame"] = index;
  if (f.tip && !f.tip->deviceMask.empty()) {
    cv::Mat tint(canvas.size(), canvas.type(), cv::Scalar(255, 0, 255));
    cv::Mat blended;
    cv::addWeighted(canvas, 0.6, tint, 0.4, 0, blended);
    blended.copyTo(canvas, f.tip->deviceMask);
    cv::drawMarker(canvas, f.tip->position, {0, 0, 255}, cv::MARKER_CROSS, 15, 2);
    j["tip"] = {f.tip->position.x, f.tip->position.y};
    j["tipConfidence"] = f.tip->confidence;
  }
  if (f.corners) {
    for (const auto& c : *f.corners) cv::circle(canvas, c, 2, {0, 200, 0}, cv::FILLED);
    j["cornerCount"] = f.corners->size();
  }
  if (f.lines) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& l : *f.lines) {
      cv::rectangle(canvas, l.bbox, {255, 128, 0}, 1);
      nlohmann::ordered_json lj;
      lj["id"] = l.id;
      lj["bbox"] = {l.bbox.x, l.bbox.y, l.bbox.width, l.bbox.height};
      lj["angle"] = l.angle;
      lj["cornerCount"] = l.cornerCount;
      arr.push_back(lj);
    }
    j["lines"] = arr;
  }
  if (f.flow) {
    for (const auto& p : f.flow->points)
      if (p.tracked) cv::arrowedLine(canvas, p.src, p.dst, {0, 255, 255}, 1);
  }
  if (f.diagnostics) {
    if (f.diagnostics->wordBox) cv::rectangle(canvas, *f.diagnostics->wordBox, {0, 0, 255}, 2);
    if (f.diagnostics->baselineY)
      cv::line(canvas, {0, cvRound(*f.diagnostics->baselineY)}, {canvas.cols - 1, cvRound(*f.diagnostics->baselineY)},
               {0, 128, 255}, 1);
    j["diagnostics"] = f.diagnostics->to_json();
  }

  char name[32];
  std::snprintf(name, sizeof name, "frame_%05d", index);
  cv::imwrite((dir / (std::string(name) + ".png")).string(), canvas);
  std::ofstream(dir / (std::string(name) + ".json")) << j.dump(2) << '\n';
}

}  // namespace fingereye::harness
