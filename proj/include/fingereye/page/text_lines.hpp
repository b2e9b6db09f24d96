#pragma once

#include "fingereye/common.hpp"

#include <vector>

namespace fingereye::page {

struct TextLineConfig {
  int fastThreshold = 20;
  cv::Size dilateKernel{9, 3};
  cv::Size closeKernel{5, 5};
  double nominalPitchPx = 40.0;  // cluster gap threshold is half of this
  /// Pitch at which the default kernels apply; kernels scale by
  /// estimatedPitch / referencePitchPx once two lines are visible.
  double referencePitchPx = 80.0;
  bool scaleWithPitch = true;
  int minCorners = 8;
};

/// Extent of a line in the deskewed frame (rotation by -angle about the
/// frame center).
struct LineExtent {
  double left = 0, top = 0, right = 0, bottom = 0;
};

struct LineRegion {
  int id = 0;
  std::vector<Point2> baselinePoints;  // left to right, frame coordinates
  cv::Rect bbox;
  double angle = 0.0;
  int cornerCount = 0;
  LineExtent deskewed;
  bool clippedLeft = false;   // the line runs into the frame border
  bool clippedRight = false;
};

struct TextLineResult {
  std::vector<LineRegion> lines;
  cv::Mat blobs;             // CV_8U corner blob raster used for the lines
  double blockAngle = 0.0;   // radians, counter-clockwise positive
  double pitchPx = 0.0;      // 0 when fewer than two lines
  double kernelScale = 1.0;
};

/// FAST corners (non-max suppression on) that fall inside `mask`.
std::vector<Point2> detect_corners(const Frame& gray, const cv::Mat& mask, int threshold = 20);

/// Corner raster -> dilation + closing blobs -> longest fast line segment
/// sets the block angle -> corners rotated by -angle -> 1-D gap clustering
/// on y -> regions ordered top to bottom.
std::vector<LineRegion> cluster_text_lines(const std::vector<Point2>& corners, cv::Size frameDims,
                                           const TextLineConfig& cfg = {});

/// As above, also returning the blob raster, block angle and pitch.
TextLineResult analyze_text_lines(const std::vector<Point2>& corners, cv::Size frameDims,
                                  const TextLineConfig& cfg = {});

/// Morphological blob raster of a corner set.
cv::Mat corner_blobs(const std::vector<Point2>& corners, cv::Size frameDims, cv::Size dilateKernel,
                     cv::Size closeKernel);

/// Direction of the longest near-horizontal fast line segment in `blobs`
/// (radians, counter-clockwise positive); 0 when none is found.
double block_angle(const cv::Mat& blobs);

}  // namespace fingereye::page
