#pragma once

#include "fingereye/common.hpp"

#include <cstdint>

namespace fingereye::page {

struct SkewConfig {
  double sampleFraction = 0.2;      // share of edge points that vote
  double minSegmentFraction = 0.3;  // of frame width
  double maxAngle = CV_PI / 3.0;    // text directions searched, |angle| <= maxAngle
  double angleStep = CV_PI / 360.0;
  double rhoStep = 1.0;
  double lineTolerance = 1.5;  // pixels, point-to-line distance for segment membership
  double maxGapFraction = 0.08;  // of frame width, inside one segment
  int maxPeaks = 24;
  std::uint64_t seed = 0x5eed;
};

struct SkewSegment {
  Point2 a, b;
  double angle = 0.0;
};

/// Probabilistic Hough estimate of the dominant text direction in radians,
/// counter-clockwise positive on screen (atan2(-dy, dx)). Ink is closed
/// horizontally into line bands whose upper and lower edges vote. Throws
/// NoLinesFound when fewer than two long segments are found.
double detect_skew(const Frame& frame, const SkewConfig& cfg = {});

/// Same, also returning the qualifying segments.
double detect_skew(const Frame& frame, const SkewConfig& cfg, std::vector<SkewSegment>* segments);

/// Rotates about the image center by -angle (bilinear, `background` fill).
Frame deskew(const Frame& frame, double angle, double background = 255.0);

/// Affine map used by deskew, exposed so point sets can follow the image.
cv::Matx23d deskew_transform(cv::Size size, double angle);

}  // namespace fingereye::page
