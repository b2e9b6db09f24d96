#pragma once

#include "fingereye/common.hpp"

#include <optional>
#include <vector>

namespace fingereye::motion {

struct FeatureConfig {
  double qualityLevel = 0.01;
  double minDistance = 7.0;
  int blockSize = 3;
};

struct FlowConfig {
  int window = 3;        // odd side of the LK patch
  bool pyramidal = false;
  int levels = 3;        // pyramid levels including the base
  int iterations = 20;   // Newton refinements per level
  double epsilon = 0.01;  // pixels; stop when the update is smaller
  double minEigen = 1e-4;  // of the normal matrix divided by the window area
};

struct FlowPoint {
  Point2 src;
  Point2 dst;
  bool tracked = false;
};

struct FlowField {
  std::vector<FlowPoint> points;
  double frameInterval = 1.0 / 3.0;
};

struct AffineMotion {
  cv::Matx22d A = cv::Matx22d::eye();
  cv::Vec2d b{0.0, 0.0};
  int inlierCount = 0;
  std::optional<cv::Vec2d> translationMmPerS;
  double rmsResidual = 0.0;
};

/// Shi-Tomasi corners, strongest first, at most `maxCount`.
std::vector<Point2> detect_features(const Frame& gray, int maxCount, const FeatureConfig& cfg = {});

/// Windowed Lucas-Kanade on intensities scaled to [0, 1]. A point is marked
/// untracked when the smallest eigenvalue of its normal matrix (divided by
/// the window area) falls below `minEigen` at the finest level, or when it
/// leaves the frame.
FlowField track_flow(const Frame& prev, const Frame& next, const std::vector<Point2>& points,
                     const FlowConfig& cfg = {}, double frameInterval = 1.0 / 3.0);

/// Least-squares affine fit dst = A src + b over tracked points with one
/// round of trimming at twice the residual standard deviation. Throws
/// InsufficientPoints (< 3 tracked) or DegenerateGeometry (collinear).
AffineMotion estimate_motion(const FlowField& flow, std::optional<double> mmPerPixel = std::nullopt);

/// Translation-only fit residual (RMS), for comparison with the affine fit.
double translation_rms(const FlowField& flow);

}  // namespace fingereye::motion
