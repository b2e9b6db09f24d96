#pragma once

#include "fingereye/common.hpp"

#include <utility>
#include <vector>

namespace fingereye::imaging {

struct ControlPair {
  Point2 src;
  Point2 dst;
};

/// Thin-plate spline f(p) = A p + b + sum_i w_i U(|p - src_i|), U(r) = r^2 log r.
///
/// `lambda` weights the bending integral directly; since that integral equals
/// 8*pi * w^T K w for this kernel, the fitted system is (K + 8*pi*lambda I).
struct TpsWarp {
  std::vector<ControlPair> controlPoints;
  std::vector<cv::Vec2d> weights;
  cv::Matx23d affinePart = cv::Matx23d(1, 0, 0, 0, 1, 0);
  double lambda = 0.0;

  Point2 operator()(Point2 p) const;

  /// Value of the bending integral for the fitted warp.
  double bending_energy() const;

  /// Largest violation of sum(w) = 0 and sum(w * src^T) = 0.
  double side_condition_residual() const;
};

double tps_kernel(double r);

/// Fits the smoothing spline through `pairs`. Throws DegenerateConfiguration
/// for fewer than three points or collinear sources.
TpsWarp fit_tps(const std::vector<ControlPair>& pairs, double lambda);

/// Backward warp: output(p) = input(f(p)), bilinear, `background` outside.
Frame apply_tps(const TpsWarp& warp, const Frame& frame, double background = 255.0);

}  // namespace fingereye::imaging
