#pragma once

#include "fingereye/common.hpp"

#include <opencv2/core.hpp>

#include <filesystem>

namespace fingereye::imaging {

struct CameraIntrinsics {
  double fx = 400.0;
  double fy = 400.0;
  double cx = 320.0;
  double cy = 240.0;

  /// Throws InvalidArgument unless focal lengths are positive and the
  /// principal point lies inside `sensor`.
  void validate(cv::Size sensor) const;
};

/// Radial coefficients of the equidistant fisheye model. All zero means the
/// plain theta mapping (theta' = theta).
struct FisheyeDistortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;

  bool is_zero() const { return k1 == 0.0 && k2 == 0.0 && k3 == 0.0 && k4 == 0.0; }
  void validate() const;
};

struct RigidPose {
  cv::Matx33d R = cv::Matx33d::eye();
  cv::Vec3d T{0.0, 0.0, 0.0};

  static RigidPose identity() { return {}; }
  /// Throws InvalidArgument unless R is orthonormal with det +1 (1e-9).
  void validate() const;
};

/// Everything the rectifier needs to know about the finger camera.
struct CameraModel {
  CameraIntrinsics intrinsics;
  FisheyeDistortion distortion;
  cv::Size sensor{640, 480};
  /// false means a rectilinear pinhole camera: no theta mapping at all.
  bool fisheye = true;

  /// Plain-text `key = value` calibration document (fx, fy, cx, cy, k1..k4,
  /// width, height, optional model = fisheye|pinhole). '#' starts a comment.
  static CameraModel load(const std::filesystem::path& path);
  static CameraModel parse(const std::string& text);
  std::string serialize() const;
};

/// Ratio theta'/r for a normalized radius r; exact at r = 0 via the series
/// expansion of atan(r)/r.
double distortion_scale(double r, const FisheyeDistortion& dist);

/// Applies the fisheye mapping to normalized pinhole coordinates.
Point2 distort_normalized(Point2 undistorted, const FisheyeDistortion& dist);

/// Inverse of distort_normalized (Newton iteration on theta). Points whose
/// distorted angle lies beyond the monotone range are clamped to it.
Point2 undistort_normalized(Point2 distorted, const FisheyeDistortion& dist);

/// World point -> distorted pixel through pose, fisheye model and intrinsics.
Point2 project_fisheye(const cv::Vec3d& worldPoint, const RigidPose& pose,
                       const CameraIntrinsics& intr, const FisheyeDistortion& dist);

/// Precomputed backward map: for each rectified pixel, where to sample the
/// raw fisheye frame. Immutable once built; share it across frames.
class RemapGrid {
 public:
  RemapGrid() = default;
  RemapGrid(const CameraIntrinsics& intr, const FisheyeDistortion& dist, cv::Size outputSize);

  bool empty() const { return mapX_.empty(); }
  cv::Size size() const { return mapX_.size(); }
  const cv::Mat& map_x() const { return mapX_; }
  const cv::Mat& map_y() const { return mapY_; }

 private:
  cv::Mat mapX_;
  cv::Mat mapY_;
};

/// Rectifies `frame` with a prebuilt grid; samples outside the input take
/// `background` (applied to every channel).
Frame undistort_image(const Frame& frame, const RemapGrid& grid, double background = 255.0);

Frame undistort_image(const Frame& frame, const CameraIntrinsics& intr,
                      const FisheyeDistortion& dist, double background = 255.0);

}  // namespace fingereye::imaging
