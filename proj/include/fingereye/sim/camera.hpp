#pragma once

#include "fingereye/common.hpp"
#include "fingereye/imaging/fisheye.hpp"

#include <cstdint>

namespace fingereye::sim {

struct FingerPose {
  double xMm = 0.0;  // page coordinates of the fingertip
  double yMm = 0.0;
  double yawRad = 0.0;
};

/// Finger-mounted camera looking straight down at the page from `heightMm`,
/// its optical axis `aheadMm` up the page from the fingertip. The device is
/// drawn as a blue wedge with its apex on the fingertip, widening toward the
/// hand.
struct CameraRig {
  imaging::CameraModel model = default_model();
  double heightMm = 25.0;
  double aheadMm = 7.0;
  double wedgeHalfAngleRad = 0.35;
  cv::Scalar wedgeColor{190, 110, 40};  // BGR
  bool drawDevice = true;

  static imaging::CameraModel default_model();
  /// Page millimetres per rectified pixel at the optical axis.
  double mm_per_pixel() const { return heightMm / model.intrinsics.fx; }
};

/// Renders camera frames from a page raster. The ray table (distorted pixel
/// -> page offset) and the device mask are built once per rig.
class CameraSimulator {
 public:
  CameraSimulator(Frame page, double pageDpmm, CameraRig rig);

  /// BGR frame for `pose`, with Gaussian noise of `noiseSigma` (fraction of
  /// full scale) drawn from `seed`.
  Frame capture(const FingerPose& pose, double noiseSigma, std::uint64_t seed, double timestamp = 0.0) const;

  /// Device apex in the raw frame.
  Point2 apex_pixel() const { return apex_; }
  const cv::Mat& device_mask() const { return deviceMask_; }
  const CameraRig& rig() const { return rig_; }
  double page_dpmm() const { return dpmm_; }

 private:
  Frame page_;
  double dpmm_;
  CameraRig rig_;
  cv::Mat offX_, offY_;  // CV_32F page offset from the fingertip, mm
  cv::Mat deviceMask_;
  Point2 apex_;
};

/// One-shot form of CameraSimulator::capture.
Frame simulate_camera(const Frame& page, double pageDpmm, const FingerPose& pose, const CameraRig& rig,
                      double noiseSigma, std::uint64_t seed = 0);

}  // namespace fingereye::sim
