#include "fingereye/sim/camera.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>

namespace fingereye::sim {

imaging::CameraModel CameraRig::default_model() {
  imaging::CameraModel m;
  m.intrinsics = {400.0, 400.0, 320.0, 240.0};
  m.distortion = {0.08, 0.02, 0.0, 0.0};
  m.sensor = {640, 480};
  m.fisheye = true;
  return m;
}

CameraSimulator::CameraSimulator(Frame page, double pageDpmm, CameraRig rig)
    : page_(std::move(page)), dpmm_(pageDpmm), rig_(std::move(rig)) {
  if (page_.empty()) throw Error(ErrorCode::InvalidArgument, "empty page");
  if (!(dpmm_ > 0)) throw Error(ErrorCode::InvalidArgument, "dpmm must be positive");
  const auto& intr = rig_.model.intrinsics;
  const cv::Size sz = rig_.model.sensor;
  offX_.create(sz, CV_32F);
  offY_.create(sz, CV_32F);
  deviceMask_ = cv::Mat(sz, CV_8U, cv::Scalar(0));
  const double tanHalf = std::tan(rig_.wedgeHalfAngleRad);
  for (int v = 0; v < sz.height; ++v) {
    for (int u = 0; u < sz.width; ++u) {
      Point2 n((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy);
      if (rig_.model.fisheye) n = imaging::undistort_normalized(n, rig_.model.distortion);
      const double ox = n.x * rig_.heightMm;
      const double oy = n.y * rig_.heightMm - rig_.aheadMm;
      offX_.at<float>(v, u) = static_cast<float>(ox);
      offY_.at<float>(v, u) = static_cast<float>(oy);
      if (rig_.drawDevice && oy >= 0.0 && std::abs(ox) <= oy * tanHalf + 0.5 * rig_.mm_per_pixel())
        deviceMask_.at<uchar>(v, u) = 255;
    }
  }
  Point2 apex(0.0, rig_.aheadMm / rig_.heightMm);
  if (rig_.model.fisheye) apex = imaging::distort_normalized(apex, rig_.model.distortion);
  apex_ = {intr.fx * apex.x + intr.cx, intr.fy * apex.y + intr.cy};
}

Frame CameraSimulator::capture(const FingerPose& pose, double noiseSigma, std::uint64_t seed, double timestamp) const {
  cv::Mat mapX, mapY;
  if (pose.yawRad == 0.0) {
    cv::add(offX_, cv::Scalar(pose.xMm), mapX);
    cv::add(offY_, cv::Scalar(pose.yMm), mapY);
  } else {
    const double c = std::cos(pose.yawRad), s = std::sin(pose.yawRad);
    mapX = offX_ * c - offY_ * s + pose.xMm;
    mapY = offX_ * s + offY_ * c + pose.yMm;
  }
  mapX *= dpmm_;
  mapY *= dpmm_;
  cv::Mat gray;
  cv::remap(page_.image, gray, mapX, mapY, cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar(255));
  cv::Mat bgr;
  cv::cvtColor(gray, bgr, cv::COLOR_GRAY2BGR);
  if (rig_.drawDevice) bgr.setTo(rig_.wedgeColor, deviceMask_);
  if (noiseSigma > 0.0) {
    cv::Mat noise(bgr.size(), CV_16SC3);
    cv::RNG rng(seed);
    rng.fill(noise, cv::RNG::NORMAL, 0.0, noiseSigma * 255.0);
    cv::add(bgr, noise, bgr, cv::noArray(), CV_8U);
  }
  return Frame(bgr, timestamp);
}

Frame simulate_camera(const Frame& page, double pageDpmm, const FingerPose& pose, const CameraRig& rig,
                      double noiseSigma, std::uint64_t seed) {
  return CameraSimulator(page, pageDpmm, rig).capture(pose, noiseSigma, seed);
}

}  // namespace fingereye::sim
