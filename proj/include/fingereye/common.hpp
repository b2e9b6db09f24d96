#pragma once

#include <opencv2/core.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace fingereye {

using Point2 = cv::Point2d;

enum class ErrorCode {
  InvalidArgument,
  PointBehindCamera,
  DegenerateConfiguration,
  NoLinesFound,
  NoDeviceFound,
  NoLineAboveFinger,
  EngineFailure,
  InsufficientPoints,
  DegenerateGeometry,
  OverlappingLines,
  UnsupportedCharacter,
  UnknownCell,
  TextOverflow,
  PipelineStall,
  CalibrationFailed,
  ParseError,
  NotFound,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. Every module reports its
/// documented failure modes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A raster flowing through the pipeline. Color frames are 8-bit BGR (OpenCV
/// channel order), gray frames 8-bit single channel unless stated otherwise.
struct Frame {
  cv::Mat image;
  double timestamp = 0.0;

  Frame() = default;
  explicit Frame(cv::Mat img, double t = 0.0) : image(std::move(img)), timestamp(t) {}

  bool empty() const { return image.empty(); }
  int width() const { return image.cols; }
  int height() const { return image.rows; }
  cv::Size size() const { return image.size(); }
};

/// Gray copy of a frame regardless of its channel count.
cv::Mat to_gray(const cv::Mat& image);

}  // namespace fingereye
