#include "fingereye/common.hpp"

#include <opencv2/imgproc.hpp>

namespace fingereye {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoLinesFound: return "NoLinesFound";
    case ErrorCode::NoDeviceFound: return "NoDeviceFound";
    case ErrorCode::NoLineAboveFinger: return "NoLineAboveFinger";
    case ErrorCode::EngineFailure: return "EngineFailure";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::OverlappingLines: return "OverlappingLines";
    case ErrorCode::UnsupportedCharacter: return "UnsupportedCharacter";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::TextOverflow: return "TextOverflow";
    case ErrorCode::PipelineStall: return "PipelineStall";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

cv::Mat to_gray(const cv::Mat& image) {
  if (image.channels() == 1) return image;
  cv::Mat gray;
  if (image.channels() == 4) {
    cv::cvtColor(image, gray, cv::COLOR_BGRA2GRAY);
  } else {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  }
  return gray;
}

}  // namespace fingereye
