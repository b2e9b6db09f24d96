#pragma once

#include "fingereye/common.hpp"

namespace fingereye::page {

struct FingertipConfig {
  int minArea = 200;  // pixels, at 640x480
  /// Minimum distance between the two Otsu class means on b* (8-bit units).
  double minClassSeparation = 12.0;
  /// The device class mean must sit at least this far on the blue side of
  /// neutral (b* = 128 in 8-bit Lab).
  double minBlueness = 10.0;
};

struct FingertipEstimate {
  Point2 position;
  cv::Mat deviceMask;  // CV_8U, 255 on the device
  double confidence = 0.0;
  int area = 0;
};

/// Blue device segmentation: Otsu on the b* channel of L*a*b* (D65), largest
/// 8-connected blue component, topmost pixel (smallest x on ties). Throws
/// NoDeviceFound when no component reaches `minArea`.
FingertipEstimate detect_fingertip(const Frame& rgb, const FingertipConfig& cfg = {});

/// 8-bit L*a*b* of a BGR frame; lets callers share one conversion between
/// the two functions below.
cv::Mat to_lab(const Frame& rgb);
FingertipEstimate detect_fingertip_lab(const cv::Mat& lab, const FingertipConfig& cfg = {});

/// Page region for the corner filter: Otsu on L*, a closing that fills the
/// ink, minus the device mask dilated by `deviceMargin` pixels.
cv::Mat page_mask(const Frame& rgb, const cv::Mat& deviceMask, int closeSize = 31, int deviceMargin = 9);
cv::Mat page_mask_lab(const cv::Mat& lab, const cv::Mat& deviceMask, int closeSize = 31, int deviceMargin = 9);

/// Otsu ink mask (255 on dark pixels). Returns an empty mask when the two
/// classes are closer than `minSeparation` gray levels, i.e. the input is flat.
cv::Mat binarize_ink(const cv::Mat& gray, double minSeparation = 30.0);

}  // namespace fingereye::page
