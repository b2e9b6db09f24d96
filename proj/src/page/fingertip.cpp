#include "fingereye/page/fingertip.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>

namespace fingereye::page {

namespace {

struct OtsuSplit {
  double threshold = 0.0;
  double lowMean = 0.0;
  double highMean = 0.0;
  bool valid = false;
};

OtsuSplit otsu_split(const cv::Mat& channel) {
  OtsuSplit s;
  cv::Mat tmp;
  s.threshold = cv::threshold(channel, tmp, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU);
  const cv::Mat high = channel > s.threshold;
  const int nHigh = cv::countNonZero(high);
  const int nLow = static_cast<int>(channel.total()) - nHigh;
  if (nHigh == 0 || nLow == 0) return s;
  s.highMean = cv::mean(channel, high)[0];
  s.lowMean = cv::mean(channel, ~high)[0];
  s.valid = true;
  return s;
}

cv::Mat mask_from_lightness(const cv::Mat& lightness, const cv::Mat& deviceMask, int closeSize, int deviceMargin) {
  cv::Mat paper;
  const OtsuSplit s = otsu_split(lightness);
  if (s.valid)
    paper = lightness > s.threshold;
  else
    paper = cv::Mat(lightness.size(), CV_8U, cv::Scalar(255));
  if (closeSize > 1)
    cv::morphologyEx(paper, paper, cv::MORPH_CLOSE,
                     cv::getStructuringElement(cv::MORPH_RECT, {closeSize, closeSize}));
  if (!deviceMask.empty()) {
    cv::Rect box = cv::boundingRect(deviceMask);
    if (deviceMargin > 0) {
      box = (box - cv::Point(deviceMargin, deviceMargin) + cv::Size(2 * deviceMargin, 2 * deviceMargin)) &
            cv::Rect(0, 0, deviceMask.cols, deviceMask.rows);
      cv::Mat dev;
      cv::dilate(deviceMask(box), dev,
                 cv::getStructuringElement(cv::MORPH_ELLIPSE, {2 * deviceMargin + 1, 2 * deviceMargin + 1}), {-1, -1}, 1,
                 cv::BORDER_CONSTANT, cv::Scalar(0));
      paper(box).setTo(0, dev);
    } else {
      paper.setTo(0, deviceMask);
    }
  }
  return paper;
}

}  // namespace

cv::Mat binarize_ink(const cv::Mat& gray, double minSeparation) {
  const OtsuSplit s = otsu_split(gray);
  if (!s.valid || s.highMean - s.lowMean < minSeparation) return {};
  return gray <= s.threshold;
}

cv::Mat to_lab(const Frame& rgb) {
  if (rgb.empty() || rgb.image.channels() != 3)
    throw Error(ErrorCode::InvalidArgument, "expected a color frame");
  cv::Mat lab;
  cv::cvtColor(rgb.image, lab, cv::COLOR_BGR2Lab);
  return lab;
}

FingertipEstimate detect_fingertip(const Frame& rgb, const FingertipConfig& cfg) {
  return detect_fingertip_lab(to_lab(rgb), cfg);
}

FingertipEstimate detect_fingertip_lab(const cv::Mat& lab, const FingertipConfig& cfg) {
  cv::Mat b;
  cv::extractChannel(lab, b, 2);

  const OtsuSplit s = otsu_split(b);
  if (!s.valid || s.highMean - s.lowMean < cfg.minClassSeparation || s.lowMean > 128.0 - cfg.minBlueness)
    throw Error(ErrorCode::NoDeviceFound, "no blue device in frame");

  const cv::Mat blue = b <= s.threshold;
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(blue, labels, stats, centroids, 8, CV_32S);
  int best = -1, bestArea = 0;
  for (int i = 1; i < n; ++i) {
    const int area = stats.at<int>(i, cv::CC_STAT_AREA);
    if (area > bestArea) best = i, bestArea = area;
  }
  if (best < 0 || bestArea < cfg.minArea)
    throw Error(ErrorCode::NoDeviceFound, "largest blue component below minimum area");

  FingertipEstimate est;
  est.deviceMask = labels == best;
  est.area = bestArea;
  const int top = stats.at<int>(best, cv::CC_STAT_TOP);
  const int* row = labels.ptr<int>(top);
  for (int x = 0; x < labels.cols; ++x) {
    if (row[x] == best) {
      est.position = Point2(x, top);
      break;
    }
  }
  est.confidence = std::min(1.0, static_cast<double>(bestArea) / (5.0 * cfg.minArea));
  return est;
}

cv::Mat page_mask(const Frame& rgb, const cv::Mat& deviceMask, int closeSize, int deviceMargin) {
  if (rgb.image.channels() == 3) return page_mask_lab(to_lab(rgb), deviceMask, closeSize, deviceMargin);
  return mask_from_lightness(rgb.image, deviceMask, closeSize, deviceMargin);
}

cv::Mat page_mask_lab(const cv::Mat& lab, const cv::Mat& deviceMask, int closeSize, int deviceMargin) {
  cv::Mat lightness;
  cv::extractChannel(lab, lightness, 0);
  return mask_from_lightness(lightness, deviceMask, closeSize, deviceMargin);
}

}  // namespace fingereye::page
