#include "fingereye/page/word.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fingereye::page {

const LineRegion& line_above(const std::vector<LineRegion>& lines, Point2 tip) {
  const LineRegion* best = nullptr;
  double bestDist = std::numeric_limits<double>::infinity();
  for (const auto& l : lines) {
    const double bottom = l.bbox.y + l.bbox.height;
    if (bottom > tip.y) continue;
    const double d = tip.y - bottom;
    if (d < bestDist) bestDist = d, best = &l;
  }
  if (!best) throw Error(ErrorCode::NoLineAboveFinger, "no text line above the fingertip");
  return *best;
}

WordCrop extract_focused_word(const std::vector<LineRegion>& lines, const FingertipEstimate& tip, const Frame& gray,
                              const cv::Mat& blobs, double nearSlack) {
  const LineRegion& line = line_above(lines, tip.position);
  const cv::Rect frameRect(0, 0, gray.width(), gray.height());
  const cv::Rect roi = line.bbox & frameRect;

  // Blobs are labelled on the whole raster so words keep their full extent;
  // only components reaching into the line box take part.
  cv::Mat labels, stats, centroids;
  const int total = cv::connectedComponentsWithStats(blobs, labels, stats, centroids, 8, CV_32S);
  std::vector<bool> touches(total, false);
  for (int y = roi.y; y < roi.y + roi.height; ++y) {
    const int* row = labels.ptr<int>(y);
    for (int x = roi.x; x < roi.x + roi.width; ++x) touches[row[x]] = true;
  }
  std::vector<int> members{0};
  for (int i = 1; i < total; ++i)
    if (touches[i]) members.push_back(i);
  const int n = static_cast<int>(members.size());
  if (n <= 1) throw Error(ErrorCode::NoLineAboveFinger, "selected line has no blobs");
  auto area = [&](int i) { return stats.at<int>(members[i], cv::CC_STAT_AREA); };
  auto box = [&](int i) {
    const int j = members[i];
    return cv::Rect(stats.at<int>(j, cv::CC_STAT_LEFT), stats.at<int>(j, cv::CC_STAT_TOP),
                    stats.at<int>(j, cv::CC_STAT_WIDTH), stats.at<int>(j, cv::CC_STAT_HEIGHT));
  };
  auto xdist = [&](int i) {
    const cv::Rect b = box(i);
    const double tx = tip.position.x;
    if (tx < b.x) return b.x - tx;
    if (tx > b.x + b.width - 1) return tx - (b.x + b.width - 1);
    return 0.0;
  };

  double dmin = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) dmin = std::min(dmin, xdist(i));
  int sel = -1;
  for (int i = 1; i < n; ++i) {
    if (xdist(i) > dmin + nearSlack) continue;
    if (sel < 0) {
      sel = i;
      continue;
    }
    const int a = area(i), b = area(sel);
    if (a > b || (a == b && box(i).x < box(sel).x)) sel = i;
  }

  cv::Rect merged = box(sel);
  const cv::Rect selBox = merged;
  for (int i = 1; i < n; ++i) {
    const cv::Rect b = box(i);
    if (i != sel && b.x < selBox.x + selBox.width && selBox.x < b.x + b.width) merged |= b;
  }
  merged &= frameRect;

  WordCrop crop;
  crop.bbox = merged;
  crop.lineId = line.id;
  crop.grayPatch = to_gray(gray.image)(merged).clone();
  return crop;
}

}  // namespace fingereye::page
