#include "fingereye/page/text_lines.hpp"

#include "fingereye/page/skew.hpp"

#include <opencv2/features2d.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/ximgproc/fast_line_detector.hpp>

#include <algorithm>
#include <cmath>

namespace fingereye::page {

namespace {

cv::Size odd_scaled(cv::Size k, double s) {
  auto one = [s](int v) {
    int r = static_cast<int>(std::lround(v * s));
    if (r < 1) r = 1;
    if (r % 2 == 0) ++r;
    return r;
  };
  return {one(k.width), one(k.height)};
}

struct Cluster {
  std::vector<std::size_t> members;
  double meanY = 0.0;
};

std::vector<Cluster> cluster_y(const std::vector<Point2>& rotated, double gap) {
  std::vector<std::size_t> order(rotated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rotated[a].y < rotated[b].y; });
  std::vector<Cluster> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || rotated[order[k]].y - rotated[order[k - 1]].y > gap) out.emplace_back();
    out.back().members.push_back(order[k]);
  }
  for (auto& c : out) {
    double s = 0;
    for (auto i : c.members) s += rotated[i].y;
    c.meanY = s / c.members.size();
  }
  return out;
}

struct Pass {
  cv::Mat blobs;
  double angle = 0.0;
  std::vector<Point2> rotated;
  std::vector<Cluster> clusters;
};

Pass run_pass(const std::vector<Point2>& corners, cv::Size dims, cv::Size dil, cv::Size close,
              const TextLineConfig& cfg) {
  Pass p;
  p.blobs = corner_blobs(corners, dims, dil, close);
  p.angle = block_angle(p.blobs);
  const cv::Matx23d R = deskew_transform(dims, p.angle);
  p.rotated.reserve(corners.size());
  for (const auto& c : corners) p.rotated.push_back(R * cv::Vec3d(c.x, c.y, 1.0));
  auto clusters = cluster_y(p.rotated, cfg.nominalPitchPx / 2.0);
  for (auto& c : clusters)
    if (static_cast<int>(c.members.size()) >= cfg.minCorners) p.clusters.push_back(std::move(c));
  return p;
}

double median_spacing(const std::vector<Cluster>& clusters) {
  std::vector<double> d;
  for (std::size_t i = 1; i < clusters.size(); ++i) d.push_back(clusters[i].meanY - clusters[i - 1].meanY);
  std::sort(d.begin(), d.end());
  if (d.empty()) return 0.0;
  return d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
}

}  // namespace

std::vector<Point2> detect_corners(const Frame& gray, const cv::Mat& mask, int threshold) {
  const cv::Mat g = to_gray(gray.image);
  std::vector<cv::KeyPoint> kps;
  cv::FAST(g, kps, threshold, false);
  // Non-max suppression over 3x3 on the summed-difference score, keeping one
  // point of a plateau (the first in raster order); clean renders produce
  // equal-score neighbours that the built-in suppression drops entirely.
  static const cv::Point kCircle[16] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                        {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
  cv::Mat score(g.size(), CV_32F, cv::Scalar(0));
  for (auto& k : kps) {
    const cv::Point c(cvRound(k.pt.x), cvRound(k.pt.y));
    const int v = g.at<uchar>(c);
    int dark = 0, bright = 0;
    for (const auto& o : kCircle) {
      const cv::Point q = c + o;
      if (q.x < 0 || q.y < 0 || q.x >= g.cols || q.y >= g.rows) continue;
      const int d = g.at<uchar>(q) - v;
      if (d > threshold) bright += d - threshold;
      if (-d > threshold) dark += -d - threshold;
    }
    k.response = static_cast<float>(std::max(dark, bright));
    score.at<float>(c) = k.response;
  }
  std::vector<Point2> out;
  for (const auto& k : kps) {
    const int x = cvRound(k.pt.x), y = cvRound(k.pt.y);
    if (!mask.empty() && !mask.at<uchar>(y, x)) continue;
    const float s = k.response;
    bool keep = true;
    for (int dy = -1; dy <= 1 && keep; ++dy)
      for (int dx = -1; dx <= 1 && keep; ++dx) {
        if (!dx && !dy) continue;
        const int xx = x + dx, yy = y + dy;
        if (xx < 0 || yy < 0 || xx >= g.cols || yy >= g.rows) continue;
        const float n = score.at<float>(yy, xx);
        const bool before = dy < 0 || (dy == 0 && dx < 0);
        if (n > s || (n == s && before)) keep = false;
      }
    if (keep) out.emplace_back(k.pt.x, k.pt.y);
  }
  return out;
}

cv::Mat corner_blobs(const std::vector<Point2>& corners, cv::Size dims, cv::Size dilateKernel, cv::Size closeKernel) {
  cv::Mat raster(dims, CV_8U, cv::Scalar(0));
  for (const auto& c : corners) {
    const int x = cvRound(c.x), y = cvRound(c.y);
    if (x >= 0 && y >= 0 && x < dims.width && y < dims.height) raster.at<uchar>(y, x) = 255;
  }
  cv::dilate(raster, raster, cv::getStructuringElement(cv::MORPH_RECT, dilateKernel));
  cv::morphologyEx(raster, raster, cv::MORPH_CLOSE, cv::getStructuringElement(cv::MORPH_RECT, closeKernel));
  return raster;
}

double block_angle(const cv::Mat& blobs) {
  static thread_local cv::Ptr<cv::ximgproc::FastLineDetector> fld =
      cv::ximgproc::createFastLineDetector(20, 1.414f, 50.0, 50.0, 3, false);
  std::vector<cv::Vec4f> segs;
  fld->detect(blobs, segs);
  // Length-weighted median over near-horizontal segments.
  std::vector<std::pair<double, double>> angles;
  double total = 0.0;
  for (const auto& s : segs) {
    double dx = s[2] - s[0], dy = s[3] - s[1];
    if (dx < 0) dx = -dx, dy = -dy;
    const double angle = std::atan2(-dy, dx);
    if (std::abs(angle) >= CV_PI / 4) continue;
    const double len = std::hypot(dx, dy);
    angles.emplace_back(angle, len);
    total += len;
  }
  if (angles.empty()) return 0.0;
  std::sort(angles.begin(), angles.end());
  double acc = 0.0;
  for (const auto& [a, w] : angles) {
    acc += w;
    if (acc >= total / 2) return a;
  }
  return angles.back().first;
}

TextLineResult analyze_text_lines(const std::vector<Point2>& corners, cv::Size dims, const TextLineConfig& cfg) {
  TextLineResult res;
  if (corners.empty()) {
    res.blobs = cv::Mat(dims, CV_8U, cv::Scalar(0));
    return res;
  }
  Pass pass = run_pass(corners, dims, cfg.dilateKernel, cfg.closeKernel, cfg);
  if (cfg.scaleWithPitch && pass.clusters.size() >= 2) {
    const double pitch = median_spacing(pass.clusters);
    res.pitchPx = pitch;
    const double scale = pitch / cfg.referencePitchPx;
    if (scale > 0.0 && std::abs(scale - 1.0) > 1e-3) {
      res.kernelScale = scale;
      pass = run_pass(corners, dims, odd_scaled(cfg.dilateKernel, scale), odd_scaled(cfg.closeKernel, scale), cfg);
    }
  }
  if (pass.clusters.size() >= 2) res.pitchPx = median_spacing(pass.clusters);
  res.blobs = pass.blobs;
  res.blockAngle = pass.angle;

  const cv::Matx23d R = deskew_transform(dims, pass.angle);
  cv::Matx23d Rinv;
  cv::invertAffineTransform(R, Rinv);
  const int hx = (odd_scaled(cfg.dilateKernel, res.kernelScale).width) / 2;
  int id = 0;
  for (const auto& c : pass.clusters) {
    LineRegion line;
    line.id = id++;
    line.angle = pass.angle;
    line.cornerCount = static_cast<int>(c.members.size());
    LineExtent e{1e300, 1e300, -1e300, -1e300};
    std::vector<cv::Point2f> pts;
    for (auto i : c.members) {
      const auto& r = pass.rotated[i];
      e.left = std::min(e.left, r.x), e.right = std::max(e.right, r.x);
      e.top = std::min(e.top, r.y), e.bottom = std::max(e.bottom, r.y);
      pts.emplace_back(static_cast<float>(corners[i].x), static_cast<float>(corners[i].y));
    }
    line.deskewed = e;
    auto inside = [&](Point2 p) {
      return Point2(std::clamp(p.x, 0.0, dims.width - 1.0), std::clamp(p.y, 0.0, dims.height - 1.0));
    };
    const Point2 bl = inside(Rinv * cv::Vec3d(e.left, e.bottom, 1.0));
    const Point2 br = inside(Rinv * cv::Vec3d(e.right, e.bottom, 1.0));
    line.baselinePoints = {bl, br};
    pts.emplace_back(static_cast<float>(bl.x), static_cast<float>(bl.y));
    pts.emplace_back(static_cast<float>(br.x), static_cast<float>(br.y));
    line.bbox = cv::boundingRect(pts) & cv::Rect(0, 0, dims.width, dims.height);
    const int margin = hx + 2;
    line.clippedLeft = line.bbox.x <= margin;
    line.clippedRight = line.bbox.x + line.bbox.width >= dims.width - margin;
    res.lines.push_back(std::move(line));
  }
  return res;
}

std::vector<LineRegion> cluster_text_lines(const std::vector<Point2>& corners, cv::Size dims,
                                           const TextLineConfig& cfg) {
  return analyze_text_lines(corners, dims, cfg).lines;
}

}  // namespace fingereye::page
