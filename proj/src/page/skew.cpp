#include "fingereye/page/skew.hpp"

#include "fingereye/page/fingertip.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fingereye::page {

namespace {

struct EdgePoint {
  double x, y;
};

// Direction angle of the line through the points, by total least squares.
double fit_angle(const std::vector<EdgePoint>& pts) {
  double mx = 0, my = 0;
  for (const auto& p : pts) mx += p.x, my += p.y;
  mx /= pts.size(), my /= pts.size();
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    const double dx = p.x - mx, dy = p.y - my;
    sxx += dx * dx, syy += dy * dy, sxy += dx * dy;
  }
  // Principal axis (ux, uy); screen y grows downward.
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return -phi;
}

}  // namespace

double detect_skew(const Frame& frame, const SkewConfig& cfg) { return detect_skew(frame, cfg, nullptr); }

double detect_skew(const Frame& frame, const SkewConfig& cfg, std::vector<SkewSegment>* segmentsOut) {
  if (frame.empty()) throw Error(ErrorCode::InvalidArgument, "detect_skew on empty frame");
  if (!(cfg.sampleFraction > 0.0 && cfg.sampleFraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "sampleFraction must be in (0, 1]");
  const cv::Mat gray = to_gray(frame.image);
  const cv::Mat ink = binarize_ink(gray);
  if (ink.empty() || cv::countNonZero(ink) == 0) throw Error(ErrorCode::NoLinesFound, "no ink in frame");

  const int W = gray.cols, H = gray.rows;
  const int bridge = std::max(9, W / 24);
  cv::Mat bands;
  cv::morphologyEx(ink, bands, cv::MORPH_CLOSE, cv::getStructuringElement(cv::MORPH_RECT, {bridge, 1}));

  // Upper and lower band boundaries.
  std::vector<EdgePoint> edges;
  for (int y = 0; y < H; ++y) {
    const uchar* row = bands.ptr<uchar>(y);
    const uchar* up = y > 0 ? bands.ptr<uchar>(y - 1) : nullptr;
    const uchar* down = y + 1 < H ? bands.ptr<uchar>(y + 1) : nullptr;
    for (int x = 0; x < W; ++x) {
      if (!row[x]) continue;
      if ((up && !up[x]) || (down && !down[x])) edges.push_back({double(x), double(y)});
    }
  }

  const double minLen = cfg.minSegmentFraction * W;
  const double maxGap = cfg.maxGapFraction * W;
  const int nTheta = static_cast<int>(std::floor(2.0 * cfg.maxAngle / cfg.angleStep)) + 1;
  const double diag = std::hypot(W, H);
  const int nRho = static_cast<int>(std::ceil(2.0 * diag / cfg.rhoStep)) + 1;
  std::vector<double> cosT(nTheta), sinT(nTheta);
  for (int i = 0; i < nTheta; ++i) {
    // Normal of a line with direction angle a (screen coordinates) is
    // (sin a, cos a): rho = x sin a + y cos a.
    const double a = -cfg.maxAngle + i * cfg.angleStep;
    cosT[i] = std::cos(a);
    sinT[i] = std::sin(a);
  }
  auto rho_bin = [&](const EdgePoint& p, int t) {
    return static_cast<int>(std::lround((p.x * sinT[t] + p.y * cosT[t] + diag) / cfg.rhoStep));
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> sample(edges.size());
  std::iota(sample.begin(), sample.end(), 0);
  std::shuffle(sample.begin(), sample.end(), rng);
  sample.resize(static_cast<std::size_t>(std::ceil(cfg.sampleFraction * edges.size())));

  cv::Mat acc(nTheta, nRho, CV_32S, cv::Scalar(0));
  for (std::size_t idx : sample)
    for (int t = 0; t < nTheta; ++t) ++acc.at<int>(t, rho_bin(edges[idx], t));
  std::vector<char> voting(sample.size(), 1);

  const int minVotes = std::max(3, static_cast<int>(0.5 * cfg.sampleFraction * minLen));
  std::vector<SkewSegment> segments;
  for (int peak = 0; peak < cfg.maxPeaks; ++peak) {
    double maxVal;
    cv::Point loc;
    cv::minMaxLoc(acc, nullptr, &maxVal, nullptr, &loc);
    if (maxVal < minVotes) break;
    const int t = loc.y;
    const double rho = loc.x * cfg.rhoStep - diag;
    const double nx = sinT[t], ny = cosT[t];
    const double ux = cosT[t], uy = -sinT[t];

    std::vector<std::pair<double, EdgePoint>> on;
    for (const auto& p : edges)
      if (std::abs(p.x * nx + p.y * ny - rho) <= cfg.lineTolerance) on.push_back({p.x * ux + p.y * uy, p});
    std::sort(on.begin(), on.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    std::size_t start = 0;
    for (std::size_t i = 1; i <= on.size(); ++i) {
      if (i < on.size() && on[i].first - on[i - 1].first <= maxGap) continue;
      if (i > start && on[i - 1].first - on[start].first >= minLen) {
        std::vector<EdgePoint> pts;
        for (std::size_t k = start; k < i; ++k) pts.push_back(on[k].second);
        segments.push_back({Point2(on[start].second.x, on[start].second.y),
                            Point2(on[i - 1].second.x, on[i - 1].second.y), fit_angle(pts)});
      }
      start = i;
    }

    // Withdraw the votes of sampled points explained by this peak.
    for (std::size_t s = 0; s < sample.size(); ++s) {
      if (!voting[s]) continue;
      const auto& p = edges[sample[s]];
      if (std::abs(p.x * nx + p.y * ny - rho) > cfg.lineTolerance) continue;
      voting[s] = 0;
      for (int tt = 0; tt < nTheta; ++tt) --acc.at<int>(tt, rho_bin(p, tt));
    }
    acc.at<int>(loc) = 0;
  }

  if (segmentsOut) *segmentsOut = segments;
  if (segments.size() < 2) throw Error(ErrorCode::NoLinesFound, "fewer than two text segments");
  std::vector<double> angles;
  for (const auto& s : segments) angles.push_back(s.angle);
  std::sort(angles.begin(), angles.end());
  const std::size_t m = angles.size() / 2;
  return angles.size() % 2 ? angles[m] : 0.5 * (angles[m - 1] + angles[m]);
}

cv::Matx23d deskew_transform(cv::Size size, double angle) {
  const cv::Point2f center((size.width - 1) * 0.5f, (size.height - 1) * 0.5f);
  return cv::Matx23d(cv::getRotationMatrix2D(center, -angle * 180.0 / CV_PI, 1.0));
}

Frame deskew(const Frame& frame, double angle, double background) {
  if (std::abs(angle) >= CV_PI / 2) throw Error(ErrorCode::InvalidArgument, "deskew angle out of range");
  if (angle == 0.0) return Frame(frame.image.clone(), frame.timestamp);
  cv::Mat out;
  cv::warpAffine(frame.image, out, cv::Mat(deskew_transform(frame.size(), angle)), frame.size(), cv::INTER_LINEAR,
                 cv::BORDER_CONSTANT, cv::Scalar::all(background));
  return Frame(out, frame.timestamp);
}

}  // namespace fingereye::page
