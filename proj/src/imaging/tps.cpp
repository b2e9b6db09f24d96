#include "fingereye/imaging/tps.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <numbers>

namespace fingereye::imaging {

double tps_kernel(double r) {
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r);
}

Point2 TpsWarp::operator()(Point2 p) const {
  double x = affinePart(0, 0) * p.x + affinePart(0, 1) * p.y + affinePart(0, 2);
  double y = affinePart(1, 0) * p.x + affinePart(1, 1) * p.y + affinePart(1, 2);
  for (size_t i = 0; i < controlPoints.size(); ++i) {
    const double u = tps_kernel(cv::norm(p - controlPoints[i].src));
    x += weights[i][0] * u;
    y += weights[i][1] * u;
  }
  return {x, y};
}

double TpsWarp::bending_energy() const {
  double e = 0.0;
  for (size_t i = 0; i < controlPoints.size(); ++i) {
    for (size_t j = 0; j < controlPoints.size(); ++j) {
      const double k = tps_kernel(cv::norm(controlPoints[i].src - controlPoints[j].src));
      e += k * (weights[i][0] * weights[j][0] + weights[i][1] * weights[j][1]);
    }
  }
  return 8.0 * std::numbers::pi * e;
}

double TpsWarp::side_condition_residual() const {
  cv::Vec2d sum{0, 0}, sx{0, 0}, sy{0, 0};
  for (size_t i = 0; i < controlPoints.size(); ++i) {
    sum += weights[i];
    sx += weights[i] * controlPoints[i].src.x;
    sy += weights[i] * controlPoints[i].src.y;
  }
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    worst = std::max({worst, std::abs(sum[c]), std::abs(sx[c]), std::abs(sy[c])});
  }
  return worst;
}

TpsWarp fit_tps(const std::vector<ControlPair>& pairs, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  const int n = static_cast<int>(pairs.size());
  if (n < 3) throw Error(ErrorCode::DegenerateConfiguration, "need at least three control points");

  // Collinearity test on the centered source scatter.
  Point2 mean{0, 0};
  double scale = 0.0;
  for (const auto& p : pairs) mean += p.src;
  mean *= 1.0 / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pairs) {
    const Point2 d = p.src - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
    scale = std::max(scale, std::abs(d.x) + std::abs(d.y));
  }
  const double det = sxx * syy - sxy * sxy;
  if (scale == 0.0 || det <= 1e-12 * (sxx + syy) * (sxx + syy)) {
    throw Error(ErrorCode::DegenerateConfiguration, "control points are collinear");
  }

  // [K + 8 pi lambda I  P] [w]   [y]
  // [P^T               0] [a] = [0]
  // Solved in centered coordinates for conditioning; the affine part is
  // shifted back afterwards.
  const int m = n + 3;
  cv::Mat L = cv::Mat::zeros(m, m, CV_64F);
  cv::Mat rhs = cv::Mat::zeros(m, 2, CV_64F);
  const double reg = 8.0 * std::numbers::pi * lambda;
  for (int i = 0; i < n; ++i) {
    const Point2 pi = pairs[i].src - mean;
    for (int j = 0; j < n; ++j) {
      L.at<double>(i, j) = tps_kernel(cv::norm(pairs[i].src - pairs[j].src));
    }
    L.at<double>(i, i) += reg;
    L.at<double>(i, n) = L.at<double>(n, i) = 1.0;
    L.at<double>(i, n + 1) = L.at<double>(n + 1, i) = pi.x;
    L.at<double>(i, n + 2) = L.at<double>(n + 2, i) = pi.y;
    rhs.at<double>(i, 0) = pairs[i].dst.x;
    rhs.at<double>(i, 1) = pairs[i].dst.y;
  }
  cv::Mat sol;
  if (!cv::solve(L, rhs, sol, cv::DECOMP_LU)) {
    if (!cv::solve(L, rhs, sol, cv::DECOMP_SVD)) {
      throw Error(ErrorCode::DegenerateConfiguration, "singular TPS system");
    }
  }

  TpsWarp warp;
  warp.lambda = lambda;
  warp.controlPoints = pairs;
  warp.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    warp.weights[i] = {sol.at<double>(i, 0), sol.at<double>(i, 1)};
  }
  for (int c = 0; c < 2; ++c) {
    const double a0 = sol.at<double>(n, c);
    const double ax = sol.at<double>(n + 1, c);
    const double ay = sol.at<double>(n + 2, c);
    warp.affinePart(c, 0) = ax;
    warp.affinePart(c, 1) = ay;
    warp.affinePart(c, 2) = a0 - ax * mean.x - ay * mean.y;
  }
  return warp;
}

Frame apply_tps(const TpsWarp& warp, const Frame& frame, double background) {
  if (frame.empty()) throw Error(ErrorCode::InvalidArgument, "empty frame");
  cv::Mat mapX(frame.size(), CV_32FC1), mapY(frame.size(), CV_32FC1);
  for (int y = 0; y < frame.height(); ++y) {
    auto* mx = mapX.ptr<float>(y);
    auto* my = mapY.ptr<float>(y);
    for (int x = 0; x < frame.width(); ++x) {
      const Point2 q = warp({static_cast<double>(x), static_cast<double>(y)});
      mx[x] = static_cast<float>(q.x);
      my[x] = static_cast<float>(q.y);
    }
  }
  Frame out;
  out.timestamp = frame.timestamp;
  cv::remap(frame.image, out.image, mapX, mapY, cv::INTER_LINEAR, cv::BORDER_CONSTANT,
            cv::Scalar::all(background));
  return out;
}

}  // namespace fingereye::imaging
