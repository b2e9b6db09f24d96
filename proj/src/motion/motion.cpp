#include "fingereye/motion/motion.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>

namespace fingereye::motion {

namespace {

double bilinear(const cv::Mat& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto at = [&](int xx, int yy) {
    xx = std::clamp(xx, 0, img.cols - 1);
    yy = std::clamp(yy, 0, img.rows - 1);
    return static_cast<double>(img.at<float>(yy, xx));
  };
  return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) + fy * ((1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
}

cv::Mat unit_float(const cv::Mat& image) {
  cv::Mat f;
  to_gray(image).convertTo(f, CV_32F, 1.0 / 255.0);
  return f;
}

struct Level {
  cv::Mat I, J, Ix, Iy;
};

// Solves the windowed constraint system around p for displacement d,
// starting from `guess`. Returns false on a singular normal matrix.
bool lk_point(const Level& L, Point2 p, Point2& d, const FlowConfig& cfg) {
  const int r = cfg.window / 2;
  const double n = static_cast<double>(cfg.window * cfg.window);
  double gxx = 0, gxy = 0, gyy = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double ix = bilinear(L.Ix, p.x + dx, p.y + dy), iy = bilinear(L.Iy, p.x + dx, p.y + dy);
      gxx += ix * ix, gxy += ix * iy, gyy += iy * iy;
    }
  }
  const double tr = 0.5 * (gxx + gyy);
  const double minEig = tr - std::sqrt(std::max(0.0, 0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy));
  if (minEig / n < cfg.minEigen) return false;
  const double det = gxx * gyy - gxy * gxy;
  for (int it = 0; it < cfg.iterations; ++it) {
    double bx = 0, by = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double x = p.x + dx, y = p.y + dy;
        const double diff = bilinear(L.I, x, y) - bilinear(L.J, x + d.x, y + d.y);
        bx += diff * bilinear(L.Ix, x, y);
        by += diff * bilinear(L.Iy, x, y);
      }
    }
    const double ux = (gyy * bx - gxy * by) / det, uy = (gxx * by - gxy * bx) / det;
    d.x += ux, d.y += uy;
    if (ux * ux + uy * uy < cfg.epsilon * cfg.epsilon) break;
  }
  return true;
}

Level make_level(const cv::Mat& I, const cv::Mat& J) {
  Level L{I, J, {}, {}};
  cv::Sobel(I, L.Ix, CV_32F, 1, 0, 3, 1.0 / 8.0);
  cv::Sobel(I, L.Iy, CV_32F, 0, 1, 3, 1.0 / 8.0);
  return L;
}

}  // namespace

std::vector<Point2> detect_features(const Frame& gray, int maxCount, const FeatureConfig& cfg) {
  if (maxCount < 1) throw Error(ErrorCode::InvalidArgument, "maxCount must be >= 1");
  std::vector<cv::Point2f> pts;
  cv::goodFeaturesToTrack(to_gray(gray.image), pts, maxCount, cfg.qualityLevel, cfg.minDistance, cv::noArray(),
                          cfg.blockSize);
  std::vector<Point2> out(pts.begin(), pts.end());
  return out;
}

FlowField track_flow(const Frame& prev, const Frame& next, const std::vector<Point2>& points, const FlowConfig& cfg,
                     double frameInterval) {
  if (prev.size() != next.size()) throw Error(ErrorCode::InvalidArgument, "frames differ in size");
  if (cfg.window < 3 || cfg.window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "window must be odd and >= 3");
  if (!(frameInterval > 0.0)) throw Error(ErrorCode::InvalidArgument, "frameInterval must be positive");
  FlowField flow;
  flow.frameInterval = frameInterval;

  std::vector<Level> pyramid;
  cv::Mat I = unit_float(prev.image), J = unit_float(next.image);
  pyramid.push_back(make_level(I, J));
  const int levels = cfg.pyramidal ? std::max(1, cfg.levels) : 1;
  for (int l = 1; l < levels && std::min(I.cols, I.rows) >= 16; ++l) {
    cv::pyrDown(I, I);
    cv::pyrDown(J, J);
    pyramid.push_back(make_level(I, J));
  }

  for (const Point2& p : points) {
    FlowPoint fp{p, p, false};
    Point2 d(0.0, 0.0);
    bool ok = true;
    for (int l = static_cast<int>(pyramid.size()) - 1; l >= 0; --l) {
      const double s = std::ldexp(1.0, -l);
      const bool good = lk_point(pyramid[l], Point2(p.x * s, p.y * s), d, cfg);
      if (l == 0) ok = good;
      if (l > 0) d *= 2.0;
    }
    const Point2 dst = p + d;
    if (ok && std::isfinite(dst.x) && std::isfinite(dst.y) && dst.x >= 0 && dst.y >= 0 && dst.x <= prev.width() - 1 &&
        dst.y <= prev.height() - 1) {
      fp.dst = dst;
      fp.tracked = true;
    }
    flow.points.push_back(fp);
  }
  return flow;
}

namespace {

struct Fit {
  cv::Matx22d A;
  cv::Vec2d b;
};

Fit fit_affine(const std::vector<const FlowPoint*>& pts) {
  double mx = 0, my = 0, nx = 0, ny = 0;
  for (auto* p : pts) mx += p->src.x, my += p->src.y, nx += p->dst.x, ny += p->dst.y;
  const double n = static_cast<double>(pts.size());
  mx /= n, my /= n, nx /= n, ny /= n;
  cv::Matx22d S = cv::Matx22d::zeros(), C = cv::Matx22d::zeros();
  for (auto* p : pts) {
    const cv::Vec2d u(p->src.x - mx, p->src.y - my), v(p->dst.x - nx, p->dst.y - ny);
    S += u * u.t();
    C += v * u.t();
  }
  const double scaleRef = S(0, 0) + S(1, 1);
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (scaleRef <= 0.0 || det <= 1e-12 * scaleRef * scaleRef)
    throw Error(ErrorCode::DegenerateGeometry, "tracked points are collinear");
  const cv::Matx22d A = C * S.inv();
  const cv::Vec2d b = cv::Vec2d(nx, ny) - A * cv::Vec2d(mx, my);
  return {A, b};
}

double residual(const Fit& f, const FlowPoint& p) {
  const cv::Vec2d r = f.A * cv::Vec2d(p.src.x, p.src.y) + f.b - cv::Vec2d(p.dst.x, p.dst.y);
  return std::hypot(r[0], r[1]);
}

}  // namespace

AffineMotion estimate_motion(const FlowField& flow, std::optional<double> mmPerPixel) {
  std::vector<const FlowPoint*> pts;
  for (const auto& p : flow.points)
    if (p.tracked) pts.push_back(&p);
  if (pts.size() < 3) throw Error(ErrorCode::InsufficientPoints, "fewer than three tracked points");
  Fit fit = fit_affine(pts);

  std::vector<double> res;
  double sum = 0, sum2 = 0;
  for (auto* p : pts) {
    const double r = residual(fit, *p);
    res.push_back(r);
    sum += r, sum2 += r * r;
  }
  const double mean = sum / pts.size();
  const double sigma = std::sqrt(std::max(0.0, sum2 / pts.size() - mean * mean));
  std::vector<const FlowPoint*> kept = pts;
  if (sigma > 1e-9) {
    kept.clear();
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (res[i] <= mean + 2.0 * sigma) kept.push_back(pts[i]);
    if (kept.size() >= 3 && kept.size() < pts.size()) {
      try {
        fit = fit_affine(kept);
      } catch (const Error&) {
        kept = pts;
      }
    } else {
      kept = pts;
    }
  }

  AffineMotion m;
  m.A = fit.A;
  m.b = fit.b;
  m.inlierCount = static_cast<int>(kept.size());
  double ss = 0;
  for (auto* p : kept) ss += std::pow(residual(fit, *p), 2);
  m.rmsResidual = std::sqrt(ss / kept.size());
  if (mmPerPixel) m.translationMmPerS = m.b * (*mmPerPixel / flow.frameInterval);
  return m;
}

double translation_rms(const FlowField& flow) {
  double tx = 0, ty = 0;
  int n = 0;
  for (const auto& p : flow.points)
    if (p.tracked) tx += p.dst.x - p.src.x, ty += p.dst.y - p.src.y, ++n;
  if (n == 0) return 0.0;
  tx /= n, ty /= n;
  double ss = 0;
  for (const auto& p : flow.points)
    if (p.tracked) ss += std::pow(p.dst.x - p.src.x - tx, 2) + std::pow(p.dst.y - p.src.y - ty, 2);
  return std::sqrt(ss / n);
}

}  // namespace fingereye::motion
