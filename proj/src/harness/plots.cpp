#include "fingereye/harness/logs.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fingereye::harness {

namespace fs = std::filesystem;

namespace {

constexpr int kW = 800, kH = 400, kMargin = 50;

struct Axes {
  double x0, x1, y0, y1;
  cv::Point map(double x, double y) const {
    const double u = (x - x0) / std::max(1e-12, x1 - x0);
    const double v = (y - y0) / std::max(1e-12, y1 - y0);
    return {kMargin + static_cast<int>(std::lround(u * (kW - 2 * kMargin))),
            kH - kMargin - static_cast<int>(std::lround(v * (kH - 2 * kMargin)))};
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

cv::Mat canvas(const Axes& ax, const std::string& title, const std::string& xLabel, const std::string& yLabel) {
  cv::Mat img(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  const cv::Scalar axis(60, 60, 60);
  cv::rectangle(img, ax.map(ax.x0, ax.y0), ax.map(ax.x1, ax.y1), axis, 1);
  cv::putText(img, title, {kMargin, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.6, axis, 1, cv::LINE_AA);
  cv::putText(img, xLabel, {kW / 2 - 40, kH - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1, cv::LINE_AA);
  cv::putText(img, yLabel, {4, kMargin - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.45, axis, 1, cv::LINE_AA);
  for (int i = 0; i <= 4; ++i) {
    const double x = ax.x0 + (ax.x1 - ax.x0) * i / 4.0;
    const double y = ax.y0 + (ax.y1 - ax.y0) * i / 4.0;
    cv::putText(img, fmt(x), ax.map(x, ax.y0) + cv::Point(-10, 16), cv::FONT_HERSHEY_SIMPLEX, 0.35, axis, 1,
                cv::LINE_AA);
    cv::putText(img, fmt(y), ax.map(ax.x0, y) + cv::Point(-44, 4), cv::FONT_HERSHEY_SIMPLEX, 0.35, axis, 1,
                cv::LINE_AA);
  }
  return img;
}

void polyline(cv::Mat& img, const Axes& ax, const std::vector<double>& xs, const std::vector<double>& ys,
              cv::Scalar color) {
  std::vector<cv::Point> pts;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) pts.push_back(ax.map(xs[i], ys[i]));
  if (pts.size() >= 2) cv::polylines(img, pts, false, color, 1, cv::LINE_AA);
}

fs::path save(const fs::path& dir, const char* name, const cv::Mat& img) {
  const fs::path p = dir / name;
  if (!cv::imwrite(p.string(), img)) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
  return p;
}

}  // namespace

std::vector<fs::path> write_plots(const fs::path& dir, const std::vector<sim::TrajectoryLog>& logs,
                                  const sim::MetricsReport& report) {
  ensure_dir(dir);
  std::vector<fs::path> out;
  double xMax = 1.0, yAbs = 2.5, tMax = 1.0;
  for (const auto& log : logs)
    for (const auto& s : log.samples) {
      xMax = std::max(xMax, s.xMm);
      yAbs = std::max(yAbs, std::abs(s.yMm));
      tMax = std::max(tMax, s.t);
    }
  yAbs = std::ceil(yAbs);

  {
    Axes ax{0, xMax, -yAbs, yAbs};
    cv::Mat img = canvas(ax, "offset envelope", "x (mm)", "y (mm)");
    for (double band : {-2.0, 2.0})
      cv::line(img, ax.map(0, band), ax.map(xMax, band), cv::Scalar(180, 180, 180), 1);
    for (const auto& log : logs) {
      std::vector<double> xs, ys;
      for (const auto& s : log.samples) {
        xs.push_back(s.xMm);
        ys.push_back(s.yMm);
      }
      polyline(img, ax, xs, ys, cv::Scalar(200, 170, 140));
    }
    polyline(img, ax, report.envelopeXMm, report.maxEnvelopeMm, cv::Scalar(40, 40, 200));
    polyline(img, ax, report.envelopeXMm, report.minEnvelopeMm, cv::Scalar(200, 40, 40));
    out.push_back(save(dir, "envelope.png", img));
  }

  {
    const int bins = 40;
    std::vector<int> counts(bins, 0);
    for (const auto& log : logs)
      for (const auto& s : log.samples) {
        const int b = static_cast<int>((s.yMm + yAbs) / (2 * yAbs) * bins);
        ++counts[std::clamp(b, 0, bins - 1)];
      }
    const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
    Axes ax{-yAbs, yAbs, 0, static_cast<double>(peak)};
    cv::Mat img = canvas(ax, "offset histogram", "y (mm)", "samples");
    for (int b = 0; b < bins; ++b) {
      const double lo = -yAbs + 2 * yAbs * b / bins, hi = -yAbs + 2 * yAbs * (b + 1) / bins;
      cv::rectangle(img, ax.map(lo, 0), ax.map(hi, counts[b]), cv::Scalar(160, 110, 60), cv::FILLED);
    }
    out.push_back(save(dir, "histogram.png", img));
  }

  if (!logs.empty()) {
    const auto& log = logs.front();
    const auto speed = sim::speed_profile(log, 0.5);
    std::vector<double> ts;
    for (const auto& s : log.samples) ts.push_back(s.t);
    const double vMax = std::max(1.0, *std::max_element(speed.begin(), speed.end()));
    const double tEnd = ts.empty() ? 1.0 : std::max(1.0, ts.back());
    Axes ax{0, tEnd, 0, vMax};
    cv::Mat img = canvas(ax, "speed profile (run 0)", "t (s)", "mm/s");
    for (const auto& s : log.samples)
      if (s.commandActive != feedback::CommandKind::None)
        cv::line(img, ax.map(s.t, 0), ax.map(s.t, vMax * 0.05), cv::Scalar(40, 40, 200), 1);
    polyline(img, ax, ts, speed, cv::Scalar(60, 60, 60));
    out.push_back(save(dir, "speed.png", img));
  }

  {
    const double rows = std::max<std::size_t>(1, logs.size());
    Axes ax{0, tMax, 0, rows};
    cv::Mat img = canvas(ax, "command raster", "t (s)", "run");
    for (std::size_t r = 0; r < logs.size(); ++r)
      for (const auto& s : logs[r].samples) {
        if (s.commandActive == feedback::CommandKind::None) continue;
        const cv::Scalar c = s.commandActive == feedback::CommandKind::Up     ? cv::Scalar(200, 40, 40)
                             : s.commandActive == feedback::CommandKind::Down ? cv::Scalar(40, 40, 200)
                                                                             : cv::Scalar(40, 160, 40);
        cv::line(img, ax.map(s.t, r + 0.15), ax.map(s.t, r + 0.85), c, 1);
      }
    out.push_back(save(dir, "commands.png", img));
  }
  return out;
}

}  // namespace fingereye::harness
