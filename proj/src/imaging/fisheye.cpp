#include "fingereye/imaging/fisheye.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fingereye::imaging {

namespace {

double polynomial(double theta, const FisheyeDistortion& d) {
  const double t2 = theta * theta;
  return 1.0 + t2 * (d.k1 + t2 * (d.k2 + t2 * (d.k3 + t2 * d.k4)));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void CameraIntrinsics::validate(cv::Size sensor) const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (cx < 0.0 || cy < 0.0 || cx > sensor.width || cy > sensor.height) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the sensor");
  }
}

void FisheyeDistortion::validate() const {
  if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3) || !std::isfinite(k4)) {
    throw Error(ErrorCode::InvalidArgument, "distortion coefficients must be finite");
  }
}

void RigidPose::validate() const {
  const cv::Matx33d should_be_eye = R.t() * R;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(should_be_eye(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal");
      }
    }
  }
  if (std::abs(cv::determinant(R) - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "rotation determinant is not +1");
  }
}

CameraModel CameraModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open calibration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

CameraModel CameraModel::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find(':');
    if (sep == std::string::npos) {
      throw Error(ErrorCode::ParseError, "calibration line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, sep))] = trim(line.substr(sep + 1));
  }

  auto number = [&](const std::string& key, double fallback, bool required) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw Error(ErrorCode::ParseError, "calibration key missing: " + key);
      return fallback;
    }
    try {
      size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "calibration key " + key + " is not a number");
    }
  };

  CameraModel m;
  m.intrinsics.fx = number("fx", 0, true);
  m.intrinsics.fy = number("fy", 0, true);
  m.intrinsics.cx = number("cx", 0, true);
  m.intrinsics.cy = number("cy", 0, true);
  m.distortion.k1 = number("k1", 0, false);
  m.distortion.k2 = number("k2", 0, false);
  m.distortion.k3 = number("k3", 0, false);
  m.distortion.k4 = number("k4", 0, false);
  m.sensor.width = static_cast<int>(number("width", 0, true));
  m.sensor.height = static_cast<int>(number("height", 0, true));
  if (const auto it = kv.find("model"); it != kv.end()) {
    if (it->second == "pinhole") {
      m.fisheye = false;
    } else if (it->second != "fisheye") {
      throw Error(ErrorCode::ParseError, "unknown camera model " + it->second);
    }
  }
  if (m.sensor.width <= 0 || m.sensor.height <= 0) {
    throw Error(ErrorCode::ParseError, "sensor size must be positive");
  }
  m.intrinsics.validate(m.sensor);
  m.distortion.validate();
  return m;
}

std::string CameraModel::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "# finger camera calibration\n"
      << "model = " << (fisheye ? "fisheye" : "pinhole") << "\n"
      << "fx = " << intrinsics.fx << "\nfy = " << intrinsics.fy << "\n"
      << "cx = " << intrinsics.cx << "\ncy = " << intrinsics.cy << "\n"
      << "k1 = " << distortion.k1 << "\nk2 = " << distortion.k2 << "\n"
      << "k3 = " << distortion.k3 << "\nk4 = " << distortion.k4 << "\n"
      << "width = " << sensor.width << "\nheight = " << sensor.height << "\n";
  return out.str();
}

double distortion_scale(double r, const FisheyeDistortion& dist) {
  // theta / r: atan(r)/r, with its Taylor series near the axis.
  double theta_over_r;
  double theta;
  if (r < 1e-3) {
    const double r2 = r * r;
    theta_over_r = 1.0 - r2 / 3.0 + r2 * r2 / 5.0 - r2 * r2 * r2 / 7.0;
    theta = r * theta_over_r;
  } else {
    theta = std::atan(r);
    theta_over_r = theta / r;
  }
  return theta_over_r * polynomial(theta, dist);
}

Point2 distort_normalized(Point2 p, const FisheyeDistortion& dist) {
  const double scale = distortion_scale(std::hypot(p.x, p.y), dist);
  return {p.x * scale, p.y * scale};
}

Point2 undistort_normalized(Point2 p, const FisheyeDistortion& dist) {
  const double theta_d = std::hypot(p.x, p.y);
  if (theta_d == 0.0) return p;

  // Solve theta * poly(theta) = theta_d on [0, pi/2).
  auto g = [&](double t) { return t * polynomial(t, dist); };
  auto dg = [&](double t) {
    const double t2 = t * t;
    return 1.0 + t2 * (3.0 * dist.k1 + t2 * (5.0 * dist.k2 + t2 * (7.0 * dist.k3 + t2 * 9.0 * dist.k4)));
  };
  const double max_theta = 1.5;
  double theta = std::min(theta_d, max_theta);
  for (int i = 0; i < 30; ++i) {
    const double slope = dg(theta);
    if (slope <= 1e-12) break;
    const double step = (g(theta) - theta_d) / slope;
    theta = std::clamp(theta - step, 0.0, max_theta);
    if (std::abs(step) < 1e-14) break;
  }
  const double r = std::tan(theta);
  return {p.x * r / theta_d, p.y * r / theta_d};
}

Point2 project_fisheye(const cv::Vec3d& worldPoint, const RigidPose& pose,
                       const CameraIntrinsics& intr, const FisheyeDistortion& dist) {
  const cv::Vec3d c = pose.R * worldPoint + pose.T;
  if (!(c[2] > 0.0)) {
    throw Error(ErrorCode::PointBehindCamera, "point is not in front of the camera");
  }
  const Point2 d = distort_normalized({c[0] / c[2], c[1] / c[2]}, dist);
  return {intr.fx * d.x + intr.cx, intr.fy * d.y + intr.cy};
}

RemapGrid::RemapGrid(const CameraIntrinsics& intr, const FisheyeDistortion& dist, cv::Size outputSize)
    : mapX_(outputSize, CV_32FC1), mapY_(outputSize, CV_32FC1) {
  for (int v = 0; v < outputSize.height; ++v) {
    auto* mx = mapX_.ptr<float>(v);
    auto* my = mapY_.ptr<float>(v);
    const double yn = (v - intr.cy) / intr.fy;
    for (int u = 0; u < outputSize.width; ++u) {
      const double xn = (u - intr.cx) / intr.fx;
      const double s = distortion_scale(std::hypot(xn, yn), dist);
      mx[u] = static_cast<float>(intr.fx * s * xn + intr.cx);
      my[u] = static_cast<float>(intr.fy * s * yn + intr.cy);
    }
  }
}

Frame undistort_image(const Frame& frame, const RemapGrid& grid, double background) {
  if (frame.empty()) throw Error(ErrorCode::InvalidArgument, "empty frame");
  Frame out;
  out.timestamp = frame.timestamp;
  cv::remap(frame.image, out.image, grid.map_x(), grid.map_y(), cv::INTER_LINEAR,
            cv::BORDER_CONSTANT, cv::Scalar::all(background));
  return out;
}

Frame undistort_image(const Frame& frame, const CameraIntrinsics& intr,
                      const FisheyeDistortion& dist, double background) {
  if (frame.empty()) throw Error(ErrorCode::InvalidArgument, "empty frame");
  return undistort_image(frame, RemapGrid(intr, dist, frame.size()), background);
}

}  // namespace fingereye::imaging
