#include "fingereye/imaging/deconvolution.hpp"
#include "fingereye/imaging/fisheye.hpp"
#include "fingereye/imaging/tps.hpp"
#include "fingereye/font.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <random>

using namespace fingereye;
using namespace fingereye::imaging;
using namespace testing_support;

namespace {

// Forward-distorts a pinhole raster: raw(u) = pinhole(undistorted(u)).
cv::Mat distort_raster(const cv::Mat& pinhole, const CameraIntrinsics& in, const FisheyeDistortion& d) {
  cv::Mat mx(pinhole.size(), CV_32F), my(pinhole.size(), CV_32F);
  for (int v = 0; v < pinhole.rows; ++v)
    for (int u = 0; u < pinhole.cols; ++u) {
      const Point2 p = undistort_normalized({(u - in.cx) / in.fx, (v - in.cy) / in.fy}, d);
      mx.at<float>(v, u) = static_cast<float>(in.fx * p.x + in.cx);
      my.at<float>(v, u) = static_cast<float>(in.fy * p.y + in.cy);
    }
  cv::Mat out;
  cv::remap(pinhole, out, mx, my, cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar(255));
  return out;
}


}  // namespace

TEST(Fisheye, OpticalAxisMapsToPrincipalPoint) {
  CameraIntrinsics in{410, 395, 300, 250};
  for (FisheyeDistortion d : {FisheyeDistortion{}, FisheyeDistortion{0.3, -0.1, 0.02, 0.001}}) {
    const Point2 p = project_fisheye({0, 0, 5}, RigidPose::identity(), in, d);
    EXPECT_DOUBLE_EQ(p.x, 300);
    EXPECT_DOUBLE_EQ(p.y, 250);
  }
}

TEST(Fisheye, ThetaMappingExample) {
  const Point2 p = project_fisheye({1, 0, 1}, RigidPose::identity(), {100, 100, 0, 0}, {});
  EXPECT_NEAR(p.x, 78.5398, 1e-4);
  EXPECT_NEAR(p.x, 100 * std::atan(1.0), 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
}

TEST(Fisheye, MatchesScalarOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    RigidPose pose;
    pose.R = rotation(0.2 * U(rng), 0.2 * U(rng), 0.5 * U(rng));
    pose.T = {U(rng), U(rng), 3 + U(rng)};
    const cv::Vec3d w(2 * U(rng), 2 * U(rng), U(rng));
    const cv::Vec3d c = pose.R * w + pose.T;
    CameraIntrinsics in{300 + 100 * U(rng), 300 + 100 * U(rng), 320 + 10 * U(rng), 240 + 10 * U(rng)};
    FisheyeDistortion d{0.1 * U(rng), 0.05 * U(rng), 0.01 * U(rng), 0.005 * U(rng)};
    const Point2 got = project_fisheye(w, pose, in, d);
    const Point2 want = scalar_fisheye(c[0], c[1], c[2], in.fx, in.fy, in.cx, in.cy, d.k1, d.k2, d.k3, d.k4);
    ASSERT_NEAR(got.x, want.x, 1e-9 * std::max(1.0, std::abs(want.x)));
    ASSERT_NEAR(got.y, want.y, 1e-9 * std::max(1.0, std::abs(want.y)));
  }
}

TEST(Fisheye, ZeroCoefficientsEqualThetaPinhole) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const cv::Vec3d w(U(rng), U(rng), 0.5 + std::abs(U(rng)));
    const double r = std::hypot(w[0] / w[2], w[1] / w[2]);
    const double s = r == 0 ? 1.0 : std::atan(r) / r;
    const Point2 p = project_fisheye(w, RigidPose::identity(), {200, 220, 10, 20}, {});
    ASSERT_NEAR(p.x, 200 * s * w[0] / w[2] + 10, 1e-9);
    ASSERT_NEAR(p.y, 220 * s * w[1] / w[2] + 20, 1e-9);
  }
}

TEST(Fisheye, PointBehindCameraThrows) {
  try {
    project_fisheye({0, 0, -1}, RigidPose::identity(), {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointBehindCamera);
  }
  EXPECT_THROW(project_fisheye({1, 1, 0}, RigidPose::identity(), {}, {}), Error);
}

TEST(Fisheye, SeriesLimitNearZeroRadius) {
  const FisheyeDistortion d{0.2, 0.1, 0, 0};
  EXPECT_DOUBLE_EQ(distortion_scale(0.0, d), 1.0);
  const double r = 1e-7;
  const double th = std::atan(r);
  EXPECT_NEAR(distortion_scale(r, d), th * (1 + 0.2 * th * th + 0.1 * std::pow(th, 4)) / r, 1e-12);
}

TEST(Fisheye, DistortUndistortRoundTrip) {
  const FisheyeDistortion d{0.08, 0.02, 0, 0};
  for (double x = -1.0; x <= 1.0; x += 0.1)
    for (double y = -0.8; y <= 0.8; y += 0.1) {
      const Point2 back = undistort_normalized(distort_normalized({x, y}, d), d);
      ASSERT_NEAR(back.x, x, 1e-9);
      ASSERT_NEAR(back.y, y, 1e-9);
    }
}

TEST(Fisheye, InvalidTypesRejected) {
  EXPECT_THROW((CameraIntrinsics{-1, 1, 1, 1}.validate({10, 10})), Error);
  EXPECT_THROW((CameraIntrinsics{1, 1, 20, 1}.validate({10, 10})), Error);
  EXPECT_THROW((FisheyeDistortion{NAN, 0, 0, 0}.validate()), Error);
  RigidPose p;
  p.R = cv::Matx33d(1, 0, 0, 0, 1, 0, 0, 0, -1);
  EXPECT_THROW(p.validate(), Error);
}

TEST(Fisheye, CalibrationFileRoundTrip) {
  CameraModel m;
  m.intrinsics = {410.5, 399.25, 321, 238};
  m.distortion = {0.08, 0.02, -0.001, 0.0004};
  const CameraModel back = CameraModel::parse(m.serialize());
  EXPECT_DOUBLE_EQ(back.intrinsics.fx, 410.5);
  EXPECT_DOUBLE_EQ(back.intrinsics.fy, 399.25);
  EXPECT_DOUBLE_EQ(back.distortion.k3, -0.001);
  EXPECT_EQ(back.sensor, m.sensor);
  EXPECT_TRUE(back.fisheye);
  EXPECT_THROW(CameraModel::parse("fx = banana\n"), Error);
}

TEST(Undistort, ZeroCoefficientsOnThetaRenderIsIdentity) {
  const CameraIntrinsics in{300, 300, 160, 120};
  cv::Mat img(240, 320, CV_8U);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x) img.at<uchar>(y, x) = cv::saturate_cast<uchar>(128 + 60 * std::sin(x / 9.0) * std::cos(y / 13.0));
  // A render through the theta mapping with zero coefficients, then rectified.
  const cv::Mat raw = distort_raster(img, in, {});
  const Frame out = undistort_image(Frame(raw), in, {});
  const cv::Rect inner(40, 30, 240, 180);
  cv::Mat diff;
  cv::absdiff(out.image(inner), img(inner), diff);
  double mx;
  cv::minMaxLoc(diff, nullptr, &mx);
  EXPECT_LE(mx, 1.0 + 1e-9);
}

TEST(Undistort, PrincipalPointFixed) {
  const CameraIntrinsics in{200, 200, 100, 80};
  cv::Mat img(161, 201, CV_8U, cv::Scalar(0));
  img.at<uchar>(80, 100) = 255;
  const Frame out = undistort_image(Frame(img), in, {0.1, 0.03, 0, 0}, 0.0);
  cv::Point loc;
  cv::minMaxLoc(out.image, nullptr, nullptr, nullptr, &loc);
  EXPECT_EQ(loc, cv::Point(100, 80));
  EXPECT_EQ(out.image.at<uchar>(80, 100), 255);
}

TEST(Undistort, RoundTripOnBandLimitedImage) {
  const CameraIntrinsics in{400, 400, 320, 240};
  const FisheyeDistortion d{0.08, 0.02, 0, 0};
  cv::Mat img(480, 640, CV_8U);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x)
      img.at<uchar>(y, x) = cv::saturate_cast<uchar>(128 + 50 * std::sin(x / 17.0) + 40 * std::cos(y / 23.0));
  const cv::Mat raw = distort_raster(img, in, d);
  const Frame out = undistort_image(Frame(raw), RemapGrid(in, d, img.size()));
  const cv::Rect inner(80, 60, 480, 360);
  EXPECT_LE(cv::norm(out.image(inner), img(inner), cv::NORM_L1) / inner.area(), 2.0);
}

TEST(Undistort, RectifiedRowsAreStraight) {
  const CameraIntrinsics in{400, 400, 320, 240};
  const FisheyeDistortion d{0.08, 0.02, 0, 0};
  cv::Mat board(480, 640, CV_8U, cv::Scalar(255));
  const int rows[] = {120, 200, 300, 380};
  for (int r : rows) cv::rectangle(board, {40, r - 2}, {600, r + 2}, cv::Scalar(0), cv::FILLED);
  const Frame out = undistort_image(Frame(distort_raster(board, in, d)), in, d);
  for (int r : rows) {
    double se = 0;
    int n = 0;
    for (int x = 120; x < 520; ++x) {
      double m = 0, w = 0;
      for (int y = r - 12; y <= r + 12; ++y) {
        const double ink = 255.0 - out.image.at<uchar>(y, x);
        m += ink * y;
        w += ink;
      }
      ASSERT_GT(w, 0);
      se += std::pow(m / w - r, 2);
      ++n;
    }
    EXPECT_LE(std::sqrt(se / n), 0.5) << "row " << r;
  }
}

TEST(Undistort, ColorFramesUseTheGrayPathPerChannel) {
  cv::Mat img(60, 80, CV_8UC3, cv::Scalar(10, 100, 200));
  const Frame out = undistort_image(Frame(img), {50, 50, 40, 30}, {0.1, 0, 0, 0});
  ASSERT_EQ(out.image.type(), CV_8UC3);
  EXPECT_EQ(out.image.at<cv::Vec3b>(30, 40), cv::Vec3b(10, 100, 200));
}

TEST(Tps, IdentityPairsGiveIdentityWarp) {
  const std::vector<ControlPair> pairs{{{0, 0}, {0, 0}}, {{10, 0}, {10, 0}}, {{0, 10}, {0, 10}}, {{7, 4}, {7, 4}}};
  for (double lambda : {0.0, 0.5, 100.0}) {
    const TpsWarp w = fit_tps(pairs, lambda);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(w.affinePart(i, j), i == j ? 1.0 : 0.0, 1e-10);
    for (const auto& v : w.weights) EXPECT_NEAR(cv::norm(v), 0.0, 1e-10);
  }
}

TEST(Tps, TranslationIsPureAffine) {
  std::vector<ControlPair> pairs;
  for (Point2 c : {Point2{0, 0}, Point2{100, 0}, Point2{0, 80}, Point2{100, 80}}) pairs.push_back({c, c + Point2(5, -3)});
  const TpsWarp w = fit_tps(pairs, 0.0);
  EXPECT_NEAR(w.affinePart(0, 2), 5.0, 1e-10);
  EXPECT_NEAR(w.affinePart(1, 2), -3.0, 1e-10);
  EXPECT_NEAR(w.affinePart(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(w.affinePart(1, 1), 1.0, 1e-10);
  for (const auto& v : w.weights) EXPECT_NEAR(cv::norm(v), 0.0, 1e-10);
  EXPECT_NEAR(w.bending_energy(), 0.0, 1e-10);
}

TEST(Tps, InterpolatesAtZeroLambdaAgainstDirectSolve) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 100), J(-4, 4);
  std::vector<ControlPair> pairs;
  for (int i = 0; i < 8; ++i) {
    const Point2 s(U(rng), U(rng));
    pairs.push_back({s, s + Point2(J(rng), J(rng))});
  }
  const TpsWarp w = fit_tps(pairs, 0.0);
  const int n = 8;
  const cv::Mat sol = tps_bordered_solve(pairs);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(w.weights[i][0], sol.at<double>(i, 0), 1e-8);
    EXPECT_NEAR(w.weights[i][1], sol.at<double>(i, 1), 1e-8);
    const Point2 f = w(pairs[i].src);
    EXPECT_NEAR(f.x, pairs[i].dst.x, 1e-8);
    EXPECT_NEAR(f.y, pairs[i].dst.y, 1e-8);
  }
  EXPECT_NEAR(w.affinePart(0, 2), sol.at<double>(n, 0), 1e-8);
  EXPECT_NEAR(w.affinePart(1, 0), sol.at<double>(n + 1, 1), 1e-8);
}

TEST(Tps, SideConditionsHoldForAnyLambda) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 50), J(-3, 3);
  for (double lambda : {0.0, 0.01, 1.0, 1e3}) {
    std::vector<ControlPair> pairs;
    for (int i = 0; i < 12; ++i) {
      const Point2 s(U(rng), U(rng));
      pairs.push_back({s, s + Point2(J(rng), J(rng))});
    }
    EXPECT_LE(fit_tps(pairs, lambda).side_condition_residual(), 1e-8) << lambda;
  }
}

TEST(Tps, LargeLambdaApproachesAffineFit) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 50), J(-1, 1);
  std::vector<ControlPair> pairs;
  for (int i = 0; i < 10; ++i) {
    const Point2 s(U(rng), U(rng));
    pairs.push_back({s, Point2(1.1 * s.x + 0.2 * s.y + 3, -0.1 * s.x + 0.9 * s.y - 2) + Point2(J(rng), J(rng))});
  }
  const double e0 = fit_tps(pairs, 0.0).bending_energy();
  const double e1 = fit_tps(pairs, 1.0).bending_energy();
  const TpsWarp w = fit_tps(pairs, 1e8);
  EXPECT_LT(e1, e0);
  EXPECT_LT(w.bending_energy(), 1e-6 * e0);
  EXPECT_NEAR(w.affinePart(0, 0), 1.1, 0.05);
  EXPECT_NEAR(w.affinePart(1, 1), 0.9, 0.05);
}

TEST(Tps, CollinearSourcesRejected) {
  const std::vector<ControlPair> pairs{{{0, 0}, {0, 0}}, {{1, 1}, {1, 2}}, {{2, 2}, {3, 2}}, {{5, 5}, {5, 1}}};
  try {
    fit_tps(pairs, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
  EXPECT_THROW(fit_tps({{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}}, 0.0), Error);
  EXPECT_THROW(fit_tps({{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}}, -1.0), Error);
}

TEST(Tps, ApplyIdentityIsExact) {
  cv::Mat img(50, 60, CV_8U);
  cv::randu(img, 0, 256);
  const TpsWarp w = fit_tps({{{0, 0}, {0, 0}}, {{50, 0}, {50, 0}}, {{0, 40}, {0, 40}}}, 0.0);
  const Frame out = apply_tps(w, Frame(img));
  EXPECT_EQ(cv::norm(out.image, img, cv::NORM_INF), 0.0);
}

TEST(Tps, ApplyTranslationMovesImpulseBackward) {
  std::vector<ControlPair> pairs;
  for (Point2 c : {Point2{0, 0}, Point2{60, 0}, Point2{0, 50}, Point2{60, 50}}) pairs.push_back({c, c + Point2(5, -3)});
  cv::Mat img(50, 60, CV_8U, cv::Scalar(0));
  img.at<uchar>(20, 30) = 255;
  const Frame out = apply_tps(fit_tps(pairs, 0.0), Frame(img), 0.0);
  cv::Point loc;
  cv::minMaxLoc(out.image, nullptr, nullptr, nullptr, &loc);
  EXPECT_EQ(loc, cv::Point(25, 23));
  EXPECT_EQ(out.image.at<uchar>(23, 25), 255);
}

TEST(Tps, FlattensCylindricalGrid) {
  // Page bent around a cylinder of radius R seen from above: x' = R sin(x/R),
  // plus a bulge in y that grows away from the crease.
  const double R = 140.0;
  auto bend = [&](Point2 p) {
    const double a = (p.x - 160) / R;
    return Point2(160 + R * std::sin(a), 120 + (p.y - 120) * (1.0 + 0.15 * (1 - std::cos(a))));
  };
  cv::Mat flat(240, 320, CV_8U, cv::Scalar(255));
  for (int x = 20; x <= 300; x += 40) cv::line(flat, {x, 0}, {x, 239}, cv::Scalar(0), 1);
  for (int y = 20; y <= 220; y += 40) cv::line(flat, {0, y}, {319, y}, cv::Scalar(0), 1);
  cv::Mat mx(flat.size(), CV_32F), my(flat.size(), CV_32F);
  // Curved render: invert the bend numerically per pixel.
  for (int v = 0; v < flat.rows; ++v)
    for (int u = 0; u < flat.cols; ++u) {
      const double s = std::clamp((u - 160) / R, -0.999, 0.999);
      const double a = std::asin(s);
      mx.at<float>(v, u) = static_cast<float>(160 + R * a);
      my.at<float>(v, u) = static_cast<float>(120 + (v - 120) / (1.0 + 0.15 * (1 - std::cos(a))));
    }
  cv::Mat curved;
  cv::remap(flat, curved, mx, my, cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar(255));

  std::vector<ControlPair> pairs;
  for (int x = 20; x <= 300; x += 40)
    for (int y = 20; y <= 220; y += 40) pairs.push_back({{double(x), double(y)}, bend({double(x), double(y)})});
  const Frame out = apply_tps(fit_tps(pairs, 0.0), Frame(curved));

  // Every interior horizontal grid line comes back straight.
  for (int y = 60; y <= 180; y += 40) {
    double se = 0;
    int n = 0;
    for (int x = 30; x < 290; ++x) {
      if ((x - 20) % 40 < 4 || (x - 20) % 40 > 36) continue;
      double m = 0, w = 0;
      for (int yy = y - 8; yy <= y + 8; ++yy) {
        const double ink = 255.0 - out.image.at<uchar>(yy, x);
        m += ink * yy;
        w += ink;
      }
      if (w <= 0) continue;
      se += std::pow(m / w - y, 2);
      ++n;
    }
    ASSERT_GT(n, 100);
    EXPECT_LE(std::sqrt(se / n), 1.0) << "line " << y;
  }
}

TEST(Deconvolution, PsfInvariants) {
  const Psf g = Psf::gaussian(5, 1.0);
  EXPECT_NEAR(cv::sum(g.kernel)[0], 1.0, 1e-12);
  EXPECT_NO_THROW(g.validate());
  Psf bad;
  bad.kernel = cv::Mat::ones(4, 4, CV_64F) / 16.0;
  EXPECT_THROW(bad.validate(), Error);
  bad.kernel = cv::Mat::ones(3, 3, CV_64F) / 8.0;
  EXPECT_THROW(bad.validate(), Error);
  DeconvConfig cfg;
  cfg.a = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.lambda = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Deconvolution, SharpInputWithDeltaStartIsFixedPoint) {
  cv::Mat x(48, 48, CV_8U, cv::Scalar(230));
  font::draw_text(x, "ab", {6, 10}, 4.0);
  DeconvConfig cfg;
  cfg.initialPsfSigma = 0.0;
  cfg.kernelSize = 5;
  const DeconvResult r = blind_deconvolve(Frame(x), cfg);
  EXPECT_LE(cv::norm(r.psf.kernel, Psf::delta(5).kernel, cv::NORM_INF), 1e-9);
  cv::Mat diff;
  cv::absdiff(r.image.image, x, diff);
  double mx;
  cv::minMaxLoc(diff, nullptr, &mx);
  EXPECT_LE(mx, 1.0);
}

TEST(Deconvolution, GaussianBlurRecoveryGainsPsnrMonotonically) {
  cv::Mat sharp(64, 64, CV_8U, cv::Scalar(235));
  font::draw_text(sharp, "fig", {4, 8}, 3.0);
  font::draw_text(sharp, "tip", {4, 36}, 3.0);
  cv::Mat x;
  sharp.convertTo(x, CV_64F, 1.0 / 255.0);
  const Psf truth = Psf::gaussian(5, 1.0);
  cv::Mat g = convolve_circular(x, truth);
  cv::Mat g8;
  g.convertTo(g8, CV_8U, 255.0);
  g8.convertTo(g, CV_64F, 1.0 / 255.0);

  DeconvConfig cfg;
  cfg.kernelSize = 5;
  const DeconvResult r = blind_deconvolve(Frame(g8), cfg);
  cv::Mat out;
  r.image.image.convertTo(out, CV_64F, 1.0 / 255.0);
  const double before = psnr(g, x), after = psnr(out, x);
  RecordProperty("psnr_before", std::to_string(before));
  RecordProperty("psnr_after", std::to_string(after));
  EXPECT_GE(after - before, 3.0) << before << " -> " << after;

  ASSERT_GE(r.objective.size(), 2u);
  for (std::size_t i = 1; i < r.objective.size(); ++i) EXPECT_LE(r.objective[i], r.objective[i - 1] * (1 + 1e-12));
  EXPECT_NEAR(cv::sum(r.psf.kernel)[0], 1.0, 1e-9);
  double mn;
  cv::minMaxLoc(r.psf.kernel, &mn);
  EXPECT_GE(mn, 0.0);
}

TEST(Deconvolution, ObjectiveNonIncreasingOnNoise) {
  cv::Mat img(32, 32, CV_8U);
  cv::RNG(4).fill(img, cv::RNG::UNIFORM, 0, 256);
  DeconvConfig cfg;
  cfg.maxIterations = 5;
  const DeconvResult r = blind_deconvolve(Frame(img), cfg);
  for (std::size_t i = 1; i < r.objective.size(); ++i) EXPECT_LE(r.objective[i], r.objective[i - 1] * (1 + 1e-12));
  EXPECT_LE(r.iterations, 5);
  EXPECT_NEAR(cv::sum(r.psf.kernel)[0], 1.0, 1e-9);
}
