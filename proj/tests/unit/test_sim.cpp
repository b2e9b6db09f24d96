#include "fingereye/sim/experiment.hpp"

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace fingereye;
using namespace fingereye::sim;
using feedback::CommandKind;

namespace {

PageLayout small_layout() {
  PageLayout l;
  l.pageWidthMm = 100;
  l.pageHeightMm = 60;
  l.marginLeftMm = 10;
  l.marginTopMm = 10;
  l.text = {"a short line", "of plain words", "here"};
  return l;
}

TrajectoryLog make_log(std::vector<TrajectorySample> s) {
  TrajectoryLog log;
  log.samples = std::move(s);
  return log;
}

// Log A: one Up interval shown from t=1 to t=2.5, one Down that never clears in log B.
std::vector<TrajectoryLog> hand_logs() {
  const auto U = CommandKind::Up, D = CommandKind::Down, N = CommandKind::None;
  return {make_log({{0.0, 0.0, 0.0, N},
                    {0.5, 1.0, 1.0, N},
                    {1.0, 2.0, 3.0, U},
                    {1.5, 2.2, 3.2, U},
                    {2.0, 2.4, 2.8, U},
                    {2.5, 3.4, 1.0, N}}),
          make_log({{0.0, 0.0, 0.0, D}, {1.0, 1.0, -0.1, D}, {2.0, 2.0, 0.5, D}})};
}

ExperimentConfig geometric(int reps, bool feedbackOn) {
  ExperimentConfig cfg;
  cfg.mode = ExperimentMode::Geometric;
  cfg.repetitions = reps;
  cfg.feedbackOn = feedbackOn;
  return cfg;
}

}  // namespace

TEST(Page, RenderSizeAndInkBands) {
  const PageLayout l = small_layout();
  const double dpmm = 8;
  const Frame page = render_page(l, dpmm);
  ASSERT_EQ(page.width(), 800);
  ASSERT_EQ(page.height(), 480);
  ASSERT_EQ(page.image.type(), CV_8UC1);
  cv::Mat ink = page.image < 128;
  for (int i = 0; i < l.line_count(); ++i) {
    const int top = static_cast<int>(std::lround(l.line_top_mm(i) * dpmm));
    const int bottom = static_cast<int>(std::lround(l.line_bottom_mm(i) * dpmm));
    EXPECT_GT(cv::countNonZero(ink.rowRange(top, bottom)), 50) << i;
  }
  // Nothing between the bands or in the margins.
  const int gapTop = static_cast<int>(std::lround(l.line_bottom_mm(0) * dpmm)) + 2;
  const int gapBottom = static_cast<int>(std::lround(l.line_top_mm(1) * dpmm)) - 2;
  EXPECT_EQ(cv::countNonZero(ink.rowRange(gapTop, gapBottom)), 0);
  EXPECT_EQ(cv::countNonZero(ink.colRange(0, static_cast<int>(l.marginLeftMm * dpmm) - 1)), 0);
}

TEST(Page, WordBoxesMatchTextAndBands) {
  const PageLayout l = small_layout();
  const double dpmm = 8;
  const auto boxes = word_boxes(l, dpmm);
  ASSERT_EQ(boxes.size(), 7u);
  EXPECT_EQ(boxes[0].text, "a");
  EXPECT_EQ(boxes[6].text, "here");
  EXPECT_EQ(boxes[6].line, 2);
  const Frame page = render_page(l, dpmm);
  for (const auto& w : boxes) {
    EXPECT_NEAR(w.bbox.height, l.lineHeightMm * dpmm, 2.0) << w.text;
    EXPECT_NEAR(w.bbox.y, l.line_top_mm(w.line) * dpmm, 1.0) << w.text;
    cv::Mat crop = page.image(w.bbox) < 128;
    EXPECT_GT(cv::countNonZero(crop), 0);
  }
  EXPECT_NEAR(boxes[0].bbox.x, l.marginLeftMm * dpmm, 2.0);
  EXPECT_NEAR(boxes[2].bbox.br().x, (l.marginLeftMm + text_width_mm(l, l.text[0])) * dpmm, 3.0);
}

TEST(Page, OverflowRejected) {
  PageLayout l = small_layout();
  l.text = {std::string(200, 'w')};
  try {
    render_page(l, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TextOverflow);
  }
}

TEST(Page, FillerFitsWidth) {
  const PageLayout l = default_layout();
  const auto lines = filler_text(l, 5, 150);
  ASSERT_EQ(lines.size(), 5u);
  for (const auto& s : lines) {
    EXPECT_LE(text_width_mm(l, s), 150);
    EXPECT_GT(text_width_mm(l, s), 120);
  }
  EXPECT_NO_THROW(render_page(l, 4));
}

TEST(Camera, PinholeIsAPageCrop) {
  PageLayout l = small_layout();
  const double dpmm = 8;
  const Frame page = render_page(l, dpmm);
  CameraRig rig;
  rig.model.fisheye = false;
  rig.model.distortion = {0, 0, 0, 0};
  rig.model.intrinsics = {400, 400, 160, 120};
  rig.model.sensor = {320, 240};
  rig.heightMm = 400 / dpmm;  // one page pixel per camera pixel
  rig.aheadMm = 5;
  rig.drawDevice = false;
  const CameraSimulator cam(page, dpmm, rig);
  const FingerPose pose{40, 30, 0};
  const Frame f = cam.capture(pose, 0.0, 0);
  ASSERT_EQ(f.image.type(), CV_8UC3);
  cv::Mat gray;
  cv::cvtColor(f.image, gray, cv::COLOR_BGR2GRAY);
  const int x0 = static_cast<int>((pose.xMm) * dpmm) - 160;
  const int y0 = static_cast<int>((pose.yMm - rig.aheadMm) * dpmm) - 120;
  cv::Mat diff;
  cv::absdiff(gray, page.image(cv::Rect(x0, y0, 320, 240)), diff);
  double mx = 0;
  cv::minMaxLoc(diff, nullptr, &mx);
  EXPECT_LE(mx, 1.0);
}

TEST(Camera, DeviceWedgeAndApex) {
  const PageLayout l = default_layout();
  const CameraSimulator cam(render_page(l, 8), 8, CameraRig{});
  const Point2 apex = cam.apex_pixel();
  EXPECT_NEAR(apex.x, 320, 1e-9);
  EXPECT_GT(apex.y, 240);
  EXPECT_LT(apex.y, 480);
  const cv::Mat& m = cam.device_mask();
  EXPECT_EQ(m.at<uchar>(479, 320), 255);
  EXPECT_EQ(m.at<uchar>(static_cast<int>(apex.y) - 3, 320), 0);
  EXPECT_EQ(m.at<uchar>(100, 320), 0);
  const Frame f = cam.capture({60, l.baseline_mm(1), 0}, 0.0, 0);
  const cv::Vec3b c = f.image.at<cv::Vec3b>(470, 320);
  EXPECT_EQ(c, cv::Vec3b(190, 110, 40));
}

TEST(Camera, NoiseIsSeeded) {
  const PageLayout l = default_layout();
  const CameraSimulator cam(render_page(l, 8), 8, CameraRig{});
  const FingerPose pose{60, l.baseline_mm(1), 0};
  const Frame a = cam.capture(pose, 0.02, 11), b = cam.capture(pose, 0.02, 11), c = cam.capture(pose, 0.02, 12);
  EXPECT_EQ(cv::norm(a.image, b.image, cv::NORM_INF), 0.0);
  EXPECT_GT(cv::norm(a.image, c.image, cv::NORM_INF), 0.0);
}

TEST(Finger, StraightLineWithoutDrift) {
  FingerModelParams p;
  p.driftBiasMmPerS = 0;
  p.driftSigmaMm = 0;
  p.backtrackProbability = 0;
  FingerState s = start_finger(p, 1);
  double lastX = 0;
  for (int i = 0; i < 1000; ++i) {
    step_finger(s, std::nullopt, p, 0.01);
    ASSERT_EQ(s.y, 0.0);
    ASSERT_GT(s.x, lastX);
    lastX = s.x;
  }
  EXPECT_NEAR(s.vx, s.scanSpeed, 0.01 * s.scanSpeed);
}

TEST(Finger, FollowsDownAfterDelay) {
  FingerModelParams p;
  p.driftBiasMmPerS = 0;
  p.driftSigmaMm = 0;
  FingerState s = start_finger(p, 3);
  for (int i = 0; i < 300; ++i) step_finger(s, std::nullopt, p, 0.01);
  double t = 0;
  while (s.phase != FingerPhase::Complying && t < 20) step_finger(s, CommandKind::Down, p, 0.01), t += 0.01;
  ASSERT_EQ(s.reactionDelays.size(), 1u);
  EXPECT_NEAR(t, s.reactionDelays[0], 0.011);
  const double y = s.y;
  step_finger(s, CommandKind::Down, p, 0.1);
  EXPECT_NEAR(s.y - y, p.correctionSpeedMmPerS * 0.1, 1e-12);
  EXPECT_LT(s.vx, s.scanSpeed * 0.5);
}

TEST(Finger, DistributionsMatchParameters) {
  FingerModelParams p;
  std::mt19937_64 rng(99);
  std::vector<double> r(20000), c(20000);
  for (auto& v : r) v = sample_reaction_delay(rng, p);
  for (auto& v : c) v = sample_compliance(rng, p);
  std::nth_element(r.begin(), r.begin() + 10000, r.end());
  EXPECT_NEAR(r[10000], p.reactionMedianS, 0.02 * p.reactionMedianS);
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0) / c.size(), p.complianceMeanS, 0.02 * p.complianceMeanS);
}

TEST(Finger, ParamsJson) {
  const FingerModelParams p = FingerModelParams::calibrated();
  const FingerModelParams q = FingerModelParams::from_json(p.to_json());
  EXPECT_EQ(q.to_json().dump(), p.to_json().dump());
  EXPECT_THROW(FingerModelParams::parse(R"({"bogus":1})"), Error);
  EXPECT_THROW(FingerModelParams::parse(R"({"reactionMedianS":-1})"), Error);
  EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Metrics, HandComputedReport) {
  MetricsConfig cfg;
  cfg.speedWindowS = 1.0;
  const MetricsReport r = compute_metrics(hand_logs(), cfg);
  EXPECT_EQ(r.runs, 2);
  EXPECT_EQ(r.samples, 9);
  const double ys[] = {0, 1, 3, 3.2, 2.8, 1, 0, -0.1, 0.5};
  const double mean = 11.4 / 9;
  double ss = 0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  EXPECT_NEAR(r.meanOffsetMm, mean, 1e-12);
  EXPECT_NEAR(r.stdOffsetMm, std::sqrt(ss / 9), 1e-12);
  EXPECT_NEAR(r.containment2mmFraction, 6.0 / 9, 1e-12);
  EXPECT_DOUBLE_EQ(r.maxAbsEnvelopeMm, 3.2);
  EXPECT_NEAR(r.meanEndDriftMm, 0.75, 1e-12);
  ASSERT_EQ(r.runSpeedsMmPerS.size(), 2u);
  EXPECT_NEAR(r.runSpeedsMmPerS[0], 3.4 / 2.5, 1e-12);
  EXPECT_NEAR(r.runSpeedsMmPerS[1], 1.0, 1e-12);
  EXPECT_NEAR(r.avgSpeedMmPerS, 1.18, 1e-12);
  ASSERT_EQ(r.reactionTimes.size(), 2u);
  EXPECT_NEAR(r.reactionTimes[0], 1.0, 1e-12);
  EXPECT_NEAR(r.reactionTimes[1], 2.0, 1e-12);
  EXPECT_NEAR(r.medianReactionS, 1.5, 1e-12);
  ASSERT_EQ(r.complianceDurations.size(), 1u);
  EXPECT_NEAR(r.meanComplianceS, 1.5, 1e-12);
  EXPECT_EQ(r.commandBursts, 2);
  EXPECT_EQ(r.burstsFollowedBySpeedDrop, 1);
  EXPECT_EQ(r.envelopeXMm, (std::vector<double>{0.5, 1.5, 2.5, 3.5}));
  EXPECT_EQ(r.maxEnvelopeMm, (std::vector<double>{0, 1, 3.2, 1}));
  EXPECT_EQ(r.minEnvelopeMm, (std::vector<double>{0, -0.1, 0.5, 1}));
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics({}), Error);
  EXPECT_THROW(compute_metrics({TrajectoryLog{}}), Error);
  EXPECT_THROW(compute_metrics({make_log({{1, 0, 0, CommandKind::None}, {1, 1, 0, CommandKind::None}})}), Error);
}

TEST(Metrics, ReportJsonRoundTrip) {
  const MetricsReport r = compute_metrics(hand_logs());
  EXPECT_EQ(MetricsReport::from_json(r.to_json()).to_json().dump(), r.to_json().dump());
  EXPECT_THROW(MetricsReport::from_json(nlohmann::json::object()), Error);
}

TEST(Logs, CsvRoundTripGivesIdenticalReport) {
  const auto res = run_experiment(geometric(3, true));
  std::stringstream csv;
  write_trajectory_csv(csv, res.logs);
  const auto back = read_trajectory_csv(csv);
  ASSERT_EQ(back.size(), res.logs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back[i].samples.size(), res.logs[i].samples.size());
    for (std::size_t k = 0; k < back[i].samples.size(); ++k) {
      ASSERT_EQ(back[i].samples[k].t, res.logs[i].samples[k].t);
      ASSERT_EQ(back[i].samples[k].yMm, res.logs[i].samples[k].yMm);
      ASSERT_EQ(back[i].samples[k].commandActive, res.logs[i].samples[k].commandActive);
    }
  }
  EXPECT_EQ(compute_metrics(back).to_json().dump(), compute_metrics(res.logs).to_json().dump());
}

TEST(Logs, JsonlRoundTrip) {
  const auto res = run_experiment(geometric(1, true));
  std::stringstream s;
  write_trajectory_jsonl(s, res.logs[0]);
  const std::string text = s.str();
  EXPECT_EQ(text.rfind("{\"meta\":", 0), 0u);
  const TrajectoryLog back = read_trajectory_jsonl(s);
  EXPECT_EQ(back.metadata.dump(), res.logs[0].metadata.dump());
  std::stringstream again;
  write_trajectory_jsonl(again, back);
  EXPECT_EQ(again.str(), text);
  std::stringstream bad("{\"t\":0,\"x\":0}\n");
  EXPECT_THROW(read_trajectory_jsonl(bad), Error);
}

TEST(Experiment, GeometricIsDeterministic) {
  const auto a = run_experiment(geometric(4, true)), b = run_experiment(geometric(4, true));
  std::stringstream sa, sb;
  write_trajectory_csv(sa, a.logs);
  write_trajectory_csv(sb, b.logs);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.reactionDelays, b.reactionDelays);
}

TEST(Experiment, VisionRunIsDeterministic) {
  ExperimentConfig cfg;
  cfg.repetitions = 1;
  cfg.lineLengthMm = 40;
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  std::stringstream sa, sb;
  write_trajectory_jsonl(sa, a.logs[0]);
  write_trajectory_jsonl(sb, b.logs[0]);
  EXPECT_EQ(sa.str(), sb.str());
  ASSERT_EQ(a.commands[0].size(), b.commands[0].size());
  for (std::size_t i = 0; i < a.commands[0].size(); ++i)
    EXPECT_EQ(feedback::to_jsonl(a.commands[0][i]), feedback::to_jsonl(b.commands[0][i]));
  EXPECT_GT(a.framesProcessed, 5);
}

TEST(Experiment, ClosedLoopSlowerPerSeed) {
  const auto open = compute_metrics(run_experiment(geometric(6, false)).logs);
  const auto closed = compute_metrics(run_experiment(geometric(6, true)).logs);
  ASSERT_EQ(open.runSpeedsMmPerS.size(), closed.runSpeedsMmPerS.size());
  for (std::size_t i = 0; i < open.runSpeedsMmPerS.size(); ++i)
    EXPECT_LT(closed.runSpeedsMmPerS[i], open.runSpeedsMmPerS[i]) << i;
  EXPECT_EQ(open.commandBursts, 0);
  EXPECT_GT(closed.containment2mmFraction, open.containment2mmFraction);
}

TEST(Experiment, LineSelectionCyclesInsideThePage) {
  const ExperimentConfig cfg;
  for (int rep = 0; rep < 40; ++rep) {
    const int line = experiment_line(cfg, rep);
    EXPECT_GE(line, cfg.firstLine);
    EXPECT_LT(line, cfg.layout.line_count() - 1);
  }
}

TEST(Experiment, ConfigValidation) {
  ExperimentConfig cfg;
  cfg.repetitions = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ExperimentConfig{};
  cfg.frameRateHz = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ExperimentConfig{};
  nlohmann::json j = {{"repetitions", 3}, {"noiseSigma", 0.02}};
  cfg.merge_json(j);
  EXPECT_EQ(cfg.repetitions, 3);
  EXPECT_EQ(cfg.noiseSigma, 0.02);
}
