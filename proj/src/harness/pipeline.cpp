#include "fingereye/harness/pipeline.hpp"

#include "fingereye/harness/debug_dump.hpp"
#include "fingereye/page/skew.hpp"
#include "fingereye/page/word.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fingereye::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Gap {
  double baseline;
  const page::LineRegion* upper;
  const page::LineRegion* lower;
};

}  // namespace

bool Diagnostics::has_error(ErrorCode code) const {
  return std::find(errors.begin(), errors.end(), std::string(to_string(code))) != errors.end();
}

nlohmann::ordered_json Diagnostics::to_json() const {
  nlohmann::ordered_json j;
  j["errors"] = errors;
  j["fingertipFound"] = fingertipFound;
  if (fingertipFound) j["tip"] = {tip.x, tip.y};
  j["lineCount"] = lineCount;
  j["blockAngle"] = blockAngle;
  if (baselineY) j["baselineY"] = *baselineY;
  if (strength) j["s"] = *strength;
  if (!position.empty()) j["position"] = position;
  if (!word.empty()) {
    j["word"] = word;
    j["ocrConfidence"] = ocrConfidence;
  }
  if (wordBox) j["wordBox"] = {wordBox->x, wordBox->y, wordBox->width, wordBox->height};
  if (motion) {
    j["motionB"] = {motion->b[0], motion->b[1]};
    j["motionInliers"] = motion->inlierCount;
  }
  j["voltageV"] = voltageV;
  j["currentuA"] = currentuA;
  return j;
}

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)), ocr_(page::make_ocr_engine(cfg_.ocrEngine)), evaluator_(cfg_.deadband),
      stim_(cfg_.stimulation) {
  cfg_.validate();
  if (!cfg_.cameraPath.empty()) cfg_.camera = imaging::CameraModel::load(cfg_.cameraPath);
  if (cfg_.undistort && cfg_.camera.fisheye)
    grid_ = imaging::RemapGrid(cfg_.camera.intrinsics, cfg_.camera.distortion, cfg_.camera.sensor);
}

void Pipeline::reset() {
  evaluator_.reset();
  trackedBaseline_.reset();
  trackedHalfGap_ = 0.0;
  queue_.clear();
  lastWord_.clear();
  stim_ = cfg_.stimulation;
  prevGray_.release();
  features_.clear();
  framesSinceDetect_ = 0;
}

std::vector<ebraille::BrailleCell> Pipeline::enqueue_word(const std::string& word) {
  std::vector<ebraille::BrailleCell> added;
  if (word.empty() || word == lastWord_) return added;
  lastWord_ = word;
  if (!queue_.empty()) added.push_back({});
  for (char32_t cp : ebraille::utf8_decode(word)) {
    try {
      added.push_back(ebraille::encode_char(cp, cfg_.dialect));
    } catch (const Error&) {
      // Characters outside the dialect are skipped.
    }
  }
  queue_.insert(queue_.end(), added.begin(), added.end());
  return added;
}

StepResult Pipeline::idle(double t, Diagnostics diag) {
  StepResult r;
  r.command = evaluator_.idle(t);
  const Point2 tip = diag.tip;
  return finish(r, std::move(diag), {}, tip.x, tip.y);
}

StepResult Pipeline::decide(const FeedbackInput& in, Diagnostics diag) {
  StepResult r;
  const auto g = feedback::baseline_geometry(in.upperBottom, in.lowerTop, in.baselineY, in.tipY);
  double s = 0.0;
  try {
    s = feedback::feedback_strength(g);
  } catch (const Error& e) {
    diag.errors.emplace_back(to_string(e.code()));
    r.command = evaluator_.idle(in.t);
    return finish(r, std::move(diag), {}, in.tipX, in.tipY);
  }
  feedback::LinePosition pos = feedback::LinePosition::Middle;
  if (in.lineRight > in.lineLeft)
    pos = feedback::classify_line_position(in.tipX, in.lineLeft, in.lineRight, cfg_.deadband, in.clippedLeft,
                                           in.clippedRight);
  diag.strength = s;
  diag.position = std::string(feedback::to_string(pos));
  diag.baselineY = in.baselineY;
  r.command = evaluator_.update(s, pos, in.t);
  return finish(r, std::move(diag), g, in.tipX, in.tipY);
}

StepResult Pipeline::finish(StepResult r, Diagnostics diag, const feedback::BaselineGeometry& g, double tipX,
                            double tipY) {
  using feedback::CommandKind;
  ebraille::BrailleCell cell;
  const bool commandShown =
      r.command.kind == CommandKind::Up || r.command.kind == CommandKind::Down || r.command.kind == CommandKind::NewLine;
  if (!commandShown && !queue_.empty()) {
    cell = queue_.front();
    queue_.pop_front();
  }
  r.frame = ebraille::compose_frame(cell, r.command);

  const double measured = stim_.voltageV / cfg_.skinLoadMOhm;
  stim_ = ebraille::regulate_current(measured, stim_);
  diag.currentuA = measured;
  diag.voltageV = stim_.voltageV;

  r.record = {r.command.timestamp, r.command.kind, r.command.strength, g.d1, g.d2, g.d3, tipX, tipY};
  r.diagnostics = std::move(diag);
  return r;
}

void Pipeline::track_motion(const cv::Mat& gray, double t, Diagnostics& diag, motion::FlowField* flowOut) {
  static_cast<void>(t);
  const Frame cur(gray);
  if (!prevGray_.empty() && !features_.empty() && prevGray_.size() == gray.size()) {
    auto flow = motion::track_flow(Frame(prevGray_), cur, features_, cfg_.flow, 1.0 / cfg_.frameRateHz);
    try {
      diag.motion = motion::estimate_motion(flow, cfg_.mmPerPixel);
    } catch (const Error& e) {
      diag.errors.emplace_back(to_string(e.code()));
    }
    features_.clear();
    for (const auto& p : flow.points)
      if (p.tracked) features_.push_back(p.dst);
    if (flowOut) *flowOut = std::move(flow);
  }
  ++framesSinceDetect_;
  if (features_.empty() || framesSinceDetect_ >= cfg_.redetectEvery ||
      static_cast<int>(features_.size()) < cfg_.maxFeatures / 2) {
    features_ = motion::detect_features(cur, cfg_.maxFeatures);
    framesSinceDetect_ = 0;
  }
  prevGray_ = gray.clone();
}

StepResult Pipeline::step(const Frame& raw) {
  const auto t0 = Clock::now();
  const double t = raw.timestamp;
  const int index = frameIndex_++;
  Diagnostics diag;
  if (raw.empty()) {
    diag.errors.emplace_back(to_string(ErrorCode::InvalidArgument));
    return idle(t, std::move(diag));
  }

  auto mark = Clock::now();
  Frame rect = raw;
  if (cfg_.undistort && !grid_.empty() && raw.size() == grid_.size()) rect = imaging::undistort_image(raw, grid_);
  if (rect.image.channels() == 1) {
    cv::Mat bgr;
    cv::cvtColor(rect.image, bgr, cv::COLOR_GRAY2BGR);
    rect.image = bgr;
  }
  cv::Mat gray = to_gray(rect.image);
  if (cfg_.deblur) {
    const auto res = imaging::blind_deconvolve(Frame(gray), cfg_.deconv);
    gray = res.image.image;
  }
  diag.times.rectifyMs = ms_since(mark);

  DebugFrame dbg;
  dbg.rectified = &rect;
  dbg.diagnostics = &diag;
  auto dump = [&](StepResult r) {
    diag.times.totalMs = ms_since(t0);
    r.diagnostics.times = diag.times;
    if (cfg_.debugDump && !cfg_.debugDir.empty()) {
      dbg.diagnostics = &r.diagnostics;
      write_debug_dump(cfg_.debugDir, index, dbg);
    }
    return r;
  };

  mark = Clock::now();
  page::FingertipEstimate tip;
  const cv::Mat lab = page::to_lab(rect);
  try {
    tip = page::detect_fingertip_lab(lab, cfg_.fingertip);
  } catch (const Error& e) {
    diag.errors.emplace_back(to_string(e.code()));
  }
  diag.times.fingertipMs = ms_since(mark);
  dbg.tip = &tip;
  if (!tip.deviceMask.empty()) {
    diag.fingertipFound = true;
    diag.tip = tip.position;
  }

  motion::FlowField flow;
  if (cfg_.trackMotion) {
    mark = Clock::now();
    track_motion(gray, t, diag, &flow);
    dbg.flow = &flow;
    diag.times.motionMs = ms_since(mark);
  }

  mark = Clock::now();
  const cv::Mat mask = page::page_mask_lab(lab, tip.deviceMask);
  const auto corners = page::detect_corners(Frame(gray), mask, cfg_.lines.fastThreshold);
  const auto tl = page::analyze_text_lines(corners, gray.size(), cfg_.lines);
  diag.times.linesMs = ms_since(mark);
  dbg.corners = &corners;
  dbg.lines = &tl.lines;
  diag.lineCount = static_cast<int>(tl.lines.size());
  diag.blockAngle = tl.blockAngle;
  if (tl.lines.empty()) diag.errors.emplace_back(to_string(ErrorCode::NoLinesFound));
  if (tl.lines.empty() || tip.deviceMask.empty()) return dump(idle(t, std::move(diag)));

  // Geometry in the deskewed frame.
  const cv::Matx23d R = page::deskew_transform(gray.size(), tl.blockAngle);
  const Point2 tipD = R * cv::Vec3d(tip.position.x, tip.position.y, 1.0);
  const double pitch = tl.pitchPx > 0 ? tl.pitchPx : cfg_.lines.nominalPitchPx;
  std::vector<Gap> gaps;
  for (std::size_t i = 0; i + 1 < tl.lines.size(); ++i) {
    const auto& a = tl.lines[i].deskewed;
    const auto& b = tl.lines[i + 1].deskewed;
    if (a.bottom < b.top) gaps.push_back({0.5 * (a.bottom + b.top), &tl.lines[i], &tl.lines[i + 1]});
  }
  const double reference = trackedBaseline_.value_or(tipD.y);
  FeedbackInput in;
  in.t = t;
  in.tipX = tipD.x;
  in.tipY = tipD.y;
  const page::LineRegion* reading = nullptr;
  const Gap* best = nullptr;
  if (!gaps.empty())
    best = &*std::min_element(gaps.begin(), gaps.end(), [&](const Gap& a, const Gap& b) {
      return std::abs(a.baseline - reference) < std::abs(b.baseline - reference);
    });
  const bool tracking = trackedBaseline_.has_value() && trackedHalfGap_ > 0;
  if (best && (!tracking || std::abs(best->baseline - reference) <= 0.5 * pitch)) {
    in.baselineY = best->baseline;
    in.upperBottom = best->upper->deskewed.bottom;
    in.lowerTop = best->lower->deskewed.top;
    reading = best->upper;
  } else if (tracking) {
    // The tracked gap is not among the detected ones: hold its last position.
    in.baselineY = reference;
    in.upperBottom = reference - trackedHalfGap_;
    in.lowerTop = reference + trackedHalfGap_;
    reading = &*std::min_element(tl.lines.begin(), tl.lines.end(), [&](const page::LineRegion& a,
                                                                       const page::LineRegion& b) {
      return std::abs(a.deskewed.bottom - in.upperBottom) < std::abs(b.deskewed.bottom - in.upperBottom);
    });
  } else {
    // One usable line: baseline half a pitch below its lower edge.
    const auto& only = tl.lines.front().deskewed;
    in.baselineY = only.bottom + 0.5 * pitch;
    in.upperBottom = only.bottom;
    in.lowerTop = in.baselineY + (in.baselineY - only.bottom);
    reading = &tl.lines.front();
  }
  trackedHalfGap_ = 0.5 * (in.lowerTop - in.upperBottom);
  trackedBaseline_ = in.baselineY;
  in.lineLeft = reading->deskewed.left;
  in.lineRight = reading->deskewed.right;
  in.clippedLeft = reading->clippedLeft;
  in.clippedRight = reading->clippedRight;

  // Word recognition only while the tip sits inside the deadband.
  const auto g = feedback::baseline_geometry(in.upperBottom, in.lowerTop, in.baselineY, in.tipY);
  double sNow = 1.0;
  try {
    sNow = feedback::feedback_strength(g);
  } catch (const Error&) {
  }
  std::vector<ebraille::BrailleCell> queued;
  if (cfg_.recognize && std::abs(sNow) <= cfg_.deadband.epsilon) {
    try {
      mark = Clock::now();
      const auto crop = page::extract_focused_word(tl.lines, tip, Frame(gray), tl.blobs);
      diag.wordBox = crop.bbox;
      diag.times.wordMs = ms_since(mark);
      mark = Clock::now();
      const auto ocr = page::recognize_word(crop, *ocr_);
      diag.times.ocrMs = ms_since(mark);
      diag.word = ocr.text;
      diag.ocrConfidence = ocr.confidence;
      queued = enqueue_word(ocr.text);
    } catch (const Error& e) {
      diag.errors.emplace_back(to_string(e.code()));
    }
  }

  StepResult r = decide(in, std::move(diag));
  r.queued = std::move(queued);
  return dump(std::move(r));
}

StepResult pipeline_step(const Frame& frame, Pipeline& pipeline) { return pipeline.step(frame); }

}  // namespace fingereye::harness
