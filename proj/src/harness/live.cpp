#include "fingereye/harness/live.hpp"

#include <opencv2/imgcodecs.hpp>

#include <cmath>

namespace fingereye::harness {

using feedback::CommandKind;

std::string_view to_string(SessionMode m) {
  return m == SessionMode::LivePointer ? "LivePointer" : "SimulatedFinger";
}

PointerSample parse_pointer_sample(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed sample: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "sample must be an object");
  PointerSample s;
  for (const char* key : {"t", "x", "y"}) {
    if (!j.contains(key) || !j[key].is_number()) throw Error(ErrorCode::ParseError, std::string("sample needs numeric ") + key);
  }
  s.t = j["t"].get<double>();
  s.xMm = j["x"].get<double>();
  s.yMm = j["y"].get<double>();
  if (!std::isfinite(s.t) || !std::isfinite(s.xMm) || !std::isfinite(s.yMm))
    throw Error(ErrorCode::ParseError, "sample values must be finite");
  return s;
}

nlohmann::ordered_json command_message(const StepResult& r) {
  nlohmann::ordered_json j;
  j["t"] = r.command.timestamp;
  j["kind"] = feedback::to_string(r.command.kind);
  j["strength"] = r.command.strength;
  j["dots16"] = r.frame.dots16;
  return j;
}

nlohmann::ordered_json page_geometry_message(const sim::PageLayout& layout, double dpmm) {
  nlohmann::ordered_json j;
  j["linePitchMm"] = layout.linePitchMm;
  j["lineHeightMm"] = layout.lineHeightMm;
  j["pageWidthMm"] = layout.pageWidthMm;
  j["pageHeightMm"] = layout.pageHeightMm;
  j["dpmm"] = dpmm;
  auto lines = nlohmann::ordered_json::array();
  for (int i = 0; i < layout.line_count(); ++i) {
    nlohmann::ordered_json l;
    l["index"] = i;
    l["text"] = layout.text[i];
    l["leftMm"] = layout.marginLeftMm;
    l["rightMm"] = layout.marginLeftMm + sim::text_width_mm(layout, layout.text[i]);
    l["topMm"] = layout.line_top_mm(i);
    l["bottomMm"] = layout.line_bottom_mm(i);
    l["baselineMm"] = layout.baseline_mm(i);
    lines.push_back(l);
  }
  j["lines"] = lines;
  return j;
}

LivePointerSession::LivePointerSession(std::string id, const PipelineConfig& cfg, sim::PageLayout layout,
                                       double pageDpmm, std::filesystem::path logDir)
    : id_(std::move(id)), pipeline_(cfg), layout_(std::move(layout)), dpmm_(pageDpmm) {
  layout_.validate();
  if (layout_.line_count() < 2) throw Error(ErrorCode::InvalidArgument, "page needs at least two lines");
  if (!(dpmm_ > 0)) throw Error(ErrorCode::InvalidArgument, "page scale must be > 0");
  words_ = sim::word_boxes(layout_, dpmm_);
  for (const auto& text : layout_.text) lineRightMm_.push_back(layout_.marginLeftMm + sim::text_width_mm(layout_, text));
  trajLog_ = JsonlLog(logDir / (id_ + "_trajectory.jsonl"));
  cmdLog_ = JsonlLog(logDir / (id_ + "_commands.jsonl"));
  trajectory_.lineLengthMm = lineRightMm_.front() - layout_.marginLeftMm;
  trajectory_.metadata = {{"sessionId", id_},
                          {"mode", to_string(SessionMode::LivePointer)},
                          {"pageDpmm", dpmm_},
                          {"pipeline", cfg.to_json()}};
  trajLog_.append(sim::trajectory_meta_jsonl(trajectory_.metadata, trajectory_.lineLengthMm));
}

const std::vector<unsigned char>& LivePointerSession::page_png() {
  if (png_.empty()) cv::imencode(".png", sim::render_page(layout_, dpmm_).image, png_);
  return png_;
}

int LivePointerSession::nearest_line(double yMm) const {
  int best = 0;
  for (int i = 1; i + 1 < layout_.line_count(); ++i)
    if (std::abs(layout_.baseline_mm(i) - yMm) < std::abs(layout_.baseline_mm(best) - yMm)) best = i;
  return best;
}

std::optional<StepResult> LivePointerSession::on_sample(const PointerSample& s) {
  if (closed_) throw Error(ErrorCode::InvalidArgument, "session is closed");
  if (!trajectory_.samples.empty() && !(s.t > trajectory_.samples.back().t))
    throw Error(ErrorCode::InvalidArgument, "sample time must increase");

  const double left = layout_.marginLeftMm;
  if (line_ < 0) line_ = nearest_line(s.yMm);
  if (awaitingLineStart_ && s.xMm < left + pipeline_.config().deadband.endZoneFraction * trajectory_.lineLengthMm) {
    line_ = nearest_line(s.yMm);
    awaitingLineStart_ = false;
  }

  std::optional<StepResult> out;
  const double period = 1.0 / pipeline_.config().frameRateHz;
  if (!lastEmit_ || s.t + 1e-9 >= *lastEmit_ + period) {
    lastEmit_ = s.t;
    FeedbackInput in;
    in.t = s.t;
    in.tipX = s.xMm;
    in.tipY = s.yMm;
    in.upperBottom = layout_.line_bottom_mm(line_);
    in.lowerTop = layout_.line_top_mm(line_ + 1);
    in.baselineY = layout_.baseline_mm(line_);
    in.lineLeft = left;
    in.lineRight = lineRightMm_[line_];
    Diagnostics diag;
    diag.fingertipFound = true;
    diag.tip = {s.xMm, s.yMm};
    diag.lineCount = layout_.line_count();
    const auto g = feedback::baseline_geometry(in.upperBottom, in.lowerTop, in.baselineY, in.tipY);
    if (std::abs(feedback::feedback_strength(g)) <= pipeline_.config().deadband.epsilon) {
      // Word on the tracked line above the pointer.
      const double px = s.xMm * dpmm_;
      for (const auto& w : words_)
        if (w.line == line_ && px >= w.bbox.x && px < w.bbox.x + w.bbox.width) {
          diag.word = w.text;
          diag.ocrConfidence = 1.0;
          break;
        }
    }
    const std::string word = diag.word;
    if (!word.empty()) pipeline_.enqueue_word(word);
    StepResult r = pipeline_.decide(in, std::move(diag));
    if (r.command.kind == CommandKind::NewLine) awaitingLineStart_ = true;
    shown_ = (r.command.kind == CommandKind::Up || r.command.kind == CommandKind::Down) ? r.command.kind
                                                                                      : CommandKind::None;
    cmdLog_.append(feedback::to_jsonl(r.record));
    out = std::move(r);
  }

  sim::TrajectorySample ts{s.t, s.xMm - left, s.yMm - layout_.baseline_mm(line_), shown_};
  trajectory_.samples.push_back(ts);
  trajLog_.append(sim::trajectory_sample_jsonl(ts));
  return out;
}

sim::MetricsReport LivePointerSession::close() {
  closed_ = true;
  trajLog_.close();
  cmdLog_.close();
  if (trajectory_.samples.empty()) return {};
  return sim::compute_metrics({trajectory_});
}

}  // namespace fingereye::harness
