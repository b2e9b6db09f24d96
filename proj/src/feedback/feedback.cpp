#include "fingereye/feedback/feedback.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace fingereye::feedback {

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::None: return "None";
    case CommandKind::Up: return "Up";
    case CommandKind::Down: return "Down";
    case CommandKind::NewLine: return "NewLine";
    case CommandKind::LineStart: return "LineStart";
  }
  return "None";
}

CommandKind command_kind_from_string(std::string_view name) {
  for (auto k : {CommandKind::None, CommandKind::Up, CommandKind::Down, CommandKind::NewLine, CommandKind::LineStart})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::ParseError, "unknown command kind: " + std::string(name));
}

std::string_view to_string(LinePosition p) {
  switch (p) {
    case LinePosition::Begin: return "Begin";
    case LinePosition::Middle: return "Middle";
    case LinePosition::End: return "End";
  }
  return "Middle";
}

void DeadbandConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be in [0, 1)");
  if (!(endZoneFraction > 0.0 && endZoneFraction < 0.5))
    throw Error(ErrorCode::InvalidArgument, "endZoneFraction must be in (0, 0.5)");
}

double compute_baseline(const page::LineRegion& upper, const page::LineRegion& lower) {
  const double upperBottom = upper.bbox.y + upper.bbox.height;
  const double lowerTop = lower.bbox.y;
  if (!(upperBottom < lowerTop)) throw Error(ErrorCode::OverlappingLines, "text lines overlap");
  return 0.5 * (upperBottom + lowerTop);
}

double compute_baseline(const page::LineRegion& only, double nominalPitchPx) {
  return only.bbox.y + only.bbox.height + 0.5 * nominalPitchPx;
}

BaselineGeometry baseline_geometry(double upperBottom, double lowerTop, double baselineY, double tipY) {
  BaselineGeometry g;
  g.d1 = std::max(0.0, baselineY - upperBottom);
  g.d2 = std::max(0.0, lowerTop - baselineY);
  g.d3 = std::abs(tipY - baselineY);
  g.aboveBaseline = tipY < baselineY;
  return g;
}

double feedback_strength(const BaselineGeometry& g) {
  const double denom = g.d3 + std::min(g.d1, g.d2);
  if (!(denom > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "d3 + min(d1, d2) is zero");
  const double s = g.d3 / denom;
  return g.aboveBaseline ? s : -s;
}

LinePosition classify_line_position(double tipX, double left, double right, const DeadbandConfig& cfg,
                                    bool clippedLeft, bool clippedRight) {
  const double width = right - left;
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate line width");
  const double zone = cfg.endZoneFraction * width;
  if (!clippedRight && right - tipX <= zone) return LinePosition::End;
  if (!clippedLeft && tipX - left <= zone) return LinePosition::Begin;
  return LinePosition::Middle;
}

LinePosition classify_line_position(const page::FingertipEstimate& tip, const page::LineRegion& line,
                                    const DeadbandConfig& cfg) {
  return classify_line_position(tip.position.x, line.bbox.x, line.bbox.x + line.bbox.width, cfg);
}

FeedbackCommand command_from_state(double s, LinePosition position, const DeadbandConfig& cfg) {
  if (std::abs(s) > 1.0) throw Error(ErrorCode::InvalidArgument, "|s| must not exceed 1");
  if (position == LinePosition::End) return {CommandKind::NewLine, 0.0, 0.0};
  if (std::abs(s) <= cfg.epsilon) return {CommandKind::None, 0.0, 0.0};
  return {s > 0 ? CommandKind::Down : CommandKind::Up, std::abs(s), 0.0};
}

FeedbackCommand FeedbackEvaluator::update(double s, LinePosition position, double t) {
  if (position == LinePosition::End) {
    active_ = CommandKind::None;
    newLinePending_ = true;
    return {CommandKind::NewLine, 0.0, t};
  }
  if (position == LinePosition::Begin && newLinePending_) {
    newLinePending_ = false;
    active_ = CommandKind::None;
    return {CommandKind::LineStart, 0.0, t};
  }
  const double mag = std::abs(s);
  const CommandKind wanted = s > 0 ? CommandKind::Down : CommandKind::Up;
  if (active_ == CommandKind::None) {
    if (mag > cfg_.epsilon) active_ = wanted;
  } else if (mag < cfg_.epsilon / 2.0) {
    active_ = CommandKind::None;
  } else if (wanted != active_) {
    // Opposite side: switch only past the full deadband, otherwise release.
    active_ = mag > cfg_.epsilon ? wanted : CommandKind::None;
  }
  if (active_ == CommandKind::None) return {CommandKind::None, 0.0, t};
  return {active_, mag, t};
}

FeedbackCommand FeedbackEvaluator::idle(double t) {
  active_ = CommandKind::None;
  return {CommandKind::None, 0.0, t};
}

void FeedbackEvaluator::reset() {
  active_ = CommandKind::None;
  newLinePending_ = false;
}

std::string to_jsonl(const CommandRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["kind"] = to_string(r.kind);
  j["strength"] = r.strength;
  j["d1"] = r.d1;
  j["d2"] = r.d2;
  j["d3"] = r.d3;
  j["tipX"] = r.tipX;
  j["tipY"] = r.tipY;
  return j.dump();
}

CommandRecord command_record_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    CommandRecord r;
    r.t = j.at("t").get<double>();
    r.kind = command_kind_from_string(j.at("kind").get<std::string>());
    r.strength = j.value("strength", 0.0);
    r.d1 = j.value("d1", 0.0);
    r.d2 = j.value("d2", 0.0);
    r.d3 = j.value("d3", 0.0);
    r.tipX = j.value("tipX", 0.0);
    r.tipY = j.value("tipY", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad command record: ") + e.what());
  }
}

}  // namespace fingereye::feedback
