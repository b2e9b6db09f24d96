#pragma once

#include "fingereye/common.hpp"
#include "fingereye/page/fingertip.hpp"
#include "fingereye/page/text_lines.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace fingereye::feedback {

struct BaselineGeometry {
  double d1 = 0.0;  // baseline to upper text line
  double d2 = 0.0;  // baseline to lower text line
  double d3 = 0.0;  // baseline to fingertip
  bool aboveBaseline = false;
};

enum class CommandKind { None, Up, Down, NewLine, LineStart };

std::string_view to_string(CommandKind kind);
CommandKind command_kind_from_string(std::string_view name);

struct FeedbackCommand {
  CommandKind kind = CommandKind::None;
  double strength = 0.0;  // |s|, 0 for None/NewLine/LineStart
  double timestamp = 0.0;
};

struct DeadbandConfig {
  double epsilon = 0.15;
  double endZoneFraction = 0.08;
  void validate() const;
};

enum class LinePosition { Begin, Middle, End };
std::string_view to_string(LinePosition p);

/// Midpoint between the upper line's lower edge and the lower line's upper
/// edge. Throws OverlappingLines unless upper lies strictly above lower.
double compute_baseline(const page::LineRegion& upper, const page::LineRegion& lower);

/// Lower edge of the only visible line plus half the nominal pitch.
double compute_baseline(const page::LineRegion& only, double nominalPitchPx);

/// Distances for a tip at `tipY` given the line edges around the baseline.
BaselineGeometry baseline_geometry(double upperBottom, double lowerTop, double baselineY, double tipY);

/// s = (-1)^k d3 / (d3 + min(d1, d2)); positive (move down) when the tip is
/// above the baseline. Throws DegenerateGeometry when the denominator is 0.
double feedback_strength(const BaselineGeometry& g);

LinePosition classify_line_position(const page::FingertipEstimate& tip, const page::LineRegion& line,
                                    const DeadbandConfig& cfg = {});
/// Same on raw coordinates; `clippedLeft/Right` suppress the zone on a side
/// whose true endpoint is outside the view.
LinePosition classify_line_position(double tipX, double left, double right, const DeadbandConfig& cfg,
                                    bool clippedLeft = false, bool clippedRight = false);

/// Memoryless thresholding: deadband, sign rule, End overrides to NewLine.
FeedbackCommand command_from_state(double s, LinePosition position, const DeadbandConfig& cfg = {});

/// Per-session command state with hysteresis: an Up/Down command persists
/// until |s| drops below epsilon/2 and only switches direction once |s|
/// exceeds epsilon on the other side. LineStart is emitted at Begin after a
/// NewLine.
class FeedbackEvaluator {
 public:
  explicit FeedbackEvaluator(DeadbandConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  FeedbackCommand update(double s, LinePosition position, double t);
  /// Frame without usable geometry: keeps nothing latched.
  FeedbackCommand idle(double t);
  void reset();

  CommandKind active() const { return active_; }
  const DeadbandConfig& config() const { return cfg_; }

 private:
  DeadbandConfig cfg_;
  CommandKind active_ = CommandKind::None;
  bool newLinePending_ = false;
};

/// One command-log line: {t, kind, strength, d1, d2, d3, tipX, tipY}.
struct CommandRecord {
  double t = 0.0;
  CommandKind kind = CommandKind::None;
  double strength = 0.0;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double tipX = 0.0, tipY = 0.0;
};

std::string to_jsonl(const CommandRecord& r);
CommandRecord command_record_from_json(std::string_view line);

}  // namespace fingereye::feedback
