#pragma once

#include "fingereye/harness/logs.hpp"
#include "fingereye/harness/pipeline.hpp"
#include "fingereye/sim/metrics.hpp"
#include "fingereye/sim/page.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fingereye::harness {

enum class SessionMode { SimulatedFinger, LivePointer };
std::string_view to_string(SessionMode m);

/// Pointer sample from the client, page millimetres.
struct PointerSample {
  double t = 0.0;
  double xMm = 0.0;
  double yMm = 0.0;
};

/// Parses {"t":s,"x":mm,"y":mm}. Throws ParseError on anything else.
PointerSample parse_pointer_sample(std::string_view text);

/// Server message {"t","kind","strength","dots16"}.
nlohmann::ordered_json command_message(const StepResult& r);

/// {"linePitchMm","lineHeightMm","lines":[...]} plus the page size and the
/// raster scale of page.png.
nlohmann::ordered_json page_geometry_message(const sim::PageLayout& layout, double dpmm);

/// A LivePointer session: the pointer stands in for the detected fingertip
/// and the page layout for the detected lines. Everything after that runs
/// through Pipeline::decide.
class LivePointerSession {
 public:
  LivePointerSession(std::string id, const PipelineConfig& cfg, sim::PageLayout layout, double pageDpmm,
                     std::filesystem::path logDir);

  const std::string& id() const { return id_; }
  nlohmann::ordered_json geometry() const { return page_geometry_message(layout_, dpmm_); }
  /// PNG bytes of the rendered page.
  const std::vector<unsigned char>& page_png();

  /// Records the sample and, once per pipeline period, runs the feedback
  /// stages and returns the command message. Throws InvalidArgument when t
  /// does not increase.
  std::optional<StepResult> on_sample(const PointerSample& s);

  /// Line index whose baseline is currently tracked.
  int tracked_line() const { return line_; }
  const sim::TrajectoryLog& trajectory() const { return trajectory_; }
  std::filesystem::path trajectory_path() const { return trajLog_.path(); }
  std::filesystem::path command_path() const { return cmdLog_.path(); }
  bool closed() const { return closed_; }

  /// Flushes and closes the logs, returns the metrics of the session.
  sim::MetricsReport close();

 private:
  int nearest_line(double yMm) const;

  std::string id_;
  Pipeline pipeline_;
  sim::PageLayout layout_;
  double dpmm_;
  std::vector<sim::RenderedWord> words_;
  std::vector<double> lineRightMm_;
  std::vector<unsigned char> png_;
  JsonlLog trajLog_;
  JsonlLog cmdLog_;
  sim::TrajectoryLog trajectory_;
  int line_ = -1;
  bool awaitingLineStart_ = false;
  std::optional<double> lastEmit_;
  feedback::CommandKind shown_ = feedback::CommandKind::None;
  bool closed_ = false;
};

}  // namespace fingereye::harness
