#pragma once

#include "fingereye/ebraille/stimulation.hpp"
#include "fingereye/feedback/feedback.hpp"
#include "fingereye/imaging/deconvolution.hpp"
#include "fingereye/imaging/fisheye.hpp"
#include "fingereye/motion/motion.hpp"
#include "fingereye/page/fingertip.hpp"
#include "fingereye/page/ocr.hpp"
#include "fingereye/page/text_lines.hpp"

#include <nlohmann/json.hpp>

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fingereye::harness {

struct PipelineConfig {
  std::string cameraPath;  // calibration file; empty uses `camera`
  imaging::CameraModel camera;
  bool undistort = true;
  bool deblur = false;
  imaging::DeconvConfig deconv;
  std::string ocrEngine = "builtin";
  bool recognize = true;
  feedback::DeadbandConfig deadband;
  ebraille::StimulationParams stimulation;
  ebraille::Dialect dialect = ebraille::Dialect::Six;
  double skinLoadMOhm = 3.0;  // simulated electrode load for the regulator
  page::FingertipConfig fingertip;
  page::TextLineConfig lines;
  bool trackMotion = true;
  motion::FlowConfig flow;
  int maxFeatures = 60;
  int redetectEvery = 15;
  double mmPerPixel = 0.0625;
  double frameRateHz = 3.0;
  bool debugDump = false;
  std::string debugDir;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Overlays the keys present in `j` onto this config.
  void merge_json(const nlohmann::json& j);
};

PipelineConfig default_pipeline_config();

struct StageTimes {
  double rectifyMs = 0, fingertipMs = 0, linesMs = 0, wordMs = 0, ocrMs = 0, motionMs = 0, totalMs = 0;
};

struct Diagnostics {
  std::vector<std::string> errors;  // error codes raised while processing the frame
  bool fingertipFound = false;
  Point2 tip;
  int lineCount = 0;
  double blockAngle = 0.0;
  std::optional<double> baselineY;
  std::optional<double> strength;  // signed s
  std::string position;
  std::string word;
  double ocrConfidence = 0.0;
  std::optional<cv::Rect> wordBox;
  std::optional<motion::AffineMotion> motion;
  double voltageV = 0.0;
  double currentuA = 0.0;
  StageTimes times;

  bool has_error(ErrorCode code) const;
  nlohmann::ordered_json to_json() const;  // without timings
};

/// Geometry the feedback law runs on, in any consistent unit.
struct FeedbackInput {
  double t = 0.0;
  double tipX = 0.0, tipY = 0.0;
  double upperBottom = 0.0, lowerTop = 0.0;
  double baselineY = 0.0;
  double lineLeft = 0.0, lineRight = 0.0;
  bool clippedLeft = false, clippedRight = false;
};

struct StepResult {
  feedback::FeedbackCommand command;
  ebraille::ElectrodeFrame frame;
  feedback::CommandRecord record;
  Diagnostics diagnostics;
  std::vector<ebraille::BrailleCell> queued;  // cells added by this step
};

/// One session's processing state: rectification grid, hysteresis, tracked
/// baseline, feature tracks, Braille character queue and current regulation.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  /// Algorithm body for one camera frame. Module errors end up in the
  /// diagnostics; the command falls back to None.
  StepResult step(const Frame& raw);

  /// Shared tail: feedback law, evaluator, display frame. LivePointer
  /// sessions call it directly with page geometry.
  StepResult decide(const FeedbackInput& in, Diagnostics diag = {});
  /// A frame without usable geometry.
  StepResult idle(double t, Diagnostics diag);

  /// Queues the Braille cells of a recognized word (with a separating blank
  /// cell). Words equal to the previous one are skipped.
  std::vector<ebraille::BrailleCell> enqueue_word(const std::string& word);

  void reset();
  const PipelineConfig& config() const { return cfg_; }
  const std::deque<ebraille::BrailleCell>& character_queue() const { return queue_; }
  std::optional<double> tracked_baseline() const { return trackedBaseline_; }
  const ebraille::StimulationParams& stimulation() const { return stim_; }

 private:
  StepResult finish(StepResult r, Diagnostics diag, const feedback::BaselineGeometry& g, double tipX, double tipY);
  void track_motion(const cv::Mat& gray, double t, Diagnostics& diag, motion::FlowField* flowOut);

  PipelineConfig cfg_;
  imaging::RemapGrid grid_;
  std::unique_ptr<page::OcrEngine> ocr_;
  feedback::FeedbackEvaluator evaluator_;
  std::optional<double> trackedBaseline_;
  double trackedHalfGap_ = 0.0;
  std::deque<ebraille::BrailleCell> queue_;
  std::string lastWord_;
  ebraille::StimulationParams stim_;
  cv::Mat prevGray_;
  std::vector<Point2> features_;
  int framesSinceDetect_ = 0;
  int frameIndex_ = 0;
};

/// Free-function form: runs one step on `pipeline`.
StepResult pipeline_step(const Frame& frame, Pipeline& pipeline);

}  // namespace fingereye::harness
