#include "fingereye/harness/cli.hpp"

#include "fingereye/ebraille/stimulation.hpp"
#include "fingereye/harness/benchmark.hpp"
#include "fingereye/harness/config.hpp"
#include "fingereye/harness/logs.hpp"
#include "fingereye/harness/service.hpp"
#include "fingereye/sim/calibration.hpp"

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fingereye::harness {

namespace fs = std::filesystem;

namespace {

void print_error(std::ostream& err, std::string_view code, const std::string& msg) {
  err << nlohmann::ordered_json{{"error", code}, {"message", msg}}.dump() << '\n';
}

bool on_off(const std::string& v) { return v == "on"; }

std::vector<fs::path> image_inputs(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp"))
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw Error(ErrorCode::NotFound, "no images in " + input.string());
  return files;
}

SessionService* g_service = nullptr;
void on_signal(int) {
  if (g_service) std::thread([] { g_service->stop(); }).detach();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finger-worn reading assistant: pipeline, simulator and session service", "fingereye"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string configPath, outDir;
  bool showConfig = false;
  app.add_option("--config", configPath, "JSON config file (else $FINGEREYE_CONFIG)");
  app.add_option("--out", outDir, "output directory (else $FINGEREYE_OUT, default out)");
  app.add_flag("--show-config", showConfig, "print the resolved config and exit");
  std::string ocr;
  app.add_option("--ocr", ocr, "OCR engine: builtin or external:<command with {input}>");

  auto* pipelineCmd = app.add_subcommand("pipeline", "run the frame pipeline on an image or a directory");
  std::string input, cameraPath;
  double frameRate = 0;
  bool debugDump = false, deblur = false;
  pipelineCmd->add_option("--input", input, "image file or directory")->required();
  pipelineCmd->add_option("--camera", cameraPath, "camera calibration file");
  pipelineCmd->add_option("--frame-rate", frameRate, "frame rate for timestamps (Hz)");
  pipelineCmd->add_flag("--debug-dump", debugDump, "write per-frame overlays and detections");
  pipelineCmd->add_flag("--deblur", deblur, "run blind deconvolution before detection");

  auto* experimentCmd = app.add_subcommand("experiment", "run seeded closed- or open-loop line traversals");
  std::string feedbackFlag = "on", mode;
  int reps = 0;
  long long seed = -1;
  bool noPlots = false;
  experimentCmd->add_option("--feedback", feedbackFlag, "on or off")->check(CLI::IsMember({"on", "off"}));
  experimentCmd->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
  experimentCmd->add_option("--seed", seed, "seed")->check(CLI::NonNegativeNumber);
  experimentCmd->add_option("--mode", mode, "vision or geometric")->check(CLI::IsMember({"vision", "geometric"}));
  experimentCmd->add_flag("--no-plots", noPlots, "skip the figures");

  auto* calibrateCmd = app.add_subcommand("calibrate", "fit the finger model to the target statistics");
  std::string targetsPath;
  int rounds = 6;
  calibrateCmd->add_option("--targets", targetsPath, "JSON file overriding the calibration targets");
  calibrateCmd->add_option("--rounds", rounds, "bisection rounds")->check(CLI::PositiveNumber);

  auto* serveCmd = app.add_subcommand("serve", "start the session service");
  std::string host, staticDir;
  int port = -1;
  serveCmd->add_option("--host", host, "bind address");
  serveCmd->add_option("--port", port, "port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serveCmd->add_option("--static", staticDir, "directory of the web client bundle");

  auto* brailleCmd = app.add_subcommand("braille", "encode text into Braille cells and waveforms");
  std::string text, dialect = "six", waveform, training;
  double duration = 0.5, strength = 0.0;
  int trainingCount = 0;
  brailleCmd->add_option("--text", text, "text to encode");
  brailleCmd->add_option("--dialect", dialect, "six or eight")->check(CLI::IsMember({"six", "eight"}));
  brailleCmd->add_option("--waveform", waveform, "write a waveform CSV with this name under the output directory");
  brailleCmd->add_option("--duration", duration, "seconds per cell")->check(CLI::PositiveNumber);
  brailleCmd->add_option("--training", trainingCount, "write a training sequence of this many Up/Down pairs")
      ->check(CLI::NonNegativeNumber);

  auto* benchmarkCmd = app.add_subcommand("benchmark", "measure pipeline throughput on synthetic frames");
  int frames = 60;
  benchmarkCmd->add_option("--frames", frames, "frames to time")->check(CLI::PositiveNumber);

  auto* metricsCmd = app.add_subcommand("metrics", "compute metrics from trajectory CSV or JSONL files");
  std::vector<std::string> metricInputs;
  double lineLength = 170.0;
  metricsCmd->add_option("inputs", metricInputs, "trajectory CSV or JSONL files")->required();
  metricsCmd->add_option("--line-length", lineLength, "line length for CSV input (mm)")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    AppConfig cfg = load_app_config(configPath.empty() ? std::nullopt : std::optional<fs::path>(configPath));
    if (!outDir.empty()) cfg.outDir = outDir;
    if (!ocr.empty()) cfg.pipeline.ocrEngine = ocr;
    if (!cameraPath.empty()) cfg.pipeline.cameraPath = cameraPath;
    if (frameRate > 0) cfg.pipeline.frameRateHz = frameRate;
    if (deblur) cfg.pipeline.deblur = true;
    if (!host.empty()) cfg.host = host;
    if (port >= 0) cfg.port = port;
    if (!staticDir.empty()) cfg.staticDir = staticDir;
    if (experimentCmd->parsed()) {
      cfg.experiment.feedbackOn = on_off(feedbackFlag);
      if (reps > 0) cfg.experiment.repetitions = reps;
      if (seed >= 0) cfg.experiment.seed = static_cast<std::uint64_t>(seed);
      if (!mode.empty()) cfg.experiment.mode = mode == "vision" ? sim::ExperimentMode::Vision : sim::ExperimentMode::Geometric;
    }
    cfg.experiment.pipeline = cfg.pipeline;

    if (showConfig) {
      out << cfg.to_json().dump(2) << '\n';
      return 0;
    }
    cfg.validate();
    const fs::path root(cfg.outDir);

    if (pipelineCmd->parsed()) {
      const fs::path dir = ensure_dir(root / "pipeline");
      PipelineConfig pc = cfg.pipeline;
      if (debugDump) {
        pc.debugDump = true;
        pc.debugDir = (dir / "overlays").string();
        ensure_dir(pc.debugDir);
      }
      Pipeline pipeline(pc);
      JsonlLog commands(dir / "commands.jsonl");
      JsonlLog diagnostics(dir / "diagnostics.jsonl");
      auto summary = nlohmann::ordered_json::array();
      int i = 0;
      for (const auto& file : image_inputs(input)) {
        cv::Mat img = cv::imread(file.string(), cv::IMREAD_COLOR);
        if (img.empty()) throw Error(ErrorCode::ParseError, "cannot read image " + file.string());
        const auto r = pipeline.step(Frame(img, i++ / pc.frameRateHz));
        commands.append(feedback::to_jsonl(r.record));
        auto d = r.diagnostics.to_json();
        d["file"] = file.filename().string();
        d["command"] = feedback::to_string(r.command.kind);
        d["dots16"] = r.frame.dots16;
        diagnostics.append(d.dump());
        summary.push_back(d);
      }
      out << summary.dump(2) << '\n';
      return 0;
    }

    if (experimentCmd->parsed()) {
      const auto result = sim::run_experiment(cfg.experiment);
      const auto report = sim::compute_metrics(result.logs);
      const auto files = write_experiment_outputs(root / "experiment", result, report, !noPlots);
      write_text_file(root / "experiment" / "config.json", cfg.to_json().dump(2) + '\n');
      out << report.to_json().dump(2) << '\n';
      return 0;
    }

    if (calibrateCmd->parsed()) {
      sim::CalibrationTargets targets;
      if (!targetsPath.empty()) {
        const auto j = read_json_file(targetsPath);
        for (const auto& [key, value] : j.items()) {
          if (key == "openLoopSpeed") targets.openLoopSpeed = value.get<double>();
          else if (key == "closedLoopSpeed") targets.closedLoopSpeed = value.get<double>();
          else if (key == "meanDriftMm") targets.meanDriftMm = value.get<double>();
          else if (key == "minDriftMm") targets.minDriftMm = value.get<double>();
          else if (key == "reactionMedianS") targets.reactionMedianS = value.get<double>();
          else if (key == "complianceMeanS") targets.complianceMeanS = value.get<double>();
          else if (key == "relativeTolerance") targets.relativeTolerance = value.get<double>();
          else throw Error(ErrorCode::InvalidArgument, "unknown target '" + key + "'");
        }
      }
      sim::ExperimentConfig base = cfg.experiment;
      const auto report = sim::calibrate_finger_model_best(targets, base, rounds);
      write_text_file(root / "finger_params.json", report.params.to_json().dump(2) + '\n');
      write_text_file(root / "calibration.json", report.to_json().dump(2) + '\n');
      out << report.to_json().dump(2) << '\n';
      if (!report.converged) {
        print_error(err, to_string(ErrorCode::CalibrationFailed), "targets not met; best parameters written");
        return 1;
      }
      return 0;
    }

    if (serveCmd->parsed()) {
      SessionService service(cfg);
      const auto bound = service.start();
      out << nlohmann::ordered_json{{"host", cfg.host}, {"port", bound}}.dump() << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.wait();
      g_service = nullptr;
      return 0;
    }

    if (brailleCmd->parsed()) {
      const auto d = dialect == "eight" ? ebraille::Dialect::Eight : ebraille::Dialect::Six;
      auto cells = nlohmann::ordered_json::array();
      std::vector<ebraille::BrailleCell> encoded;
      std::string decoded;
      for (char32_t cp : ebraille::utf8_decode(text)) {
        const auto cell = ebraille::encode_char(cp, d);
        encoded.push_back(cell);
        const char32_t back = ebraille::decode_cell(cell, d);
        decoded += ebraille::utf8_encode(back);
        cells.push_back({{"char", ebraille::utf8_encode(cp)}, {"dots", ebraille::to_dot_list(cell)}});
      }
      nlohmann::ordered_json j;
      j["dialect"] = dialect;
      j["cells"] = cells;
      j["roundTrip"] = decoded == text;
      const ebraille::StimulationParams params = cfg.pipeline.stimulation;
      if (!waveform.empty()) {
        ebraille::WaveformSchedule schedule;
        schedule.period = 1.0 / params.frequencyHz;
        double t0 = 0.0;
        for (const auto& cell : encoded) {
          ebraille::append_schedule(schedule,
                                    ebraille::schedule_stimulation(ebraille::compose_frame(cell, {}), params, duration,
                                                                   strength, t0));
          t0 += duration;
        }
        std::ostringstream csv;
        ebraille::write_waveform_csv(csv, schedule);
        const fs::path p = root / fs::path(waveform).filename();
        write_text_file(p, csv.str());
        j["waveform"] = p.string();
      }
      if (trainingCount > 0) {
        std::ostringstream csv;
        ebraille::write_waveform_csv(csv, ebraille::training_sequence(trainingCount, params));
        const fs::path p = root / "training.csv";
        write_text_file(p, csv.str());
        j["training"] = p.string();
      }
      out << j.dump(2) << '\n';
      if (decoded != text) {
        print_error(err, to_string(ErrorCode::UnknownCell), "round trip mismatch");
        return 1;
      }
      return 0;
    }

    if (benchmarkCmd->parsed()) {
      const auto rep = run_benchmark(cfg.pipeline, frames, cfg.experiment.seed);
      const auto j = rep.to_json();
      write_text_file(root / "benchmark.json", j.dump(2) + '\n');
      out << j.dump(2) << '\n';
      return 0;
    }

    if (metricsCmd->parsed()) {
      std::vector<sim::TrajectoryLog> logs;
      for (const auto& name : metricInputs) {
        std::ifstream in(name);
        if (!in) throw Error(ErrorCode::NotFound, "cannot open " + name);
        const auto ext = fs::path(name).extension().string();
        if (ext == ".csv") {
          auto more = sim::read_trajectory_csv(in, lineLength);
          logs.insert(logs.end(), more.begin(), more.end());
        } else {
          logs.push_back(sim::read_trajectory_jsonl(in));
        }
      }
      const auto report = sim::compute_metrics(logs);
      write_text_file(root / "metrics" / "metrics.json", report.to_json().dump(2) + '\n');
      std::ostringstream csv;
      sim::write_metrics_csv(csv, report);
      write_text_file(root / "metrics" / "metrics.csv", csv.str());
      out << report.to_json().dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "Internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace fingereye::harness
