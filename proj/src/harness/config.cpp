#include "fingereye/harness/config.hpp"

#include <concepts>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fingereye {

namespace imaging {
template <class F>
void visit_fields(CameraModel& m, F&& f) {
  f("fx", m.intrinsics.fx);
  f("fy", m.intrinsics.fy);
  f("cx", m.intrinsics.cx);
  f("cy", m.intrinsics.cy);
  f("k1", m.distortion.k1);
  f("k2", m.distortion.k2);
  f("k3", m.distortion.k3);
  f("k4", m.distortion.k4);
  f("width", m.sensor.width);
  f("height", m.sensor.height);
  f("fisheye", m.fisheye);
}

template <class F>
void visit_fields(DeconvConfig& c, F&& f) {
  f("lambda", c.lambda);
  f("a", c.a);
  f("maxIterations", c.maxIterations);
  f("convergenceTol", c.convergenceTol);
  f("kernelSize", c.kernelSize);
  f("initialPsfSigma", c.initialPsfSigma);
  f("xSolverIterations", c.xSolverIterations);
  f("hSolverIterations", c.hSolverIterations);
  f("gradientSmoothing", c.gradientSmoothing);
}
}  // namespace imaging

namespace feedback {
template <class F>
void visit_fields(DeadbandConfig& c, F&& f) {
  f("epsilon", c.epsilon);
  f("endZoneFraction", c.endZoneFraction);
}
}  // namespace feedback

namespace ebraille {
template <class F>
void visit_fields(StimulationParams& p, F&& f) {
  f("frequencyHz", p.frequencyHz);
  f("dutyCycle", p.dutyCycle);
  f("targetCurrentuA", p.targetCurrentuA);
  f("voltageV", p.voltageV);
  f("kp", p.kp);
  f("minVoltageV", p.minVoltageV);
  f("maxVoltageV", p.maxVoltageV);
}
}  // namespace ebraille

namespace page {
template <class F>
void visit_fields(FingertipConfig& c, F&& f) {
  f("minArea", c.minArea);
  f("minClassSeparation", c.minClassSeparation);
  f("minBlueness", c.minBlueness);
}

template <class F>
void visit_fields(TextLineConfig& c, F&& f) {
  f("fastThreshold", c.fastThreshold);
  f("dilateKernel", c.dilateKernel);
  f("closeKernel", c.closeKernel);
  f("nominalPitchPx", c.nominalPitchPx);
  f("referencePitchPx", c.referencePitchPx);
  f("scaleWithPitch", c.scaleWithPitch);
  f("minCorners", c.minCorners);
}
}  // namespace page

namespace motion {
template <class F>
void visit_fields(FlowConfig& c, F&& f) {
  f("window", c.window);
  f("pyramidal", c.pyramidal);
  f("levels", c.levels);
  f("iterations", c.iterations);
  f("epsilon", c.epsilon);
  f("minEigen", c.minEigen);
}
}  // namespace motion

namespace harness {
template <class F>
void visit_fields(PipelineConfig& c, F&& f) {
  f("cameraPath", c.cameraPath);
  f("camera", c.camera);
  f("undistort", c.undistort);
  f("deblur", c.deblur);
  f("deconv", c.deconv);
  f("ocrEngine", c.ocrEngine);
  f("recognize", c.recognize);
  f("deadband", c.deadband);
  f("stimulation", c.stimulation);
  f("dialect", c.dialect);
  f("skinLoadMOhm", c.skinLoadMOhm);
  f("fingertip", c.fingertip);
  f("lines", c.lines);
  f("trackMotion", c.trackMotion);
  f("flow", c.flow);
  f("maxFeatures", c.maxFeatures);
  f("redetectEvery", c.redetectEvery);
  f("mmPerPixel", c.mmPerPixel);
  f("frameRateHz", c.frameRateHz);
  f("debugDump", c.debugDump);
  f("debugDir", c.debugDir);
}
}  // namespace harness

namespace sim {
template <class F>
void visit_fields(PageLayout& l, F&& f) {
  f("lineHeightMm", l.lineHeightMm);
  f("linePitchMm", l.linePitchMm);
  f("fontSizePt", l.fontSizePt);
  f("pageWidthMm", l.pageWidthMm);
  f("pageHeightMm", l.pageHeightMm);
  f("marginLeftMm", l.marginLeftMm);
  f("marginTopMm", l.marginTopMm);
  f("text", l.text);
}

template <class F>
void visit_fields(CameraRig& r, F&& f) {
  f("model", r.model);
  f("heightMm", r.heightMm);
  f("aheadMm", r.aheadMm);
  f("wedgeHalfAngleRad", r.wedgeHalfAngleRad);
  f("wedgeColor", r.wedgeColor);
  f("drawDevice", r.drawDevice);
}

template <class F>
void visit_fields(ExperimentConfig& c, F&& f) {
  f("layout", c.layout);
  f("rig", c.rig);
  f("finger", c.finger);
  f("pipeline", c.pipeline);
  f("mode", c.mode);
  f("feedbackOn", c.feedbackOn);
  f("repetitions", c.repetitions);
  f("seed", c.seed);
  f("pageDpmm", c.pageDpmm);
  f("noiseSigma", c.noiseSigma);
  f("yawRad", c.yawRad);
  f("frameRateHz", c.frameRateHz);
  f("physicsHz", c.physicsHz);
  f("logRateHz", c.logRateHz);
  f("lineLengthMm", c.lineLengthMm);
  f("firstLine", c.firstLine);
  f("stallTimeoutS", c.stallTimeoutS);
  f("maxRunS", c.maxRunS);
}
}  // namespace sim

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

template <class T>
concept Visitable = requires(T& t) { visit_fields(t, [](const char*, auto&) {}); };

template <class T>
ojson to_j(const T& v);
template <class T>
void from_j(const json& j, T& v, const std::string& path);

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "config " + path + ": " + what);
}

template <class T>
ojson to_j(const T& v) {
  if constexpr (Visitable<T>) {
    ojson o = ojson::object();
    visit_fields(const_cast<T&>(v), [&](const char* key, auto& field) { o[key] = to_j(field); });
    return o;
  } else if constexpr (std::same_as<T, cv::Size>) {
    return ojson::array({v.width, v.height});
  } else if constexpr (std::same_as<T, cv::Scalar>) {
    return ojson::array({v[0], v[1], v[2]});
  } else if constexpr (std::same_as<T, ebraille::Dialect>) {
    return v == ebraille::Dialect::Six ? "six" : "eight";
  } else if constexpr (std::same_as<T, sim::ExperimentMode>) {
    return v == sim::ExperimentMode::Vision ? "vision" : "geometric";
  } else if constexpr (std::same_as<T, sim::FingerModelParams>) {
    return ojson::parse(v.to_json().dump());
  } else {
    return ojson(v);
  }
}

template <class T>
void from_j(const json& j, T& v, const std::string& path) {
  try {
    if constexpr (Visitable<T>) {
      if (!j.is_object()) bad(path, "expected an object");
      for (const auto& [key, value] : j.items()) {
        bool found = false;
        visit_fields(v, [&](const char* name, auto& field) {
          if (key == name) {
            from_j(value, field, path + "." + key);
            found = true;
          }
        });
        if (!found) bad(path, "unknown key '" + key + "'");
      }
    } else if constexpr (std::same_as<T, cv::Size>) {
      if (!j.is_array() || j.size() != 2) bad(path, "expected [width, height]");
      v = cv::Size(j[0].get<int>(), j[1].get<int>());
    } else if constexpr (std::same_as<T, cv::Scalar>) {
      if (!j.is_array() || j.size() != 3) bad(path, "expected [b, g, r]");
      v = cv::Scalar(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    } else if constexpr (std::same_as<T, ebraille::Dialect>) {
      const auto s = j.get<std::string>();
      if (s == "six") v = ebraille::Dialect::Six;
      else if (s == "eight") v = ebraille::Dialect::Eight;
      else bad(path, "expected six or eight");
    } else if constexpr (std::same_as<T, sim::ExperimentMode>) {
      const auto s = j.get<std::string>();
      if (s == "vision") v = sim::ExperimentMode::Vision;
      else if (s == "geometric") v = sim::ExperimentMode::Geometric;
      else bad(path, "expected vision or geometric");
    } else if constexpr (std::same_as<T, sim::FingerModelParams>) {
      json merged = json::parse(v.to_json().dump());
      merged.merge_patch(j);
      v = sim::FingerModelParams::from_json(merged);
    } else if constexpr (std::same_as<T, bool>) {
      if (!j.is_boolean()) bad(path, "expected a boolean");
      v = j.get<bool>();
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!j.is_number()) bad(path, "expected a number");
      if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) bad(path, "expected an integer");
      }
      v = j.get<T>();
    } else {
      v = j.get<T>();
    }
  } catch (const json::exception& e) {
    bad(path, e.what());
  }
}

}  // namespace

namespace harness {

void PipelineConfig::validate() const {
  if (!(frameRateHz > 0)) throw Error(ErrorCode::InvalidArgument, "frame rate must be > 0");
  if (!(mmPerPixel > 0)) throw Error(ErrorCode::InvalidArgument, "mmPerPixel must be > 0");
  if (!(skinLoadMOhm > 0)) throw Error(ErrorCode::InvalidArgument, "skin load must be > 0");
  if (maxFeatures < 3 || redetectEvery < 1) throw Error(ErrorCode::InvalidArgument, "feature tracking limits");
  if (!cameraPath.empty() && !std::filesystem::exists(cameraPath))
    throw Error(ErrorCode::InvalidArgument, "camera calibration file not found: " + cameraPath);
  if (ocrEngine != "builtin" && ocrEngine.rfind("external:", 0) != 0)
    throw Error(ErrorCode::InvalidArgument, "unknown OCR engine: " + ocrEngine);
  if (!(lines.nominalPitchPx > 0 && lines.referencePitchPx > 0))
    throw Error(ErrorCode::InvalidArgument, "line pitch must be > 0");
  camera.intrinsics.validate(camera.sensor);
  camera.distortion.validate();
  deadband.validate();
  stimulation.validate();
  deconv.validate();
}

nlohmann::ordered_json PipelineConfig::to_json() const { return to_j(*this); }

void PipelineConfig::merge_json(const nlohmann::json& j) { from_j(j, *this, "pipeline"); }

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.camera = sim::CameraRig::default_model();
  c.mmPerPixel = sim::CameraRig{}.mm_per_pixel();
  c.lines.nominalPitchPx = 10.0 / c.mmPerPixel;
  c.flow.pyramidal = true;
  return c;
}

void AppConfig::validate() const {
  if (outDir.empty()) throw Error(ErrorCode::InvalidArgument, "output directory must be set");
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
  pipeline.validate();
  experiment.validate();
}

nlohmann::ordered_json AppConfig::to_json() const {
  ojson j;
  j["outDir"] = outDir;
  j["host"] = host;
  j["port"] = port;
  j["staticDir"] = staticDir;
  j["pipeline"] = pipeline.to_json();
  ojson e = experiment.to_json();
  e.erase("pipeline");
  j["experiment"] = e;
  return j;
}

void AppConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) bad("", "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "outDir") from_j(value, outDir, key);
    else if (key == "host") from_j(value, host, key);
    else if (key == "port") from_j(value, port, key);
    else if (key == "staticDir") from_j(value, staticDir, key);
    else if (key == "pipeline") pipeline.merge_json(value);
    else if (key == "experiment") {
      if (value.contains("pipeline")) bad("experiment", "set the pipeline at top level");
      experiment.merge_json(value);
    } else bad("", "unknown key '" + key + "'");
  }
  experiment.pipeline = pipeline;
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

AppConfig load_app_config(const std::optional<std::filesystem::path>& configPath, const EnvLookup& env) {
  AppConfig cfg;
  cfg.experiment.pipeline = cfg.pipeline;
  std::optional<std::filesystem::path> file = configPath;
  if (!file) {
    if (auto p = env(kEnvConfig); p && !p->empty()) file = *p;
  }
  if (file) cfg.merge_json(read_json_file(*file));
  if (auto v = env(kEnvOut)) cfg.outDir = *v;
  if (auto v = env(kEnvHost)) cfg.host = *v;
  if (auto v = env(kEnvPort)) {
    try {
      std::size_t used = 0;
      cfg.port = std::stoi(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string(kEnvPort) + " is not a port: " + *v);
    }
  }
  if (auto v = env(kEnvOcr)) {
    cfg.pipeline.ocrEngine = *v;
    cfg.experiment.pipeline.ocrEngine = *v;
  }
  return cfg;
}

}  // namespace harness

namespace sim {

nlohmann::ordered_json ExperimentConfig::to_json() const { return to_j(*this); }

void ExperimentConfig::merge_json(const nlohmann::json& j) { from_j(j, *this, "experiment"); }

}  // namespace sim

}  // namespace fingereye
