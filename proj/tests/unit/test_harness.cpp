#include "fingereye/ebraille/braille.hpp"
#include "fingereye/harness/cli.hpp"
#include "fingereye/harness/config.hpp"
#include "fingereye/harness/live.hpp"
#include "fingereye/harness/logs.hpp"
#include "fingereye/harness/pipeline.hpp"
#include "fingereye/harness/service.hpp"
#include "fingereye/sim/experiment.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace fingereye;
using namespace fingereye::harness;
using feedback::CommandKind;
namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fingereye_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

sim::PageLayout word_page() {
  sim::PageLayout l = sim::default_layout();
  l.text = {"the", "of", "an", "it"};
  return l;
}

PipelineConfig rig_pipeline(const sim::ExperimentConfig& cfg) {
  PipelineConfig pc = cfg.pipeline;
  pc.camera = cfg.rig.model;
  pc.mmPerPixel = cfg.rig.mm_per_pixel();
  pc.lines.nominalPitchPx = cfg.layout.linePitchMm / pc.mmPerPixel;
  return pc;
}

std::vector<std::string> decode(const std::vector<ebraille::BrailleCell>& cells) {
  std::vector<std::string> out;
  for (const auto& c : cells) out.push_back(ebraille::utf8_encode(ebraille::decode_cell(c, ebraille::Dialect::Six)));
  return out;
}

std::map<std::string, std::string> no_env_vars;
std::optional<std::string> fake_env(const char* name) {
  auto it = no_env_vars.find(name);
  if (it == no_env_vars.end()) return std::nullopt;
  return it->second;
}

http::response<http::string_body> request(unsigned short port, http::verb verb, const std::string& target,
                                          const std::string& body = "") {
  asio::io_context ioc;
  tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), port});
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  beast::error_code ec;
  sock.shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

}  // namespace

TEST(PipelineStep, WordAboveFingertipIsQueued) {
  sim::ExperimentConfig cfg;
  cfg.layout = word_page();
  const sim::CameraSimulator cam(sim::render_page(cfg.layout, cfg.pageDpmm), cfg.pageDpmm, cfg.rig);
  Pipeline p(rig_pipeline(cfg));
  const double x = cfg.layout.marginLeftMm + 0.5 * sim::text_width_mm(cfg.layout, "the");
  const StepResult r = pipeline_step(cam.capture({x, cfg.layout.baseline_mm(0), 0}, 0.01, 1), p);
  EXPECT_TRUE(r.diagnostics.errors.empty());
  EXPECT_EQ(r.diagnostics.word, "the");
  EXPECT_EQ(r.command.kind, CommandKind::None);
  EXPECT_EQ(decode(r.queued), (std::vector<std::string>{"t", "h", "e"}));
  // The first cell is on the display already.
  EXPECT_EQ(r.frame.cell().dots, r.queued[0].dots);
  EXPECT_EQ(p.character_queue().size(), 2u);
}

TEST(PipelineStep, ThreeMillimetresAboveGivesDown) {
  sim::ExperimentConfig cfg;
  const sim::CameraSimulator cam(sim::render_page(cfg.layout, cfg.pageDpmm), cfg.pageDpmm, cfg.rig);
  Pipeline p(rig_pipeline(cfg));
  const StepResult r = pipeline_step(cam.capture({60, cfg.layout.baseline_mm(1) - 3.0, 0}, 0.01, 2), p);
  EXPECT_TRUE(r.diagnostics.errors.empty());
  EXPECT_EQ(r.command.kind, CommandKind::Down);
  ASSERT_TRUE(r.diagnostics.strength.has_value());
  // 3 mm off a 3.5 mm half gap.
  EXPECT_NEAR(*r.diagnostics.strength, 3.0 / 6.5, 0.03);
  EXPECT_NEAR(r.command.strength, 3.0 / 6.5, 0.03);
}

TEST(PipelineStep, BlankPageReportsNoLines) {
  sim::ExperimentConfig cfg;
  const sim::CameraSimulator cam(sim::render_page(cfg.layout, cfg.pageDpmm), cfg.pageDpmm, cfg.rig);
  Pipeline p(rig_pipeline(cfg));
  const StepResult r = pipeline_step(cam.capture({60, cfg.layout.pageHeightMm - 15, 0}, 0.01, 3), p);
  EXPECT_TRUE(r.diagnostics.has_error(ErrorCode::NoLinesFound));
  EXPECT_TRUE(r.diagnostics.fingertipFound);
  EXPECT_EQ(r.command.kind, CommandKind::None);
  EXPECT_EQ(r.command.strength, 0.0);
}

TEST(PipelineStep, DiagnosticsJsonHasNoTimings) {
  Pipeline p(default_pipeline_config());
  const StepResult r = p.idle(0.5, {});
  const auto j = r.diagnostics.to_json();
  EXPECT_TRUE(j.contains("errors"));
  EXPECT_FALSE(j.contains("times"));
  EXPECT_EQ(r.command.kind, CommandKind::None);
}

TEST(Config, LayeringDefaultsFileEnvironment) {
  const fs::path dir = temp_dir("config");
  const fs::path file = dir / "cfg.json";
  std::ofstream(file) << R"({"outDir":"from-file","port":9000,"pipeline":{"frameRateHz":5.0}})";
  no_env_vars = {};
  AppConfig a = load_app_config(file, fake_env);
  EXPECT_EQ(a.outDir, "from-file");
  EXPECT_EQ(a.port, 9000);
  EXPECT_EQ(a.pipeline.frameRateHz, 5.0);
  EXPECT_EQ(a.host, "127.0.0.1");

  no_env_vars = {{kEnvPort, "9100"}, {kEnvOut, "from-env"}};
  AppConfig b = load_app_config(file, fake_env);
  EXPECT_EQ(b.port, 9100);
  EXPECT_EQ(b.outDir, "from-env");

  no_env_vars = {{kEnvConfig, file.string()}};
  EXPECT_EQ(load_app_config(std::nullopt, fake_env).port, 9000);

  no_env_vars = {{kEnvPort, "http"}};
  EXPECT_THROW(load_app_config(std::nullopt, fake_env), Error);
  no_env_vars = {};
  std::ofstream(file) << R"({"noSuchKey":1})";
  EXPECT_THROW(load_app_config(file, fake_env), Error);
  EXPECT_THROW(load_app_config(dir / "missing.json", fake_env), Error);
}

TEST(Config, JsonRoundTrip) {
  AppConfig a;
  a.port = 1234;
  a.pipeline.deadband.epsilon = 0.2;
  AppConfig b;
  b.merge_json(a.to_json());
  EXPECT_EQ(b.to_json().dump(), a.to_json().dump());
}

TEST(Cli, ShowConfig) {
  const auto r = cli({"experiment", "--show-config", "--out", "somewhere"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("outDir"), "somewhere");
  EXPECT_TRUE(j.contains("pipeline"));
  EXPECT_TRUE(j.contains("experiment"));
}

TEST(Cli, UsageErrorsExitTwo) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"bogus"}, {"experiment", "--reps", "0"}, {"experiment", "--feedback", "maybe"}, {"pipeline"},
           {"braille", "--dialect", "nine"}, {"serve", "--port", "70000"}}) {
    const auto r = cli(args);
    EXPECT_EQ(r.code, 2) << args[0];
    EXPECT_NE(r.err.find("\"error\":\"UsageError\""), std::string::npos) << r.err;
  }
}

TEST(Cli, RuntimeErrorsExitOne) {
  const fs::path dir = temp_dir("cli_err");
  auto r = cli({"metrics", (dir / "missing.csv").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("NotFound"), std::string::npos);
  r = cli({"pipeline", "--input", (dir / "nothing.png").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  r = cli({"--ocr", "tesseract", "benchmark", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  r = cli({"braille", "--text", "a@", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, BrailleWritesWaveform) {
  const fs::path dir = temp_dir("cli_braille");
  const auto r = cli({"braille", "--text", "ab", "--waveform", "w.csv", "--training", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["roundTrip"], true);
  EXPECT_EQ(j["cells"][1]["dots"], "12");
  EXPECT_TRUE(fs::exists(dir / "w.csv"));
  EXPECT_TRUE(fs::exists(dir / "training.csv"));
}

TEST(Cli, MetricsOnExportedCsvReproducesReport) {
  const fs::path dir = temp_dir("cli_metrics");
  const auto e = cli({"experiment", "--mode", "geometric", "--reps", "3", "--no-plots", "--out", dir.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const fs::path csv = dir / "experiment" / "trajectories.csv";
  ASSERT_TRUE(fs::exists(csv));
  const auto m = cli({"metrics", csv.string(), "--out", (dir / "m").string()});
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_EQ(read_text_file(dir / "m" / "metrics" / "metrics.json"), read_text_file(dir / "experiment" / "metrics.json"));
  EXPECT_EQ(m.out, e.out);

  std::vector<std::string> jsonl{"metrics"};
  for (const auto& entry : fs::directory_iterator(dir / "experiment" / "runs"))
    if (entry.path().filename().string().find("commands") == std::string::npos) jsonl.push_back(entry.path().string());
  std::sort(jsonl.begin() + 1, jsonl.end());
  ASSERT_EQ(jsonl.size(), 4u);
  jsonl.insert(jsonl.end(), {"--out", (dir / "j").string()});
  const auto mj = cli(jsonl);
  ASSERT_EQ(mj.code, 0) << mj.err;
  EXPECT_EQ(mj.out, e.out);
}

TEST(Live, HeldOnBaselineGivesNoCorrection) {
  const fs::path dir = temp_dir("live_hold");
  const sim::PageLayout layout = sim::default_layout();
  LivePointerSession s("s1", default_pipeline_config(), layout, 4, dir);
  int messages = 0;
  for (int i = 0; i <= 300; ++i) {
    const auto r = s.on_sample({i / 60.0, layout.marginLeftMm + 30, layout.baseline_mm(2)});
    if (!r) continue;
    ++messages;
    EXPECT_NE(r->command.kind, CommandKind::Up);
    EXPECT_NE(r->command.kind, CommandKind::Down);
    EXPECT_TRUE(command_message(*r)["dots16"].is_number_unsigned());
  }
  EXPECT_NEAR(messages, 15, 1);
  EXPECT_EQ(s.tracked_line(), 2);
  EXPECT_THROW(s.on_sample({1.0, 0, 0}), Error);
  const sim::MetricsReport rep = s.close();
  EXPECT_EQ(rep.samples, 301);
  EXPECT_EQ(rep.commandBursts, 0);
  std::ifstream in(s.trajectory_path());
  const sim::TrajectoryLog back = sim::read_trajectory_jsonl(in);
  EXPECT_EQ(sim::compute_metrics({back}).to_json().dump(), rep.to_json().dump());
}

TEST(Live, RampUpwardGivesDownWithinOnePeriod) {
  const fs::path dir = temp_dir("live_ramp");
  const sim::PageLayout layout = sim::default_layout();
  const PipelineConfig pc = default_pipeline_config();
  LivePointerSession s("s2", pc, layout, 4, dir);
  const double b = layout.baseline_mm(1), half = 0.5 * layout.gap_mm();
  std::optional<double> crossed, down;
  for (int i = 0; i <= 240 && !down; ++i) {
    const double t = i / 60.0, y = b - 0.5 * t;
    const double d3 = b - y;
    if (!crossed && d3 / (d3 + half) > pc.deadband.epsilon) crossed = t;
    const auto r = s.on_sample({t, layout.marginLeftMm + 40 + 5 * t, y});
    if (r && r->command.kind == CommandKind::Down) down = t;
  }
  ASSERT_TRUE(crossed && down);
  EXPECT_GE(*down, *crossed);
  EXPECT_LE(*down - *crossed, 1.0 / pc.frameRateHz + 1e-9);
}

TEST(Live, SampleParsing) {
  const PointerSample p = parse_pointer_sample(R"({"t":1.5,"x":20,"y":31.5})");
  EXPECT_EQ(p.t, 1.5);
  EXPECT_EQ(p.yMm, 31.5);
  for (const char* bad : {"{bad", "[1,2]", R"({"t":1,"x":2})", R"({"t":"1","x":2,"y":3})"}) {
    try {
      parse_pointer_sample(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
  }
}

TEST(Live, GeometryMessage) {
  const sim::PageLayout layout = sim::default_layout();
  const auto j = page_geometry_message(layout, 4);
  EXPECT_EQ(j["linePitchMm"], layout.linePitchMm);
  EXPECT_EQ(j["lineHeightMm"], layout.lineHeightMm);
  ASSERT_EQ(j["lines"].size(), layout.text.size());
  EXPECT_EQ(j["lines"][1]["baselineMm"], layout.baseline_mm(1));
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    AppConfig cfg;
    cfg.outDir = temp_dir("service").string();
    cfg.port = 0;
    cfg.experiment.pageDpmm = 4;
    service_ = std::make_unique<SessionService>(cfg);
    port_ = service_->start();
  }
  void TearDown() override { service_->stop(); }

  std::string create() {
    const auto res = request(port_, http::verb::post, "/sessions", R"({"mode":"LivePointer"})");
    EXPECT_EQ(res.result(), http::status::created);
    return nlohmann::json::parse(res.body()).at("sessionId");
  }

  std::unique_ptr<SessionService> service_;
  unsigned short port_ = 0;
};

TEST_F(ServiceTest, CreateFetchAndClose) {
  const auto res = request(port_, http::verb::post, "/sessions", "");
  ASSERT_EQ(res.result(), http::status::created);
  const auto j = nlohmann::json::parse(res.body());
  const std::string id = j.at("sessionId");
  EXPECT_EQ(j["mode"], "LivePointer");
  EXPECT_TRUE(j["geometry"].contains("lines"));
  EXPECT_FALSE(j["pagePng"].get<std::string>().empty());

  const auto png = request(port_, http::verb::get, "/sessions/" + id + "/page.png");
  ASSERT_EQ(png.result(), http::status::ok);
  EXPECT_EQ(png.body().substr(1, 3), "PNG");
  EXPECT_EQ(request(port_, http::verb::get, "/sessions/" + id + "/log").result(), http::status::ok);
  const auto del = request(port_, http::verb::delete_, "/sessions/" + id);
  EXPECT_EQ(del.result(), http::status::ok);
  EXPECT_EQ(nlohmann::json::parse(del.body())["samples"], 0);
  EXPECT_EQ(request(port_, http::verb::delete_, "/sessions/" + id).result(), http::status::not_found);
}

TEST_F(ServiceTest, UnknownThingsAre404) {
  for (const std::string t : {"/sessions/nope/page.png", "/sessions/nope/log", "/elsewhere"})
    EXPECT_EQ(request(port_, http::verb::get, t).result(), http::status::not_found) << t;
  EXPECT_EQ(request(port_, http::verb::delete_, "/sessions/nope").result(), http::status::not_found);
  const auto bad = request(port_, http::verb::post, "/sessions", "{oops");
  EXPECT_EQ(bad.result(), http::status::bad_request);
  EXPECT_EQ(nlohmann::json::parse(bad.body())["error"], "ParseError");
  EXPECT_EQ(request(port_, http::verb::post, "/sessions", R"({"mode":"SimulatedFinger"})").result(),
            http::status::bad_request);

  asio::io_context ioc;
  tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), port_});
  websocket::stream<tcp::socket> ws(std::move(sock));
  EXPECT_THROW(ws.handshake("127.0.0.1", "/sessions/nope/stream"), beast::system_error);
}

TEST_F(ServiceTest, StreamSendsGeometryThenCommands) {
  const std::string id = create();
  asio::io_context ioc;
  tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), port_});
  websocket::stream<tcp::socket> ws(std::move(sock));
  ws.handshake("127.0.0.1", "/sessions/" + id + "/stream");
  ws.text(true);
  beast::flat_buffer buf;
  auto read = [&] {
    buf.consume(buf.size());
    ws.read(buf);
    return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  };
  const auto geometry = read();
  ASSERT_TRUE(geometry.contains("lines"));
  const double b = geometry["lines"][1]["baselineMm"];

  ws.write(asio::buffer(std::string("{not a sample")));
  const auto err = read();
  EXPECT_EQ(err["error"], "ParseError");

  ws.write(asio::buffer(nlohmann::json{{"t", 0.0}, {"x", 30.0}, {"y", b - 3.0}}.dump()));
  const auto cmd = read();
  EXPECT_EQ(cmd["kind"], "Down");
  EXPECT_NEAR(cmd["strength"].get<double>(), 3.0 / 6.5, 1e-9);
  EXPECT_LT(cmd["dots16"].get<unsigned>(), 65536u);
  EXPECT_EQ(cmd["t"], 0.0);

  ws.write(asio::buffer(nlohmann::json{{"t", 0.0}, {"x", 30.0}, {"y", b}}.dump()));
  EXPECT_EQ(read()["error"], "InvalidArgument");
  ws.close(websocket::close_code::normal);

  const auto log = request(port_, http::verb::get, "/sessions/" + id + "/log?kind=commands");
  ASSERT_EQ(log.result(), http::status::ok);
  const auto line = log.body().substr(0, log.body().find('\n'));
  EXPECT_EQ(feedback::command_record_from_json(line).kind, CommandKind::Down);
  const auto traj = request(port_, http::verb::get, "/sessions/" + id + "/log");
  std::istringstream in(traj.body());
  EXPECT_EQ(sim::read_trajectory_jsonl(in).samples.size(), 1u);
}
