#include "fingereye/harness/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <set>

namespace fingereye::harness {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

struct SessionEntry {
  std::mutex mutex;
  std::unique_ptr<LivePointerSession> session;
  std::optional<sim::MetricsReport> report;  // set once closed
};

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response make_response(const Request& req, http::status status, std::string body,
                       std::string_view contentType = "application/json") {
  Response res{status, req.version()};
  res.set(http::field::server, "fingereye");
  res.set(http::field::content_type, std::string(contentType));
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response error_response(const Request& req, http::status status, std::string_view code, const std::string& msg) {
  nlohmann::ordered_json j{{"error", code}, {"message", msg}};
  return make_response(req, status, j.dump());
}

std::string base64(const std::vector<unsigned char>& bytes) {
  std::string out(beast::detail::base64::encoded_size(bytes.size()), '\0');
  out.resize(beast::detail::base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::string> split_path(std::string_view target) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : target) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

}  // namespace

struct SessionService::Impl {
  AppConfig cfg;
  tcp::endpoint endpoint;
  asio::io_context ioc{1};
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread acceptThread;
  std::atomic<bool> stopping{false};

  std::mutex connMutex;
  std::set<std::shared_ptr<tcp::socket>> sockets;
  std::vector<std::thread> workers;
  std::condition_variable stopped;
  bool done = false;

  std::mutex sessionsMutex;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  long nextId = 1;

  std::shared_ptr<SessionEntry> find(const std::string& id) {
    std::lock_guard lock(sessionsMutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  Response create_session(const Request& req) {
    sim::PageLayout layout = cfg.experiment.layout;
    double dpmm = cfg.experiment.pageDpmm;
    if (!req.body().empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(req.body());
      } catch (const nlohmann::json::exception& e) {
        return error_response(req, http::status::bad_request, to_string(ErrorCode::ParseError), e.what());
      }
      sim::ExperimentConfig overlay = cfg.experiment;
      nlohmann::json patch = nlohmann::json::object();
      for (const auto& [key, value] : j.items()) {
        if (key == "layout") patch["layout"] = value;
        else if (key == "pageDpmm") patch["pageDpmm"] = value;
        else if (key != "mode")
          return error_response(req, http::status::bad_request, to_string(ErrorCode::InvalidArgument),
                                "unknown key '" + key + "'");
      }
      if (j.contains("mode") && j["mode"] != "LivePointer")
        return error_response(req, http::status::bad_request, to_string(ErrorCode::InvalidArgument),
                              "only LivePointer sessions are served");
      overlay.merge_json(patch);
      layout = overlay.layout;
      dpmm = overlay.pageDpmm;
    }
    std::string id;
    {
      std::lock_guard lock(sessionsMutex);
      char buf[32];
      std::snprintf(buf, sizeof buf, "session-%04ld", nextId++);
      id = buf;
    }
    auto entry = std::make_shared<SessionEntry>();
    entry->session = std::make_unique<LivePointerSession>(id, cfg.pipeline, layout, dpmm,
                                                          std::filesystem::path(cfg.outDir) / "sessions");
    nlohmann::ordered_json out;
    out["sessionId"] = id;
    out["mode"] = to_string(SessionMode::LivePointer);
    out["geometry"] = entry->session->geometry();
    out["pageUrl"] = "/sessions/" + id + "/page.png";
    out["pagePng"] = base64(entry->session->page_png());
    {
      std::lock_guard lock(sessionsMutex);
      sessions[id] = entry;
    }
    return make_response(req, http::status::created, out.dump());
  }

  Response route(const Request& req) {
    std::string target(req.target());
    std::string query;
    if (auto q = target.find('?'); q != std::string::npos) {
      query = target.substr(q + 1);
      target.resize(q);
    }
    const auto parts = split_path(target);
    try {
      if (req.method() == http::verb::options) return make_response(req, http::status::no_content, "");
      if (parts.size() == 1 && parts[0] == "sessions" && req.method() == http::verb::post) return create_session(req);
      if (parts.size() >= 2 && parts[0] == "sessions") {
        auto entry = find(parts[1]);
        if (!entry) return error_response(req, http::status::not_found, to_string(ErrorCode::NotFound), "unknown session");
        std::lock_guard lock(entry->mutex);
        if (parts.size() == 2 && req.method() == http::verb::delete_) {
          if (entry->report)
            return error_response(req, http::status::not_found, to_string(ErrorCode::NotFound), "session closed");
          entry->report = entry->session->close();
          return make_response(req, http::status::ok, entry->report->to_json().dump());
        }
        if (parts.size() == 3 && parts[2] == "page.png" && req.method() == http::verb::get) {
          const auto& png = entry->session->page_png();
          return make_response(req, http::status::ok, std::string(png.begin(), png.end()), "image/png");
        }
        if (parts.size() == 3 && parts[2] == "log" && req.method() == http::verb::get) {
          const auto path = query == "kind=commands" ? entry->session->command_path() : entry->session->trajectory_path();
          return make_response(req, http::status::ok, read_text_file(path), "application/x-ndjson");
        }
      }
      if (req.method() == http::verb::get && !cfg.staticDir.empty()) {
        const std::filesystem::path root = std::filesystem::weakly_canonical(cfg.staticDir);
        auto path = std::filesystem::weakly_canonical(root / (target == "/" ? "index.html" : target.substr(1)));
        const auto rel = path.lexically_relative(root);
        if (!rel.empty() && *rel.begin() != ".." && std::filesystem::is_regular_file(path))
          return make_response(req, http::status::ok, read_text_file(path), mime_type(path));
      }
      return error_response(req, http::status::not_found, to_string(ErrorCode::NotFound), "no such endpoint");
    } catch (const Error& e) {
      return error_response(req, http::status::bad_request, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      return error_response(req, http::status::internal_server_error, "Internal", e.what());
    }
  }

  void stream(tcp::socket& sock, const Request& req) {
    const auto parts = split_path(std::string_view(req.target().data(), req.target().size()));
    std::shared_ptr<SessionEntry> entry;
    if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "stream") entry = find(parts[1]);
    if (!entry) {
      auto res = error_response(req, http::status::not_found, to_string(ErrorCode::NotFound), "unknown session");
      res.keep_alive(false);
      http::write(sock, res);
      return;
    }
    websocket::stream<tcp::socket&> ws(sock);
    ws.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(http::field::server, "fingereye"); }));
    ws.accept(req);
    ws.text(true);
    {
      std::lock_guard lock(entry->mutex);
      ws.write(asio::buffer(entry->session->geometry().dump()));
    }
    beast::flat_buffer buffer;
    for (;;) {
      beast::error_code ec;
      ws.read(buffer, ec);
      if (ec) return;
      const std::string text = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      std::string reply;
      try {
        const PointerSample s = parse_pointer_sample(text);
        std::lock_guard lock(entry->mutex);
        if (entry->report) throw Error(ErrorCode::NotFound, "session closed");
        if (auto r = entry->session->on_sample(s)) reply = command_message(*r).dump();
      } catch (const Error& e) {
        reply = nlohmann::ordered_json{{"error", to_string(e.code())}, {"message", e.what()}}.dump();
      }
      if (!reply.empty()) {
        ws.write(asio::buffer(reply), ec);
        if (ec) return;
      }
    }
  }

  void serve(std::shared_ptr<tcp::socket> sock) {
    beast::error_code ec;
    beast::flat_buffer buffer;
    for (;;) {
      Request req;
      http::read(*sock, buffer, req, ec);
      if (ec) break;
      if (websocket::is_upgrade(req)) {
        try {
          stream(*sock, req);
        } catch (const std::exception&) {
        }
        break;
      }
      Response res = route(req);
      http::write(*sock, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    sock->shutdown(tcp::socket::shutdown_both, ec);
    sock->close(ec);
    std::lock_guard lock(connMutex);
    sockets.erase(sock);
  }

  void accept_loop() {
    for (;;) {
      auto sock = std::make_shared<tcp::socket>(ioc);
      beast::error_code ec;
      acceptor->accept(*sock, ec);
      if (stopping) break;
      if (ec) continue;
      sock->set_option(tcp::no_delay(true), ec);
      std::lock_guard lock(connMutex);
      sockets.insert(sock);
      workers.emplace_back([this, sock] { serve(sock); });
    }
  }
};

SessionService::SessionService(AppConfig cfg) : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  impl_->cfg = std::move(cfg);
}

SessionService::~SessionService() { stop(); }

unsigned short SessionService::start() {
  auto& im = *impl_;
  beast::error_code ec;
  const auto addr = asio::ip::make_address(im.cfg.host, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "bad host: " + im.cfg.host);
  im.acceptor = std::make_unique<tcp::acceptor>(im.ioc);
  tcp::endpoint ep(addr, static_cast<unsigned short>(im.cfg.port));
  im.acceptor->open(ep.protocol(), ec);
  if (!ec) im.acceptor->set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor->bind(ep, ec);
  if (!ec) im.acceptor->listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot listen on " + im.cfg.host + ":" + std::to_string(im.cfg.port) + ": " + ec.message());
  port_ = im.acceptor->local_endpoint().port();
  im.endpoint = tcp::endpoint(addr, port_);
  im.acceptThread = std::thread([&im] { im.accept_loop(); });
  return port_;
}

void SessionService::wait() {
  std::unique_lock lock(impl_->connMutex);
  impl_->stopped.wait(lock, [this] { return impl_->done; });
}

void SessionService::stop() {
  auto& im = *impl_;
  if (!im.acceptor || im.stopping.exchange(true)) return;
  beast::error_code ec;
  {
    // Wake the blocking accept.
    tcp::socket poke(im.ioc);
    poke.connect(im.endpoint, ec);
  }
  if (im.acceptThread.joinable()) im.acceptThread.join();
  im.acceptor->close(ec);
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(im.connMutex);
    for (const auto& s : im.sockets) s->shutdown(tcp::socket::shutdown_both, ec);
    workers.swap(im.workers);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
  {
    std::lock_guard lock(im.sessionsMutex);
    for (auto& [id, entry] : im.sessions) {
      std::lock_guard l(entry->mutex);
      if (!entry->report) entry->report = entry->session->close();
    }
  }
  {
    std::lock_guard lock(im.connMutex);
    im.done = true;
  }
  im.stopped.notify_all();
}

}  // namespace fingereye::harness
