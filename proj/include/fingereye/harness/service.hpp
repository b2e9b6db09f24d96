#pragma once

#include "fingereye/harness/config.hpp"
#include "fingereye/harness/live.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fingereye::harness {

/// Local session service.
///   POST   /sessions                 -> {sessionId, mode, geometry, pagePng (base64)}
///   GET    /sessions/{id}/page.png
///   GET    /sessions/{id}/log        trajectory JSONL (?kind=commands for the command log)
///   DELETE /sessions/{id}            closes the session, returns the MetricsReport
///   WS     /sessions/{id}/stream     client {"t","x","y"}; server geometry message first,
///                                    then {"t","kind","strength","dots16"} at pipeline cadence
/// Unknown sessions answer 404; malformed samples get an {"error",...} message
/// and the stream stays open. One thread per connection; sessions lock
/// individually.
class SessionService {
 public:
  explicit SessionService(AppConfig cfg);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Binds and starts accepting in the background; returns the bound port
  /// (useful with port 0).
  unsigned short start();
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();
  unsigned short port() const { return port_; }

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
};

}  // namespace fingereye::harness
