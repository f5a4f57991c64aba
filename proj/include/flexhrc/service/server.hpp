#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>

namespace flexhrc::service {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path asset_dir;
  /// A live event stream is closed once it falls this many records behind.
  std::size_t max_lag = 10'000;
};

/// "host:port" (or ":port", or "port") as accepted by FLEXHRC_BIND.
std::pair<std::string, int> parse_bind(const std::string& text);

/// HTTP/JSON interface to cooperation sessions plus a server-sent event
/// stream of each session's trace.
///
///   GET  /health
///   GET  /graph, /paths, /suggestion        ?session=<id>, default: latest
///   POST /session                           {scenario, clock, scripted, seed}
///   GET  /session/<id>                      status and metrics
///   POST /session/<id>/action               {action, at}
///   POST /session/<id>/stream               {samples: [{t, acc}]}
///   POST /session/<id>/advance              {to} or {until_idle: true}
///   GET  /session/<id>/events               text/event-stream, resumable
///   GET  /session/<id>/trace                NDJSON
///   GET  /ui/...                            static console files
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace flexhrc::service
