#include "flexhrc/service/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/andor/paths.hpp"
#include "flexhrc/error.hpp"
#include "flexhrc/orchestrator/session.hpp"

// After Eigen: the resolver header pulled in here defines a macro that
// collides with Eigen parameter names.
#include <httplib.h>

namespace flexhrc::service {

namespace fs = std::filesystem;
using nlohmann::json;
using orchestrator::Micros;
using orchestrator::Session;

std::pair<std::string, int> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : text.substr(0, colon);
  const std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
  if (host.empty()) host = "127.0.0.1";
  std::size_t used = 0;
  int p = -1;
  try {
    p = std::stoi(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || p < 0 || p > 65535)
    throw Error(ErrorKind::invalid_argument, "bind address '" + text + "' (expected host:port)");
  return {host, p};
}

namespace {

struct HttpError {
  int status;
  std::string message;
};

[[noreturn]] void fail(int status, std::string message) { throw HttpError{status, std::move(message)}; }

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unknown_id: return 404;
    case ErrorKind::invalid_state:
    case ErrorKind::cooperation_failed:
    case ErrorKind::deadlock: return 409;
    default: return 400;
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) fail(400, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(400, std::string("malformed JSON: ") + e.what());
  }
}

struct SessionEntry {
  int id = 0;
  bool wall = false;
  std::mutex mutex;
  std::condition_variable changed;
  std::unique_ptr<Session> session;
  std::chrono::steady_clock::time_point started;
};

}  // namespace

struct Server::Impl {
  ServerConfig config;
  httplib::Server http;
  std::mutex registry_mutex;
  std::map<int, std::shared_ptr<SessionEntry>> sessions;
  int next_id = 1;
  std::atomic<bool> stopping{false};
  std::thread serve_thread;
  std::thread clock_thread;

  explicit Impl(ServerConfig c) : config(std::move(c)) {
    if (config.asset_dir.empty()) config.asset_dir = FLEXHRC_ASSET_DIR;
    routes();
  }

  std::shared_ptr<SessionEntry> find(const std::string& id_text) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(id_text, &used);
      if (used != id_text.size()) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      fail(404, "no session '" + id_text + "'");
    }
    std::lock_guard lock(registry_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) fail(404, "no session " + id_text);
    return it->second;
  }

  /// The session named by ?session=, else the most recent one (may be null).
  std::shared_ptr<SessionEntry> selected(const httplib::Request& req) {
    if (req.has_param("session")) return find(req.get_param_value("session"));
    std::lock_guard lock(registry_mutex);
    return sessions.empty() ? nullptr : sessions.rbegin()->second;
  }

  static void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        reply(res, {{"error", e.message}}, e.status);
      } catch (const Error& e) {
        reply(res, {{"error", e.what()}}, status_for(e.kind()));
      } catch (const json::exception& e) {
        reply(res, {{"error", e.what()}}, 400);
      }
    };
  }

  static json status_json(SessionEntry& e) {
    const auto& s = *e.session;
    json out{{"id", e.id},
             {"scenario", s.scenario().name},
             {"clock", e.wall ? "wall" : "manual"},
             {"mode", orchestrator::to_string(s.mode())},
             {"t", s.now()},
             {"events", s.trace().size()},
             {"trace_hash", s.trace().hash_hex()}};
    if (s.ended()) {
      out["reason"] = s.end_reason();
      out["metrics"] = s.ledger().metrics().to_json();
    }
    return out;
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.contains("scenario") || !body["scenario"].is_string()) fail(400, "'scenario' (string) is required");
    const std::string clock = body.value("clock", std::string("manual"));
    if (clock != "manual" && clock != "wall") fail(400, "clock must be 'manual' or 'wall'");
    const std::string name = body["scenario"].get<std::string>();
    if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
      fail(400, "scenario must be a bundled scenario name");
    const fs::path path = config.asset_dir / "scenarios" / (name + ".json");
    if (!fs::exists(path)) fail(404, "no scenario '" + name + "'");
    auto scenario = orchestrator::Scenario::load(path);
    if (body.contains("seed")) scenario.seed = body["seed"].get<std::uint64_t>();

    auto entry = std::make_shared<SessionEntry>();
    entry->wall = clock == "wall";
    entry->session = std::make_unique<Session>(std::move(scenario), body.value("scripted", false));
    entry->started = std::chrono::steady_clock::now();
    SessionEntry* raw = entry.get();
    entry->session->trace().set_listener([raw](std::uint64_t, const std::string&) { raw->changed.notify_all(); });
    {
      std::lock_guard lock(registry_mutex);
      entry->id = next_id++;
      sessions[entry->id] = entry;
    }
    std::lock_guard lock(entry->mutex);
    reply(res, status_json(*entry), 201);
  }

  void stream_events(const httplib::Request& req, httplib::Response& res, std::shared_ptr<SessionEntry> entry) {
    std::uint64_t from = 1;
    if (req.has_header("Last-Event-ID")) {
      try {
        from = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
      } catch (const std::exception&) {
        fail(400, "malformed Last-Event-ID");
      }
    } else if (req.has_param("from")) {
      try {
        from = std::max<std::uint64_t>(1, std::stoull(req.get_param_value("from")));
      } catch (const std::exception&) {
        fail(400, "malformed 'from'");
      }
    }
    auto cursor = std::make_shared<std::uint64_t>(from);
    const std::size_t max_lag = config.max_lag;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, entry, cursor, max_lag](std::size_t, httplib::DataSink& sink) {
          std::unique_lock lock(entry->mutex);
          entry->changed.wait_for(lock, std::chrono::milliseconds(200), [&] {
            return stopping.load() || entry->session->trace().size() >= *cursor || entry->session->ended();
          });
          const auto& trace = entry->session->trace();
          if (trace.size() + 1 > *cursor && trace.size() + 1 - *cursor > max_lag) {
            lock.unlock();
            const std::string msg = "event: overflow\ndata: {\"error\":\"client fell too far behind\"}\n\n";
            sink.write(msg.data(), msg.size());
            sink.done();
            return true;
          }
          std::string chunk;
          for (; *cursor <= trace.size(); ++*cursor)
            chunk += "id: " + std::to_string(*cursor) + "\ndata: " + trace.line(*cursor) + "\n\n";
          const bool finished = entry->session->ended() && *cursor > trace.size();
          lock.unlock();
          if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
          if (finished || stopping.load()) sink.done();
          return true;
        });
  }

  void routes() {
    http.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) { reply(res, {{"ok", true}}); }));

    http.Get("/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = selected(req);
      if (!entry) {
        const auto g = andor::AndOrGraph::load(config.asset_dir / "screwing_task.json");
        reply(res, {{"graph", g.to_json()}, {"state", g.state_json()}});
        return;
      }
      std::lock_guard lock(entry->mutex);
      const auto& g = entry->session->graph();
      reply(res, {{"session", entry->id}, {"graph", g.to_json()}, {"state", g.state_json()}});
    }));

    http.Get("/paths", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = selected(req);
      if (!entry) {
        const auto g = andor::AndOrGraph::load(config.asset_dir / "screwing_task.json");
        auto paths = andor::generate_all_paths(g);
        andor::apply_color_tags(g, paths, g.color_tags());
        reply(res, {{"paths", andor::path_report(g, paths)}});
        return;
      }
      std::lock_guard lock(entry->mutex);
      const auto& s = *entry->session;
      reply(res, {{"session", entry->id}, {"paths", andor::path_report(s.graph(), s.paths())}});
    }));

    http.Get("/suggestion", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = selected(req);
      if (!entry) fail(404, "no session has been created");
      std::lock_guard lock(entry->mutex);
      json out = entry->session->suggestion_json();
      out["session"] = entry->id;
      reply(res, out);
    }));

    http.Post("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
      create_session(req, res);
    }));

    http.Get(R"(/session/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = find(req.matches[1]);
      std::lock_guard lock(entry->mutex);
      reply(res, status_json(*entry));
    }));

    http.Post(R"(/session/([^/]+)/action)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = find(req.matches[1]);
      const json body = parse_body(req);
      if (!body.contains("action") || !body["action"].is_string()) fail(400, "'action' (string) is required");
      std::lock_guard lock(entry->mutex);
      auto& s = *entry->session;
      if (s.ended()) fail(409, "session has ended");
      std::optional<Micros> at;
      if (body.contains("at")) at = orchestrator::from_seconds(body["at"].get<double>());
      try {
        s.inject_action(body["action"].get<std::string>(), at);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::unknown_id) fail(400, e.what());
        throw;
      }
      reply(res, {{"accepted", true}, {"t", std::max(at.value_or(s.now()), s.now())}}, 202);
    }));

    http.Post(R"(/session/([^/]+)/stream)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = find(req.matches[1]);
      const json body = parse_body(req);
      if (!body.contains("samples") || !body["samples"].is_array()) fail(400, "'samples' (array) is required");
      std::vector<recognition::InertialSample> samples;
      for (const auto& j : body["samples"]) {
        recognition::InertialSample s;
        s.t = j.at("t").get<double>();
        const auto a = j.at("acc").get<std::array<double, 3>>();
        s.acc = {a[0], a[1], a[2]};
        samples.push_back(s);
      }
      std::lock_guard lock(entry->mutex);
      if (entry->session->ended()) fail(409, "session has ended");
      if (entry->session->scenario().models.empty()) fail(409, "scenario has no gesture models");
      entry->session->push_samples(samples);
      reply(res, {{"accepted", samples.size()}}, 202);
    }));

    http.Post(R"(/session/([^/]+)/advance)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = find(req.matches[1]);
      if (entry->wall) fail(409, "session runs on the wall clock");
      const json body = parse_body(req);
      std::lock_guard lock(entry->mutex);
      auto& s = *entry->session;
      if (body.value("until_idle", false)) {
        s.advance_until_idle();
      } else if (body.contains("to")) {
        const Micros to = orchestrator::from_seconds(body["to"].get<double>());
        if (to < s.now()) fail(400, "cannot advance into the past");
        s.advance_to(to);
      } else {
        fail(400, "expected 'to' (seconds) or 'until_idle': true");
      }
      reply(res, status_json(*entry));
    }));

    http.Get(R"(/session/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      stream_events(req, res, find(req.matches[1]));
    }));

    http.Get(R"(/session/([^/]+)/trace)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto entry = find(req.matches[1]);
      std::lock_guard lock(entry->mutex);
      res.set_content(entry->session->trace().text(), "application/x-ndjson");
    }));

    http.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
    http.set_mount_point("/ui", (config.asset_dir / "ui").string());
  }

  /// Advances wall-clock sessions to the elapsed real time.
  void run_clock() {
    while (!stopping.load()) {
      std::vector<std::shared_ptr<SessionEntry>> live;
      {
        std::lock_guard lock(registry_mutex);
        for (auto& [id, e] : sessions)
          if (e->wall) live.push_back(e);
      }
      const auto now = std::chrono::steady_clock::now();
      for (auto& e : live) {
        std::lock_guard lock(e->mutex);
        if (e->session->ended()) continue;
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(now - e->started).count();
        e->session->advance_to(us);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

int Server::start() {
  auto& im = *impl_;
  int port = im.config.port;
  if (port == 0) {
    port = im.http.bind_to_any_port(im.config.host);
  } else if (!im.http.bind_to_port(im.config.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorKind::invalid_state, "cannot bind " + im.config.host + ":" + std::to_string(im.config.port));
  im.clock_thread = std::thread([&im] { im.run_clock(); });
  im.serve_thread = std::thread([&im] { im.http.listen_after_bind(); });
  im.http.wait_until_ready();
  return port;
}

bool Server::listen() {
  auto& im = *impl_;
  im.clock_thread = std::thread([&im] { im.run_clock(); });
  const bool ok = im.http.listen(im.config.host, im.config.port);
  return ok;
}

void Server::stop() {
  if (!impl_) return;
  auto& im = *impl_;
  im.stopping.store(true);
  {
    std::lock_guard lock(im.registry_mutex);
    for (auto& [id, e] : im.sessions) e->changed.notify_all();
  }
  im.http.stop();
  if (im.serve_thread.joinable()) im.serve_thread.join();
  if (im.clock_thread.joinable()) im.clock_thread.join();
}

}  // namespace flexhrc::service
