// Command-line front end: planning, gesture training, scenario runs,
// metric recomputation and the HTTP service.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/andor/paths.hpp"
#include "flexhrc/error.hpp"
#include "flexhrc/orchestrator/session.hpp"
#include "flexhrc/recognition/features.hpp"
#include "flexhrc/recognition/model.hpp"
#include "flexhrc/recognition/synth.hpp"
#include "flexhrc/service/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flexhrc;

namespace {

int cmd_plan(const fs::path& graph_path, bool as_json) {
  const auto g = andor::AndOrGraph::load(graph_path);
  auto paths = andor::generate_all_paths(g);
  andor::apply_color_tags(g, paths, g.color_tags());
  const auto best = andor::find_optimal_path(g, paths);
  if (as_json) {
    json out{{"nodes", g.nodes().size()}, {"arcs", g.arcs().size()}, {"paths", andor::path_report(g, paths)}};
    out["optimal"] = best ? json(paths[*best].id) : json(nullptr);
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << g.nodes().size() << " nodes, " << g.arcs().size() << " hyper-arcs, " << paths.size() << " paths\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    std::cout << (best && *best == i ? "* " : "  ") << p.id << " cost " << p.cost;
    if (p.color_tag) std::cout << " (" << *p.color_tag << ")";
    std::cout << ":";
    for (auto a : p.arcs) std::cout << " " << g.arc(a).id;
    std::cout << "\n";
  }
  return 0;
}

int cmd_synth(const fs::path& out, int count, double noise, std::uint64_t seed) {
  for (const auto& g : recognition::gesture_templates()) {
    const fs::path dir = out / g.slug;
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "trial_%02d.csv", i);
      recognition::write_stream_csv(dir / name, recognition::synthesize_trial(g, noise, seed + i));
    }
    std::cout << dir.string() << ": " << count << " trials\n";
  }
  return 0;
}

int cmd_train(const fs::path& trials_dir, const fs::path& out, int length, std::uint64_t seed) {
  fs::create_directories(out);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(trials_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorKind::invalid_argument, "no trial directories under " + trials_dir.string());
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::vector<recognition::FeatureFrame>> trials;
    for (const auto& f : files) trials.push_back(recognition::extract_features(recognition::read_stream_csv(f)));
    const std::string slug = dir.filename().string();
    std::string name = slug;
    for (const auto& g : recognition::gesture_templates())
      if (g.slug == slug) name = g.name;
    recognition::TrainingConfig config;
    config.length = length;
    config.seed = seed;
    const auto model = recognition::train_model(name, trials, config);
    model.save(out / (slug + ".json"));
    std::cout << slug << ": " << trials.size() << " trials, " << model.n_gaussians << " components, "
              << model.native_length << " samples -> " << (out / (slug + ".json")).string() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& scenario_name, const std::string& trace_out, std::optional<std::uint64_t> seed,
            bool tokens) {
  auto scenario = orchestrator::Scenario::load(orchestrator::scenario_path(scenario_name));
  if (seed) scenario.seed = *seed;
  if (tokens) scenario.input = orchestrator::InputMode::tokens;
  orchestrator::Session session(std::move(scenario));
  session.run();
  if (!trace_out.empty()) session.trace().write(trace_out);
  json out{{"scenario", session.scenario().name},
           {"mode", orchestrator::to_string(session.mode())},
           {"reason", session.end_reason()},
           {"metrics", session.ledger().metrics().to_json()},
           {"records", session.trace().size()},
           {"trace_hash", session.trace().hash_hex()}};
  std::cout << out.dump(2) << "\n";
  return session.mode() == orchestrator::SessionMode::solved ? 0 : 2;
}

int cmd_metrics(const fs::path& trace_path) {
  const auto records = orchestrator::read_trace(trace_path);
  const auto recomputed = orchestrator::recompute_metrics(records);
  std::optional<orchestrator::Metrics> stored;
  for (const auto& r : records)
    if (r.value("type", "") == "session_end") stored = orchestrator::Metrics::from_json(r.at("metrics"));
  json out{{"recomputed", recomputed.to_json()}};
  if (stored) {
    out["stored"] = stored->to_json();
    out["match"] = *stored == recomputed;
  }
  std::cout << out.dump(2) << "\n";
  return stored && *stored == recomputed ? 0 : 3;
}

service::Server* g_server = nullptr;

int cmd_serve(std::string bind, const fs::path& assets) {
  if (bind.empty()) {
    const char* env = std::getenv("FLEXHRC_BIND");
    bind = env ? env : "127.0.0.1:8080";
  }
  const auto [host, port] = service::parse_bind(bind);
  service::ServerConfig config;
  config.host = host;
  config.port = port;
  config.asset_dir = assets;
  service::Server server(config);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on " << host << ":" << port << "\n" << std::flush;
  const bool ok = server.listen();
  g_server = nullptr;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FlexHRC: flexible human-robot cooperation planner, recognizer and simulator"};
  app.require_subcommand(1);

  auto* plan = app.add_subcommand("plan", "Enumerate the cooperation paths of a task graph");
  fs::path graph_path = fs::path(FLEXHRC_ASSET_DIR) / "screwing_task.json";
  bool plan_json = false;
  plan->add_option("graph", graph_path, "Graph JSON")->check(CLI::ExistingFile);
  plan->add_flag("--json", plan_json, "Structured output");

  auto* synth = app.add_subcommand("synth-trials", "Write synthetic training recordings for every gesture");
  fs::path synth_out = fs::path(FLEXHRC_ASSET_DIR) / "trials";
  int synth_count = 10;
  double synth_noise = 0.05;
  std::uint64_t synth_seed = 1000;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--count", synth_count, "Trials per gesture")->check(CLI::Range(2, 1000));
  synth->add_option("--noise", synth_noise, "Noise standard deviation [m/s^2]")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "Seed of the first trial");

  auto* train = app.add_subcommand("train", "Train one gesture model per trial directory");
  fs::path train_in = fs::path(FLEXHRC_ASSET_DIR) / "trials";
  fs::path train_out = fs::path(FLEXHRC_ASSET_DIR) / "gestures";
  int train_length = 100;
  std::uint64_t train_seed = 1;
  train->add_option("--trials", train_in, "Directory of <gesture>/trial_XX.csv")->check(CLI::ExistingDirectory);
  train->add_option("--out", train_out, "Model output directory");
  train->add_option("--length", train_length, "Model curve length L")->check(CLI::Range(4, 10000));
  train->add_option("--seed", train_seed, "Clustering seed");

  auto* run = app.add_subcommand("run", "Run a scripted scenario to completion");
  std::string run_scenario;
  std::string run_trace;
  std::optional<std::uint64_t> run_seed;
  bool run_tokens = false;
  run->add_option("scenario", run_scenario, "Scenario name (assets/scenarios) or path")->required();
  run->add_option("--trace", run_trace, "Write the NDJSON trace here");
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_flag("--tokens", run_tokens, "Inject recognized actions instead of inertial streams");

  auto* metrics = app.add_subcommand("metrics", "Recompute timing metrics from a trace and compare");
  fs::path metrics_trace;
  metrics->add_option("trace", metrics_trace, "NDJSON trace")->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP/JSON interface and the console");
  std::string serve_bind;
  fs::path serve_assets = FLEXHRC_ASSET_DIR;
  serve->add_option("--bind", serve_bind, "host:port (default: FLEXHRC_BIND or 127.0.0.1:8080)");
  serve->add_option("--assets", serve_assets, "Asset directory")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(graph_path, plan_json);
    if (*synth) return cmd_synth(synth_out, synth_count, synth_noise, synth_seed);
    if (*train) return cmd_train(train_in, train_out, train_length, train_seed);
    if (*run) return cmd_run(run_scenario, run_trace, run_seed, run_tokens);
    if (*metrics) return cmd_metrics(metrics_trace);
    if (*serve) return cmd_serve(serve_bind, serve_assets);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
