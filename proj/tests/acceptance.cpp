// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/andor/paths.hpp"
#include "flexhrc/andor/planner.hpp"
#include "flexhrc/error.hpp"
#include "flexhrc/orchestrator/ledger.hpp"
#include "flexhrc/orchestrator/scenario.hpp"
#include "flexhrc/orchestrator/session.hpp"
#include "flexhrc/orchestrator/trace.hpp"
#include "flexhrc/recognition/detector.hpp"
#include "flexhrc/recognition/synth.hpp"
#include "flexhrc/tpik/solver.hpp"
#include "support/gesture_fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_graph.hpp"
#include "support/timeline.hpp"

namespace fs = std::filesystem;
using namespace flexhrc;
using nlohmann::json;
using orchestrator::Micros;
using orchestrator::Session;
using orchestrator::SessionMode;

namespace {

/// Collects the reasons a criterion failed; empty means pass.
struct Verdict {
  std::vector<std::string> failures;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << std::fixed << v;
  return o.str();
}

std::vector<json> records(const Session& s) { return orchestrator::parse_trace(s.trace().text()); }

/// Scripted scenario runs shared by several criteria.
struct Runs {
  std::map<std::string, std::unique_ptr<Session>> by_name;

  const Session& get(const std::string& name) {
    auto& s = by_name[name];
    if (!s) {
      s = std::make_unique<Session>(orchestrator::Scenario::load(orchestrator::scenario_path(name)));
      s->run();
    }
    return *s;
  }
};

const std::vector<std::string> kScenarios = {"blue", "black", "red", "obstacle"};

// ---------------------------------------------------------------------------

Verdict p1() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto g = andor::AndOrGraph::load(fs::path(FLEXHRC_ASSET_DIR) / "screwing_task.json");
  auto paths = andor::generate_all_paths(g);
  andor::apply_color_tags(g, paths, g.color_tags());
  const double elapsed = seconds_since(t0);
  v.require(g.nodes().size() == 9, "node count " + std::to_string(g.nodes().size()));
  v.require(g.arcs().size() == 9, "arc count " + std::to_string(g.arcs().size()));
  v.require(paths.size() == 3, "path count " + std::to_string(paths.size()));
  const auto blue = std::find_if(paths.begin(), paths.end(), [](const auto& p) { return p.color_tag == "blue"; });
  v.require(blue != paths.end(), "no blue path");
  if (blue != paths.end()) v.require(blue->cost == 14.0, "blue cost " + fmt(blue->cost));
  const auto opt = andor::find_optimal_path(g, paths);
  v.require(opt && paths[*opt].color_tag == "blue", "blue is not the optimal path");
  v.require(elapsed < 1.0, "took " + fmt(elapsed) + " s");
  v.detail = "9 nodes, 9 arcs, " + std::to_string(paths.size()) + " paths, blue cost " +
             (blue != paths.end() ? fmt(blue->cost, 0) : "-") + ", " + fmt(elapsed * 1e3, 1) + " ms";
  return v;
}

/// Planning-level outline of a trace: suggestions, completions, switches,
/// mode changes and robot hand-overs.
std::vector<std::string> outline(const std::vector<json>& recs) {
  std::vector<std::string> out;
  for (const auto& r : recs) {
    const std::string type = r["type"];
    if (type == "suggestion" || type == "action_ended")
      out.push_back(type + ":" + r["action"].get<std::string>());
    else if (type == "switch")
      out.push_back("switch:" + r["from_color"].get<std::string>() + "->" + r["to_color"].get<std::string>());
    else if (type == "mode")
      out.push_back("mode:" + r["to"].get<std::string>());
    else if (type == "robot_relabel" || type == "robot_preempted" || type == "ambiguous")
      out.push_back(type);
  }
  return out;
}

Verdict p2(Runs& runs) {
  Verdict v;
  const auto& s = runs.get("black");
  const auto recs = records(s);
  const std::vector<std::string> expected = {
      "suggestion:a_plate_pick",
      "action_ended:initial bolt sink",
      "switch:blue->black",
      "robot_relabel",
      "suggestion:a_plate_pick_bolted",
      "action_ended:a_plate_pick_bolted",
      "suggestion:a_black_pickup",
      "action_ended:bolt or screwdriver pick up",
      "suggestion:a_black_screw",
      "action_ended:bolt screw",
      "suggestion:a_black_putdown",
      "action_ended:screwdriver put down",
      "suggestion:a_plate_put_down",
      "action_ended:a_plate_put_down",
      "suggestion:a_reset",
      "action_ended:a_reset",
      "mode:solved",
  };
  const auto got = outline(recs);
  v.require(got == expected, "event sequence differs: " + json(got).dump());
  v.require(s.mode() == SessionMode::solved, "session " + std::string(orchestrator::to_string(s.mode())));
  v.require(s.ledger().metrics().switches == 1, "switches " + std::to_string(s.ledger().metrics().switches));

  // The first human action is the sink, delivered while blue is current.
  std::optional<Micros> t_sink, t_switch, t_next;
  for (const auto& r : recs) {
    if (r["type"] == "human_action" && !t_sink) {
      v.require(r["action"] == "initial bolt sink", "first human action " + r["action"].dump());
      t_sink = r["t"].get<Micros>();
    }
    if (r["type"] == "switch" && !t_switch) t_switch = r["t"].get<Micros>();
    if (t_switch && !t_next && r["type"] == "suggestion") {
      t_next = r["t"].get<Micros>();
      v.require(r["agent"] == "robot" && r["action"] == "a_plate_pick_bolted", "next suggestion " + r.dump());
    }
  }
  v.require(t_sink && t_switch && t_next, "sink, switch or follow-up suggestion missing");
  if (t_next) v.require(*t_next < orchestrator::from_seconds(10.0), "switch resolved at " + fmt(orchestrator::to_seconds(*t_next)));
  v.detail = "switch blue->black at " + (t_switch ? fmt(orchestrator::to_seconds(*t_switch), 3) : "-") +
             " s, robot plate pick-up suggested at " + (t_next ? fmt(orchestrator::to_seconds(*t_next), 3) : "-") +
             " s simulated, solved at " + fmt(orchestrator::to_seconds(s.now()), 2) + " s";
  return v;
}

Verdict p3(Runs& runs) {
  Verdict v;
  std::string detail;
  for (const char* name : {"blue", "black", "red"}) {
    const auto& s = runs.get(name);
    const auto& m = s.ledger().metrics();
    const double pct = m.percent(m.t_ao);
    v.require(s.mode() == SessionMode::solved, std::string(name) + " did not solve");
    v.require(pct < 1.0, std::string(name) + " T_ao " + fmt(pct) + "%");
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt(pct, 3) + "%";
  }
  v.detail = "T_ao share: " + detail;
  return v;
}

Verdict p4() {
  Verdict v;
  const auto t0 = Clock::now();
  int suggestions = 0, total_paths = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto g = andor::AndOrGraph::from_json(testing::random_graph_document(seed));
    auto paths = andor::generate_all_paths(g);
    total_paths += static_cast<int>(paths.size());
    std::set<testing::ArcSet> got;
    for (const auto& p : paths) got.insert(testing::ArcSet(p.arcs.begin(), p.arcs.end()));
    if (got.size() != paths.size() || got != testing::brute_force_paths(g)) {
      v.require(false, "path set differs for seed " + std::to_string(seed));
      continue;
    }

    std::vector<andor::NodeIndex> solved_log;
    std::optional<andor::NodeIndex> last;
    for (int step = 0; step < 64; ++step) {
      andor::Suggestion s;
      try {
        s = andor::next_suggested_node(g, paths, last);
      } catch (const Error& e) {
        v.require(e.kind() == ErrorKind::deadlock, "seed " + std::to_string(seed) + ": " + e.what());
        break;
      }
      if (s.graph_solved) break;
      // Oracle argmin, residuals recomputed from scratch; ties go to the lowest index.
      double best = 1e300;
      std::optional<std::size_t> argmin;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].abandoned(g)) continue;
        const double c = testing::oracle_residual_cost(
            g, testing::ArcSet(paths[i].arcs.begin(), paths[i].arcs.end()), solved_log);
        if (std::abs(c - paths[i].cost) > 1e-9)
          v.require(false, "seed " + std::to_string(seed) + ": residual of " + paths[i].id + " drifted");
        if (c < best - 1e-9) {
          best = c;
          argmin = i;
        }
      }
      ++suggestions;
      if (!s.path || s.path != argmin) {
        v.require(false, "seed " + std::to_string(seed) + " step " + std::to_string(step) + ": suggestion on " +
                             (s.path ? paths[*s.path].id : "none") + ", oracle " +
                             (argmin ? paths[*argmin].id : "none"));
        break;
      }
      if (!s.arc) break;
      last.reset();
      for (const auto& a : g.arc(*s.arc).actions) {
        for (andor::NodeIndex n : andor::register_action_ended(g, a.id, a.agent, *s.arc).solved) {
          solved_log.push_back(n);
          last = n;
        }
      }
      if (!last) break;
    }
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 30.0, "took " + fmt(elapsed) + " s");
  if (v.failures.size() > 5) v.failures.resize(5);
  v.detail = "200 graphs, " + std::to_string(total_paths) + " paths, " + std::to_string(suggestions) +
             " suggestions checked, " + fmt(elapsed, 2) + " s";
  return v;
}

Verdict p5() {
  Verdict v;
  const auto models = orchestrator::Scenario::load(orchestrator::scenario_path("blue")).models;
  std::ostringstream detail;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::string& name = models[m].name;
    // Noiseless replay: near-unit peak and firing at the first sample after
    // the peak whose value has fallen to 90% of it.
    recognition::GestureRecognizer rec(models);
    const auto s = recognition::synthesize_gesture_stream(models[m], 0.0, 0);
    std::vector<recognition::GestureEvent> events;
    std::vector<std::pair<double, double>> trace;
    for (const auto& x : s.samples) {
      if (auto e = rec.push(x)) events.push_back(*e);
      trace.emplace_back(x.t, rec.traces()[m].value);
    }
    v.require(events.size() == 1 && events[0].model == m, name + ": noiseless replay did not fire once for itself");
    if (!events.empty()) {
      const auto& e = events[0];
      v.require(e.peak >= 0.99, name + ": peak " + fmt(e.peak));
      const auto peak_it = std::max_element(trace.begin(), trace.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
      const auto cross = std::find_if(peak_it, trace.end(), [&](const auto& p) { return p.second <= 0.9 * peak_it->second; });
      v.require(cross != trace.end() && cross->first == e.t_rec, name + ": fired off the 90% crossing");
    }

    const auto st = testing::detection_stats(models, m, 50, 0.05, 1000 + 100 * m);
    const double rate = static_cast<double>(st.correct) / st.trials;
    const double delay_share = st.delay_sum / st.duration_sum;
    v.require(rate >= 0.9, name + ": detection rate " + fmt(rate));
    v.require(delay_share <= 0.10, name + ": delay share " + fmt(delay_share));
    detail << (m ? "; " : "") << recognition::gesture_template(name).slug << " " << st.correct << "/" << st.trials
           << " delay " << fmt(100 * delay_share, 2) << "%";
  }
  v.detail = detail.str();
  return v;
}

Verdict p6() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0, 1);
  auto random = [&](Eigen::Index r, Eigen::Index c) { return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return n(rng); }).eval(); };
  auto level = [](const Eigen::MatrixXd& J, const Eigen::VectorXd& b) {
    return tpik::LevelProblem<double>{J, b, Eigen::VectorXd::Ones(J.rows())};
  };
  double worst_ls = 0, worst_priority = 0, worst_grad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd J = random(3, 8);
    const Eigen::VectorXd b = random(3, 1);
    const auto r = tpik::solve_hierarchy<double>({level(J, b)}, 8);
    worst_ls = std::max(worst_ls, (r.y_dot - testing::min_norm_oracle(J, b)).norm());

    const Eigen::MatrixXd J2 = random(6, 8);
    const Eigen::VectorXd b2 = random(6, 1);
    const auto both = tpik::solve_hierarchy<double>({level(J, b), level(J2, b2)}, 8);
    const double rel = (J * both.y_dot - J * r.y_dot).norm() / std::max(1.0, b.norm());
    worst_priority = std::max(worst_priority, rel);
  }
  std::size_t rows = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto w = testing::random_world(seed);
    for (const auto& var : testing::all_variables(w)) {
      worst_grad = std::max(worst_grad, testing::relative_gap(w.gradient(var), testing::fd_gradient(w, var)));
      ++rows;
    }
  }
  v.require(worst_ls <= 1e-8, "least-squares gap " + std::to_string(worst_ls));
  v.require(worst_priority <= 1e-6, "high-priority residual change " + std::to_string(worst_priority));
  v.require(worst_grad <= 1e-5, "Jacobian gap " + std::to_string(worst_grad));
  std::ostringstream d;
  d.precision(2);
  d << std::scientific << "LS gap " << worst_ls << ", priority drift " << worst_priority << ", Jacobian gap "
    << worst_grad << " over " << rows << " rows";
  v.detail = d.str();
  return v;
}

Verdict p7(Runs& runs) {
  Verdict v;
  const auto& s = runs.get("obstacle");
  const auto& safety = s.controller().safety();
  const auto& m = s.ledger().metrics();
  v.require(s.mode() == SessionMode::solved, "session " + std::string(orchestrator::to_string(s.mode())));
  v.require(!s.scenario().world.obstacles().empty(), "scenario has no obstacle");
  v.require(safety.min_clearance >= 0.0, "clearance " + fmt(safety.min_clearance));
  v.require(safety.max_limit_violation <= 1e-3, "limit violation " + fmt(safety.max_limit_violation, 6));
  v.require(safety.max_clearance_activation < 1.0, "activation " + fmt(safety.max_clearance_activation));
  v.require(safety.max_clearance_activation > 0.0, "obstacle never engaged");
  v.require(m.percent(m.t_ao) < 1.0, "T_ao " + fmt(m.percent(m.t_ao)) + "%");
  v.detail = "min clearance " + fmt(safety.min_clearance) + " m, max activation " +
             fmt(safety.max_clearance_activation, 3) + ", limit violation " + fmt(safety.max_limit_violation, 6) +
             " rad, T_ao " + fmt(m.percent(m.t_ao), 3) + "%";
  return v;
}

struct Command {
  int status = -1;
  std::string output;
};

Command shell(const std::string& cmd) {
  Command c;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return c;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) c.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

std::string cli_path() {
  if (const char* env = std::getenv("FLEXHRC_CLI"); env && *env) return env;
  return FLEXHRC_CLI_PATH;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Verdict p8(Runs& runs, const fs::path& work) {
  Verdict v;
  const std::string cli = cli_path();
  v.require(fs::exists(cli), "CLI not found at " + cli);
  int checked = 0;
  for (const auto& name : kScenarios) {
    const auto& s = runs.get(name);
    v.require(orchestrator::recompute_metrics(records(s)) == s.ledger().metrics(), name + ": in-process recompute differs");
    if (!fs::exists(cli)) continue;
    const fs::path trace = work / (name + ".ndjson");
    const auto run = shell("\"" + cli + "\" run " + name + " --trace \"" + trace.string() + "\"");
    v.require(run.status == 0, name + ": run exited " + std::to_string(run.status));
    const auto metrics = shell("\"" + cli + "\" metrics \"" + trace.string() + "\"");
    v.require(metrics.status == 0, name + ": metrics exited " + std::to_string(metrics.status));
    try {
      const auto out = json::parse(metrics.output);
      v.require(out.value("match", false), name + ": metrics reports a mismatch");
      v.require(orchestrator::Metrics::from_json(out.at("recomputed")) == s.ledger().metrics(),
                name + ": CLI recompute differs from the in-run ledger");
      ++checked;
    } catch (const json::exception& e) {
      v.require(false, name + ": unreadable metrics output: " + e.what());
    }
  }

  const auto tl = testing::reference_timeline();
  const auto& m = tl.ledger;
  const double h = m.percent(m.t_h), r = m.percent(m.t_r), ao = m.percent(m.t_ao);
  v.require(orchestrator::recompute_metrics(tl.records) == m, "timeline recompute differs");
  v.require(m.total == orchestrator::from_seconds(82.0), "timeline total " + fmt(orchestrator::to_seconds(m.total)));
  v.require(std::abs(h - 44.13) <= 0.01, "T_h " + fmt(h) + "%");
  v.require(std::abs(r - 55.56) <= 0.01, "T_r " + fmt(r) + "%");
  v.require(std::abs(ao - 0.09) <= 0.01, "T_ao " + fmt(ao) + "%");
  v.detail = std::to_string(checked) + " CLI traces match; 82 s timeline T_h " + fmt(h, 3) + "%, T_r " + fmt(r, 3) +
             "%, T_ao " + fmt(ao, 3) + "%";
  return v;
}

Verdict p9(Runs& runs, const fs::path& work) {
  Verdict v;
  std::string detail;
  for (const auto& name : kScenarios) {
    const auto& first = runs.get(name);
    Session again(orchestrator::Scenario::load(orchestrator::scenario_path(name)));
    again.run();
    v.require(again.trace().text() == first.trace().text(), name + ": rerun differs");
    const fs::path cli_trace = work / (name + ".ndjson");
    if (fs::exists(cli_trace))
      v.require(read_file(cli_trace) == first.trace().text(), name + ": CLI trace differs from the in-process run");
    detail += (detail.empty() ? "" : ", ") + name + " " + first.trace().hash_hex();
  }
  v.detail = "trace hashes: " + detail;
  return v;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("flexhrc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);
  Runs runs;

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"P1 path enumeration", p1},
      {"P2 model switch", [&] { return p2(runs); }},
      {"P3 reasoning overhead", [&] { return p3(runs); }},
      {"P4 planner oracle", p4},
      {"P5 recognition", p5},
      {"P6 TPIK correctness", p6},
      {"P7 reactive safety", [&] { return p7(runs); }},
      {"P8 metrics identities", [&] { return p8(runs, work); }},
      {"P9 determinism", [&] { return p9(runs, work); }},
  };

  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = v.failures.empty();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << v.detail << "\n";
    for (const auto& f : v.failures) std::cout << "     - " << f << "\n";
    std::cout << std::flush;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
