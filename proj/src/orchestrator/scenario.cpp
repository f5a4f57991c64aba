#include "flexhrc/orchestrator/scenario.hpp"

#include <fstream>

#include "flexhrc/error.hpp"

namespace flexhrc::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

robotsim::World default_world() {
  auto w = robotsim::World::dual_arm();
  w.objects().push_back({"plate", {0.55, 0.45, 0.0}, std::nullopt, {}});
  return w;
}

ScriptEntry entry_from_json(const json& j) {
  ScriptEntry e;
  e.action = j.at("action").get<std::string>();
  if (j.contains("at")) e.at = j.at("at").get<double>();
  e.delay = j.value("delay", 0.0);
  const auto after = j.value("after", std::string("expected"));
  if (after == "expected")
    e.after = ScriptEntry::Anchor::expected;
  else if (after == "previous")
    e.after = ScriptEntry::Anchor::previous;
  else
    throw Error(ErrorKind::invalid_argument, "script anchor '" + after + "'");
  if ((e.at && *e.at < 0) || e.delay < 0) throw Error(ErrorKind::invalid_argument, "negative script time");
  return e;
}

}  // namespace

Scenario Scenario::from_json(const json& doc, const fs::path& base_dir) {
  Scenario s;
  try {
    s.name = doc.value("name", std::string("scenario"));
    s.graph = andor::AndOrGraph::load(base_dir / doc.at("graph").get<std::string>());
    if (doc.contains("models")) {
      s.models = recognition::load_model_directory(base_dir / doc.at("models").get<std::string>());
      for (const auto& m : s.models)
        if (!s.graph.knows_action(m.name, andor::Agent::human))
          throw Error(ErrorKind::unknown_id, "gesture model '" + m.name + "' is not a human action of the graph");
    }
    s.world = doc.contains("world") ? robotsim::World::from_json(doc.at("world")) : default_world();
    s.programs = doc.contains("programs") ? programs_from_json(doc.at("programs")) : default_programs();
    if (doc.contains("gains")) s.controller.gains = tpik::ObjectiveGains::from_json(doc.at("gains"));
    s.seed = doc.value("seed", std::uint64_t{1});
    const auto input = doc.value("input", std::string("stream"));
    if (input == "stream")
      s.input = InputMode::stream;
    else if (input == "tokens")
      s.input = InputMode::tokens;
    else
      throw Error(ErrorKind::invalid_argument, "input mode '" + input + "'");
    s.noise = doc.value("noise", s.noise);
    s.tick_hz = doc.value("tick_hz", s.tick_hz);
    s.ambiguity_timeout = doc.value("ambiguity_timeout", s.ambiguity_timeout);
    s.max_time = doc.value("max_time", s.max_time);
    s.max_attempts = doc.value("max_attempts", s.max_attempts);
    if (doc.contains("robot_failures")) s.robot_failures = doc.at("robot_failures").get<std::map<std::string, int>>();
    for (const auto& j : doc.value("script", json::array())) s.script.push_back(entry_from_json(j));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "scenario: " + std::string(e.what()));
  }
  if (s.tick_hz <= 0 || 1'000'000 % s.tick_hz != 0)
    throw Error(ErrorKind::invalid_argument, "tick_hz must divide one second in microseconds");
  if (!(s.ambiguity_timeout > 0) || !(s.max_time > 0) || s.max_attempts < 1 || s.noise < 0)
    throw Error(ErrorKind::invalid_argument, "scenario timing parameters out of range");
  if (s.input == InputMode::stream && !s.script.empty() && s.models.empty())
    throw Error(ErrorKind::invalid_argument, "stream input needs gesture models");
  for (const auto& e : s.script)
    if (!s.graph.knows_action(e.action, andor::Agent::human))
      throw Error(ErrorKind::unknown_id, "scripted action '" + e.action + "'");
  for (const auto& [id, n] : s.robot_failures)
    if (!s.graph.knows_action(id, andor::Agent::robot) || n < 0)
      throw Error(ErrorKind::invalid_argument, "robot failure entry '" + id + "'");
  for (const auto& arc : s.graph.arcs())
    for (const auto& a : arc.actions)
      if (a.agent == andor::Agent::robot && !s.programs.count(a.name))
        throw Error(ErrorKind::unknown_id, "no motion program for robot action '" + a.name + "'");
  s.controller.tick = 1'000'000 / s.tick_hz;
  return s;
}

Scenario Scenario::load(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::parse, "cannot read scenario " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  auto s = from_json(doc, path.parent_path());
  if (!doc.contains("name")) s.name = path.stem().string();
  return s;
}

fs::path scenario_path(const std::string& name_or_path) {
  const fs::path p(name_or_path);
  if (p.has_extension() || p.has_parent_path()) return p;
  return fs::path(FLEXHRC_ASSET_DIR) / "scenarios" / (name_or_path + ".json");
}

}  // namespace flexhrc::orchestrator
