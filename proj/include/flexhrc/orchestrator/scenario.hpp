#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexhrc/andor/graph.hpp"
#include "flexhrc/orchestrator/controller.hpp"
#include "flexhrc/recognition/model.hpp"
#include "flexhrc/robotsim/world.hpp"

namespace flexhrc::orchestrator {

/// One scripted human gesture. Its onset is either absolute (`at`), or
/// `delay` seconds after an anchor: the moment the action became expected by
/// the planner (the default), or the recognition of the previous entry.
struct ScriptEntry {
  enum class Anchor { expected, previous };
  std::string action;
  std::optional<double> at;
  double delay = 0.0;
  Anchor after = Anchor::expected;
};

enum class InputMode {
  stream,  // synthesized inertial samples through the gesture recognizer
  tokens,  // recognized actions injected directly
};

struct Scenario {
  std::string name;
  andor::AndOrGraph graph;
  std::vector<recognition::GestureModel> models;
  robotsim::World world;
  ProgramLibrary programs;
  ControllerConfig controller;
  std::uint64_t seed = 1;
  InputMode input = InputMode::stream;
  double noise = 0.05;
  int tick_hz = 100;
  double ambiguity_timeout = 30.0;
  double max_time = 300.0;
  int max_attempts = 3;
  /// Injected failures: the first n attempts of the named robot action fail.
  std::map<std::string, int> robot_failures;
  std::vector<ScriptEntry> script;

  /// Reads a scenario document; relative paths resolve against `base_dir`.
  static Scenario from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static Scenario load(const std::filesystem::path& path);
};

/// Scenario file by name ("blue") or path, looked up in assets/scenarios.
std::filesystem::path scenario_path(const std::string& name_or_path);

}  // namespace flexhrc::orchestrator
