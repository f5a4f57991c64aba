#include "flexhrc/tpik/objective.hpp"

#include <algorithm>

#include "flexhrc/error.hpp"

namespace flexhrc::tpik {

using nlohmann::json;

const char* to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::equality: return "equality";
    case ObjectiveKind::inequality_min: return "inequality_min";
    case ObjectiveKind::inequality_max: return "inequality_max";
  }
  return "?";
}

ObjectiveKind objective_kind_from_string(std::string_view text) {
  for (auto k : {ObjectiveKind::equality, ObjectiveKind::inequality_min, ObjectiveKind::inequality_max})
    if (text == to_string(k)) return k;
  throw Error(ErrorKind::parse, "objective kind '" + std::string(text) + "'");
}

void ControlObjective::validate() const {
  if (!(gain > 0)) throw Error(ErrorKind::invalid_argument, id + ": gain must be positive");
  if (!(activation_buffer > 0)) throw Error(ErrorKind::invalid_argument, id + ": activation buffer must be positive");
  if (!(rate_limit > 0)) throw Error(ErrorKind::invalid_argument, id + ": rate limit must be positive");
  if (priority_level < 1) throw Error(ErrorKind::invalid_argument, id + ": priority levels start at 1");
}

bool RobotAction::owns(std::string_view id) const {
  return std::find(objective_ids.begin(), objective_ids.end(), id) != objective_ids.end();
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

double reference_rate(const ControlObjective& o, double x) {
  double target = o.reference;
  if (o.kind == ObjectiveKind::inequality_min) target += o.activation_buffer;
  if (o.kind == ObjectiveKind::inequality_max) target -= o.activation_buffer;
  return std::clamp(o.gain * (target - x), -o.rate_limit, o.rate_limit);
}

double activation(const ControlObjective& o, double x) {
  switch (o.kind) {
    case ObjectiveKind::equality: return 1.0;
    case ObjectiveKind::inequality_min: return smoothstep((o.reference + o.activation_buffer - x) / o.activation_buffer);
    case ObjectiveKind::inequality_max: return smoothstep((x - o.reference + o.activation_buffer) / o.activation_buffer);
  }
  return 0.0;
}

double transition_activation(const RobotAction* prev, const RobotAction* next, const ControlObjective& o,
                             double elapsed) {
  if (o.global) return 1.0;
  const bool in_prev = prev && prev->owns(o.id);
  const bool in_next = next && next->owns(o.id);
  if (in_prev == in_next) return in_next ? 1.0 : 0.0;
  const double ramp = next ? next->transition_ramp : 0.0;
  const double up = ramp > 0 ? smoothstep(elapsed / ramp) : 1.0;
  return in_next ? up : 1.0 - up;
}

json to_json(const ControlObjective& o) {
  return {{"id", o.id},
          {"kind", to_string(o.kind)},
          {"variable",
           {{"kind", robotsim::to_string(o.variable.kind)}, {"arm", o.variable.arm}, {"index", o.variable.index}}},
          {"reference", o.reference},
          {"gain", o.gain},
          {"rate_limit", o.rate_limit},
          {"activation_buffer", o.activation_buffer},
          {"priority_level", o.priority_level},
          {"global", o.global}};
}

ControlObjective objective_from_json(const json& j) {
  try {
    ControlObjective o;
    o.id = j.at("id").get<std::string>();
    o.kind = objective_kind_from_string(j.at("kind").get<std::string>());
    const auto& v = j.at("variable");
    o.variable.kind = robotsim::variable_kind_from_string(v.at("kind").get<std::string>());
    o.variable.arm = v.value("arm", std::size_t{0});
    o.variable.index = v.value("index", Eigen::Index{0});
    o.reference = j.value("reference", 0.0);
    o.gain = j.value("gain", 1.0);
    o.rate_limit = j.value("rate_limit", 1.0);
    o.activation_buffer = j.value("activation_buffer", 0.1);
    o.priority_level = j.value("priority_level", 1);
    o.global = j.value("global", false);
    o.validate();
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("objective: ") + e.what());
  }
}

}  // namespace flexhrc::tpik
