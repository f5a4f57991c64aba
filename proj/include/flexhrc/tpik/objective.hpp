#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flexhrc/robotsim/world.hpp"

namespace flexhrc::tpik {

enum class ObjectiveKind { equality, inequality_min, inequality_max };

const char* to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(std::string_view text);

/// Scalar control objective on a configuration variable. `reference` is x0
/// for equalities and the threshold (x_min or x_max) for inequalities.
struct ControlObjective {
  std::string id;
  ObjectiveKind kind = ObjectiveKind::equality;
  robotsim::Variable variable;
  double reference = 0.0;
  double gain = 1.0;
  double rate_limit = 1.0;
  double activation_buffer = 0.1;
  int priority_level = 1;
  /// Safety objectives shared by every action.
  bool global = false;

  /// Throws invalid_argument on non-positive gain, buffer or rate limit.
  void validate() const;
};

/// An action as the controller sees it: the objectives it owns, plus when it
/// became current and how long its fade-in lasts.
struct RobotAction {
  std::string name;
  std::vector<std::string> objective_ids;
  double transition_ramp = 0.5;
  double t_start = 0.0;

  bool owns(std::string_view id) const;
};

/// Cubic smoothstep 3u^2 - 2u^3 with u clamped to [0, 1].
double smoothstep(double u);

/// Feedback reference rate towards x0 (equality) or towards the interior
/// point threshold +- buffer (inequality), clamped to the rate limit.
double reference_rate(const ControlObjective& o, double x);

/// Activation alpha_o: 1 for equalities; for inequalities 1 at or beyond the
/// threshold, 0 once the buffer has been cleared, smoothstep in between.
double activation(const ControlObjective& o, double x);

/// Transition activation alpha_p for the switch prev -> next, `elapsed`
/// seconds after next became current. Either action may be null.
double transition_activation(const RobotAction* prev, const RobotAction* next, const ControlObjective& o,
                             double elapsed);

nlohmann::json to_json(const ControlObjective& o);
ControlObjective objective_from_json(const nlohmann::json& j);

}  // namespace flexhrc::tpik
