#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexhrc/robotsim/world.hpp"
#include "flexhrc/tpik/objective.hpp"
#include "flexhrc/tpik/solver.hpp"

namespace flexhrc::tpik {

/// Standard priority levels, highest first.
enum Level : int {
  kJointLimits = 1,
  kObstacle = 2,
  kManipulability = 3,
  kEndEffectorPosition = 4,
  kEndEffectorAngle = 5,
  kPreferredPose = 6,
};

struct ObjectiveGains {
  double joint_limit_margin = 0.05;  // threshold sits this far inside the mechanical limit
  double joint_limit_buffer = 0.2;
  double joint_limit_gain = 2.0;
  double clearance_min = 0.03;
  double clearance_buffer = 0.12;
  double clearance_gain = 2.0;
  double clearance_rate = 0.5;
  double manipulability_min = 0.01;
  double manipulability_buffer = 0.02;
  double ee_gain = 2.0;
  double ee_rate = 0.3;
  double angle_gain = 2.0;
  double angle_rate = 1.0;
  double pose_gain = 0.5;
  double pose_rate = 0.5;

  static ObjectiveGains from_json(const nlohmann::json& j);
};

/// The six-objective hierarchy for one arm: joint limits, obstacle clearance
/// (one per obstacle), manipulability, end-effector x/y, end-effector angle
/// and preferred pose. End-effector objectives are action-owned; the rest are
/// global. Ids are prefixed with the arm name. Throws unknown_id for an
/// unknown arm.
std::vector<ControlObjective> standard_objective_set(const robotsim::World& world, std::string_view arm,
                                                     const ObjectiveGains& gains = {});

/// Objective ids that a robot action moving `arm`'s end effector owns.
std::vector<std::string> end_effector_objective_ids(std::string_view arm);

/// Previous/next action pair and time since next became current.
struct TransitionState {
  const RobotAction* prev = nullptr;
  const RobotAction* next = nullptr;
  double elapsed = 0.0;
};

struct ObjectiveTelemetry {
  std::string id;
  int level = 0;
  double value = 0.0;
  double rate = 0.0;
  double alpha_o = 0.0;
  double alpha_p = 0.0;
};

struct SolverOutput {
  Eigen::VectorXd y_dot;
  std::vector<double> residuals;  // per level, ascending
  std::vector<ObjectiveTelemetry> objectives;
  double scale = 1.0;

  const ObjectiveTelemetry* find(std::string_view id) const;
};

/// Groups the objectives into levels (ascending, ids sorted inside a level),
/// evaluates variables, Jacobians, rates and activations on `world`, and runs
/// the hierarchy with the world's speed caps.
SolverOutput solve(const std::vector<ControlObjective>& objectives, const robotsim::World& world,
                   const TransitionState& transition, const Damping<double>& damping = {});

}  // namespace flexhrc::tpik
