#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexhrc/orchestrator/ledger.hpp"
#include "flexhrc/robotsim/world.hpp"
#include "flexhrc/tpik/objective_set.hpp"

namespace flexhrc::orchestrator {

/// Drive one end effector to a planar target, then optionally grasp or
/// release an object.
struct MotionPhase {
  std::string arm;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  std::optional<double> theta;  // held at its current value when absent
  std::optional<std::string> grasp;
  std::optional<std::string> release;
  double tolerance = 0.005;  // metres
  double timeout = 20.0;     // seconds before the attempt fails
};

/// Motion executed for a robot action, keyed by the action's name.
struct MotionProgram {
  std::string name;
  std::vector<MotionPhase> phases;
  double transition_ramp = 0.5;
};

using ProgramLibrary = std::map<std::string, MotionProgram>;

/// Programs for the screwing task on the default dual-arm world: the right
/// arm fetches the plate, presents it, puts it down and returns home.
ProgramLibrary default_programs();
ProgramLibrary programs_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ProgramLibrary& programs);

struct ControllerConfig {
  tpik::ObjectiveGains gains;
  tpik::Damping<double> damping;
  Micros tick = 10'000;  // 100 Hz
};

/// Safety extrema over every tick so far.
struct SafetyStats {
  double min_clearance = std::numeric_limits<double>::infinity();
  double max_limit_violation = 0.0;
  double max_clearance_activation = 0.0;  // alpha_o of the obstacle objectives
  double max_speed_ratio = 0.0;           // |q_dot_i| / cap, worst joint
};

struct TickReport {
  tpik::SolverOutput solver;
  /// Set when the current attempt ended during this tick (true = success).
  std::optional<bool> finished;
  /// Grasp/release milestones reached during this tick, e.g. "grasp plate".
  std::vector<std::string> milestones;
};

/// Executes robot actions on the simulated world with the task-priority
/// solver, one fixed-step tick at a time.
class Controller {
 public:
  Controller(robotsim::World world, ProgramLibrary programs, ControllerConfig config = {});

  bool has_program(const std::string& name) const { return programs_.count(name) > 0; }

  /// Starts `program` for `action_id` at t. A running action is replaced and
  /// the objectives fade over the program's transition ramp. With
  /// `keep_phase` the phase index of the replaced attempt carries over (the
  /// same motion continues under a new action).
  void start(const std::string& action_id, const std::string& program, Micros t, bool keep_phase = false);
  /// Stops the current action; its arms hold their current end-effector poses.
  void halt(Micros t);
  /// Solves at t and integrates one tick.
  TickReport tick(Micros t);

  bool busy() const { return running_; }
  const std::optional<std::string>& action() const { return action_id_; }
  std::size_t phase() const { return phase_; }
  const robotsim::World& world() const { return world_; }
  const std::vector<tpik::ControlObjective>& objectives() const { return objectives_; }
  const SafetyStats& safety() const { return safety_; }
  const ControllerConfig& config() const { return config_; }

 private:
  tpik::ControlObjective& objective(const std::string& id);
  void begin_phase(Micros t);

  robotsim::World world_;
  ProgramLibrary programs_;
  ControllerConfig config_;
  std::vector<tpik::ControlObjective> objectives_;
  std::optional<tpik::RobotAction> prev_, next_;
  std::optional<std::string> action_id_;
  const MotionProgram* program_ = nullptr;
  std::size_t phase_ = 0;
  Micros phase_start_ = 0;
  bool running_ = false;
  SafetyStats safety_;
};

}  // namespace flexhrc::orchestrator
