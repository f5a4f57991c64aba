#include "flexhrc/tpik/objective_set.hpp"

#include <algorithm>

#include "flexhrc/error.hpp"

namespace flexhrc::tpik {

using robotsim::Variable;
using robotsim::VariableKind;

ObjectiveGains ObjectiveGains::from_json(const nlohmann::json& j) {
  ObjectiveGains g;
  auto take = [&](const char* key, double& field) { field = j.value(key, field); };
  take("joint_limit_margin", g.joint_limit_margin);
  take("joint_limit_buffer", g.joint_limit_buffer);
  take("joint_limit_gain", g.joint_limit_gain);
  take("clearance_min", g.clearance_min);
  take("clearance_buffer", g.clearance_buffer);
  take("clearance_gain", g.clearance_gain);
  take("clearance_rate", g.clearance_rate);
  take("manipulability_min", g.manipulability_min);
  take("manipulability_buffer", g.manipulability_buffer);
  take("ee_gain", g.ee_gain);
  take("ee_rate", g.ee_rate);
  take("angle_gain", g.angle_gain);
  take("angle_rate", g.angle_rate);
  take("pose_gain", g.pose_gain);
  take("pose_rate", g.pose_rate);
  return g;
}

std::vector<std::string> end_effector_objective_ids(std::string_view arm) {
  const std::string a(arm);
  return {a + ".ee_x", a + ".ee_y", a + ".ee_theta"};
}

std::vector<ControlObjective> standard_objective_set(const robotsim::World& world, std::string_view arm,
                                                     const ObjectiveGains& g) {
  const std::size_t ai = world.arm_index(arm);
  const auto& chain = world.arm(ai);
  const std::string prefix(arm);
  std::vector<ControlObjective> set;

  auto add = [&](std::string id, ObjectiveKind kind, VariableKind var, Eigen::Index index, double reference,
                 double gain, double rate, double buffer, int level, bool global) {
    ControlObjective o;
    o.id = prefix + "." + id;
    o.kind = kind;
    o.variable = Variable{var, ai, index};
    o.reference = reference;
    o.gain = gain;
    o.rate_limit = rate;
    o.activation_buffer = buffer;
    o.priority_level = level;
    o.global = global;
    set.push_back(std::move(o));
  };

  for (Eigen::Index i = 0; i < chain.dof(); ++i) {
    const double half = 0.5 * (chain.q_max(i) - chain.q_min(i));
    add("joint_limit." + std::to_string(i), ObjectiveKind::inequality_max, VariableKind::joint_offset, i,
        half - g.joint_limit_margin, g.joint_limit_gain, chain.speed_cap, g.joint_limit_buffer, kJointLimits, true);
  }
  for (std::size_t k = 0; k < world.obstacles().size(); ++k)
    add("clearance." + std::to_string(k), ObjectiveKind::inequality_min, VariableKind::clearance,
        static_cast<Eigen::Index>(k), g.clearance_min, g.clearance_gain, g.clearance_rate, g.clearance_buffer,
        kObstacle, true);
  add("manipulability", ObjectiveKind::inequality_min, VariableKind::manipulability, 0, g.manipulability_min, 1.0,
      0.1, g.manipulability_buffer, kManipulability, true);

  const Eigen::Vector3d ee = world.end_effector(ai);
  add("ee_x", ObjectiveKind::equality, VariableKind::ee_x, 0, ee.x(), g.ee_gain, g.ee_rate, 1.0, kEndEffectorPosition,
      false);
  add("ee_y", ObjectiveKind::equality, VariableKind::ee_y, 0, ee.y(), g.ee_gain, g.ee_rate, 1.0, kEndEffectorPosition,
      false);
  add("ee_theta", ObjectiveKind::equality, VariableKind::ee_theta, 0, ee.z(), g.angle_gain, g.angle_rate, 1.0,
      kEndEffectorAngle, false);

  for (Eigen::Index i = 0; i < chain.dof(); ++i)
    add("pose." + std::to_string(i), ObjectiveKind::equality, VariableKind::joint, i, chain.q(i), g.pose_gain,
        g.pose_rate, 1.0, kPreferredPose, true);
  return set;
}

const ObjectiveTelemetry* SolverOutput::find(std::string_view id) const {
  for (const auto& o : objectives)
    if (o.id == id) return &o;
  return nullptr;
}

SolverOutput solve(const std::vector<ControlObjective>& objectives, const robotsim::World& world,
                   const TransitionState& transition, const Damping<double>& damping) {
  std::vector<const ControlObjective*> order;
  order.reserve(objectives.size());
  for (const auto& o : objectives) {
    o.validate();
    order.push_back(&o);
  }
  std::stable_sort(order.begin(), order.end(), [](const ControlObjective* a, const ControlObjective* b) {
    return a->priority_level != b->priority_level ? a->priority_level < b->priority_level : a->id < b->id;
  });

  const Eigen::Index n = world.dof();
  SolverOutput out;
  std::vector<LevelProblem<double>> levels;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && order[j]->priority_level == order[i]->priority_level) ++j;
    const auto m = static_cast<Eigen::Index>(j - i);
    LevelProblem<double> L{Eigen::MatrixXd(m, n), Eigen::VectorXd(m), Eigen::VectorXd(m)};
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& o = *order[i + static_cast<std::size_t>(r)];
      ObjectiveTelemetry t;
      t.id = o.id;
      t.level = o.priority_level;
      t.value = world.value(o.variable);
      t.rate = reference_rate(o, t.value);
      t.alpha_o = activation(o, t.value);
      t.alpha_p = transition_activation(transition.prev, transition.next, o, transition.elapsed);
      L.J.row(r) = world.gradient(o.variable);
      L.rate(r) = t.rate;
      L.activation(r) = t.alpha_o * t.alpha_p;
      out.objectives.push_back(std::move(t));
    }
    levels.push_back(std::move(L));
    i = j;
  }

  auto result = solve_hierarchy<double>(levels, n, damping, world.speed_caps());
  out.y_dot = std::move(result.y_dot);
  out.residuals = std::move(result.residuals);
  out.scale = result.scale;
  return out;
}

}  // namespace flexhrc::tpik
