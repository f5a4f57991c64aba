#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexhrc/robotsim/kinematics.hpp"

namespace flexhrc::robotsim {

using Chain = KinematicChain<double>;

struct Obstacle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.05;
};

/// A movable object. While held, its pose is the holding end effector's pose
/// composed with `grip` (the object pose in the end-effector frame).
struct WorldObject {
  std::string name;
  Eigen::Vector3d pose = Eigen::Vector3d::Zero();
  std::optional<std::size_t> held_by;
  Eigen::Vector3d grip = Eigen::Vector3d::Zero();
};

/// Scalar functions of the configuration that objectives can control.
enum class VariableKind {
  joint,           // c_i
  joint_offset,    // |c_i - mid_i|, distance from the centre of the joint range
  ee_x,
  ee_y,
  ee_theta,
  clearance,       // index = obstacle
  manipulability,
};

struct Variable {
  VariableKind kind = VariableKind::joint;
  std::size_t arm = 0;
  Eigen::Index index = 0;
};

const char* to_string(VariableKind kind);
VariableKind variable_kind_from_string(std::string_view text);

/// Kinematic world: several planar arms stacked into one configuration
/// vector (arm 0 first), disk obstacles and graspable objects.
class World {
 public:
  /// Two 4-joint arms on mirrored bases at (+-0.25, 0), facing +y.
  static World dual_arm();
  static World from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  /// Per-tick state frame: time, joints, end-effector poses, clearances, objects.
  nlohmann::json frame_json() const;

  const std::vector<Chain>& arms() const { return arms_; }
  const Chain& arm(std::size_t i) const { return arms_.at(i); }
  const std::string& arm_name(std::size_t i) const { return names_.at(i); }
  std::size_t arm_index(std::string_view name) const;
  void add_arm(std::string name, Chain chain);

  std::vector<Obstacle>& obstacles() { return obstacles_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  std::vector<WorldObject>& objects() { return objects_; }
  const std::vector<WorldObject>& objects() const { return objects_; }
  WorldObject& object(std::string_view name);
  const WorldObject& object(std::string_view name) const;

  double time() const { return time_; }
  Eigen::Index dof() const;
  /// Index of the arm's first joint in the stacked configuration vector.
  Eigen::Index offset(std::size_t arm) const;
  Eigen::VectorXd joints() const;
  void set_joints(const Eigen::VectorXd& q);
  Eigen::VectorXd speed_caps() const;

  /// Explicit Euler step of every joint, then held objects follow.
  void step(const Eigen::VectorXd& velocities, double dt);

  void grasp(std::string_view object, std::size_t arm);
  void release(std::string_view object);

  Eigen::Vector3d end_effector(std::size_t arm) const { return forward_kinematics(arms_.at(arm)); }

  double value(const Variable& v) const;
  /// Row of partial derivatives with respect to the stacked configuration.
  Eigen::RowVectorXd gradient(const Variable& v) const;

  /// Smallest clearance over every arm and obstacle (+inf without obstacles).
  double min_clearance() const;
  /// Largest violation of a joint limit over all joints, 0 when inside.
  double max_limit_violation() const;

 private:
  void check(const Variable& v) const;
  void update_held_objects();

  std::vector<Chain> arms_;
  std::vector<std::string> names_;
  std::vector<Obstacle> obstacles_;
  std::vector<WorldObject> objects_;
  double time_ = 0.0;
};

/// Functional form of World::step.
World step(World world, const Eigen::VectorXd& velocities, double dt);

}  // namespace flexhrc::robotsim
