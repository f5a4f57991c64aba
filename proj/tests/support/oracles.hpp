#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "flexhrc/robotsim/world.hpp"

namespace flexhrc::testing {

/// End-effector pose by chaining 3x3 homogeneous transforms in long double.
Eigen::Vector3d fk_oracle(const robotsim::Chain& chain);

/// Clearance by sampling `samples` points along every link.
double clearance_oracle(const robotsim::Chain& chain, const Eigen::Vector2d& center, double radius, int samples);

/// Central finite-difference gradient of a world variable.
Eigen::RowVectorXd fd_gradient(const robotsim::World& world, const robotsim::Variable& v, double h = 1e-6);

/// Every scalar variable the world exposes (all kinds, all arms, all joints
/// and obstacles).
std::vector<robotsim::Variable> all_variables(const robotsim::World& world);

/// The default dual-arm world with random joints inside the limits and one
/// random obstacle in the workspace.
robotsim::World random_world(std::uint64_t seed);

/// Minimum-norm least-squares solution from the normal equations, for a
/// full-row-rank J: J^T (J J^T)^-1 b.
Eigen::VectorXd min_norm_oracle(const Eigen::MatrixXd& J, const Eigen::VectorXd& b);

/// Relative gap between an analytic and a finite-difference row:
/// ||a - b|| / max(||b||, floor).
double relative_gap(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double floor = 1e-3);

}  // namespace flexhrc::testing
