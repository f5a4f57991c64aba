#include <doctest.h>

#include <random>

#include "flexhrc/error.hpp"
#include "flexhrc/tpik/objective_set.hpp"
#include "flexhrc/tpik/solver.hpp"
#include "support/oracles.hpp"

using namespace flexhrc;
using namespace flexhrc::tpik;

namespace {

ControlObjective objective(ObjectiveKind kind, double reference, double buffer = 0.2) {
  ControlObjective o;
  o.id = "o";
  o.kind = kind;
  o.reference = reference;
  o.activation_buffer = buffer;
  o.rate_limit = 10;
  return o;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0, 1);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return n(rng); });
}

LevelProblem<double> level(const Eigen::MatrixXd& J, const Eigen::VectorXd& rate) {
  return {J, rate, Eigen::VectorXd::Ones(J.rows())};
}

}  // namespace

TEST_CASE("reference_rate") {
  auto eq = objective(ObjectiveKind::equality, 2.0);
  CHECK(reference_rate(eq, 2.0) == 0.0);
  eq.gain = 1.0;
  CHECK(reference_rate(eq, 1.0) == 1.0);
  eq.rate_limit = 0.25;
  CHECK(reference_rate(eq, 1.0) == 0.25);
  CHECK(reference_rate(eq, 3.0) == -0.25);

  auto lo = objective(ObjectiveKind::inequality_min, 1.0);
  CHECK(reference_rate(lo, 5.0) < 0.0);
  CHECK(activation(lo, 5.0) == 0.0);
  CHECK(reference_rate(lo, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("activation") {
  const auto lo = objective(ObjectiveKind::inequality_min, 1.0, 0.2);
  CHECK(activation(lo, 3.0) == 0.0);
  CHECK(activation(lo, 1.2) == 0.0);
  CHECK(activation(lo, 1.0) == 1.0);
  CHECK(activation(lo, 0.5) == 1.0);
  CHECK(activation(lo, 1.1) == doctest::Approx(0.5));

  const auto hi = objective(ObjectiveKind::inequality_max, 1.0, 0.2);
  CHECK(activation(hi, 0.0) == 0.0);
  CHECK(activation(hi, 1.0) == 1.0);
  CHECK(activation(hi, 0.9) == doctest::Approx(0.5));

  CHECK(activation(objective(ObjectiveKind::equality, 0.0), 123.0) == 1.0);

  // Continuity: successive samples stay under 10x the smoothstep slope bound.
  const double bound = 10 * 1.5 / 0.2 * 1e-3;
  for (const auto& o : {lo, hi}) {
    double prev = activation(o, 0.5);
    for (double x = 0.501; x <= 1.5; x += 1e-3) {
      const double a = activation(o, x);
      CHECK(std::abs(a - prev) < bound);
      prev = a;
    }
  }
}

TEST_CASE("transition_activation") {
  RobotAction prev{"prev", {"shared", "old"}, 0.4, 0.0};
  RobotAction next{"next", {"shared", "new"}, 0.4, 1.0};
  auto o = [](std::string id, bool global = false) {
    ControlObjective c;
    c.id = std::move(id);
    c.global = global;
    return c;
  };
  for (double t : {0.0, 0.1, 5.0}) CHECK(transition_activation(&prev, &next, o("safety", true), t) == 1.0);
  CHECK(transition_activation(&prev, &next, o("new"), 0.0) == 0.0);
  CHECK(transition_activation(&prev, &next, o("new"), 0.2) == doctest::Approx(0.5));
  CHECK(transition_activation(&prev, &next, o("new"), 0.4) == 1.0);
  CHECK(transition_activation(&prev, &next, o("old"), 0.0) == 1.0);
  CHECK(transition_activation(&prev, &next, o("old"), 0.2) == doctest::Approx(0.5));
  CHECK(transition_activation(&prev, &next, o("old"), 1.0) == 0.0);
  CHECK(transition_activation(&prev, &next, o("shared"), 0.0) == 1.0);
  CHECK(transition_activation(&prev, &next, o("none"), 0.2) == 0.0);
  CHECK(transition_activation(nullptr, &next, o("new"), 0.1) == doctest::Approx(smoothstep(0.25)));

  const double bound = 10 * 1.5 / 0.4 * 1e-3;
  double last = 0.0;
  for (double t = 0.0; t <= 0.6; t += 1e-3) {
    const double a = transition_activation(&prev, &next, o("new"), t);
    CHECK(std::abs(a - last) < bound);
    last = a;
  }
}

TEST_CASE("solve_hierarchy") {
  std::mt19937_64 rng(11);
  SUBCASE("fully deactivated hierarchy gives zero") {
    LevelProblem<double> L{random_matrix(rng, 3, 6), Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)};
    const auto r = solve_hierarchy<double>({L, L}, 6);
    CHECK(r.y_dot.isZero(0));
  }
  SUBCASE("single full-rank level equals the least-squares solution") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd J = random_matrix(rng, 3, 8);
      const Eigen::VectorXd b = random_matrix(rng, 3, 1);
      const auto r = solve_hierarchy<double>({level(J, b)}, 8);
      CHECK((r.y_dot - testing::min_norm_oracle(J, b)).norm() <= 1e-8);
    }
  }
  SUBCASE("lower levels do not disturb higher ones") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd J1 = random_matrix(rng, 3, 8);
      const Eigen::VectorXd b1 = random_matrix(rng, 3, 1);
      const Eigen::MatrixXd J2 = random_matrix(rng, 6, 8);
      const Eigen::VectorXd b2 = random_matrix(rng, 6, 1);
      const auto only = solve_hierarchy<double>({level(J1, b1)}, 8);
      const auto both = solve_hierarchy<double>({level(J1, b1), level(J2, b2)}, 8);
      const Eigen::VectorXd r_only = b1 - J1 * only.y_dot;
      const Eigen::VectorXd r_both = b1 - J1 * both.y_dot;
      CHECK((r_both - r_only).norm() <= 1e-6 * std::max(1.0, b1.norm()));
      // The second level is only partially satisfiable.
      CHECK(both.residuals[1] > 1e-3);
    }
  }
  SUBCASE("deactivating a row equals removing it, bit for bit") {
    const Eigen::MatrixXd J1 = random_matrix(rng, 3, 6);
    const Eigen::VectorXd b1 = random_matrix(rng, 3, 1);
    const Eigen::MatrixXd J2 = random_matrix(rng, 2, 6);
    const Eigen::VectorXd b2 = random_matrix(rng, 2, 1);
    LevelProblem<double> with{J1, b1, Eigen::Vector3d(0.7, 0.0, 0.3)};
    LevelProblem<double> without{Eigen::MatrixXd(2, 6), Eigen::Vector2d(b1(0), b1(2)), Eigen::Vector2d(0.7, 0.3)};
    without.J << J1.row(0), J1.row(2);
    const auto a = solve_hierarchy<double>({with, level(J2, b2)}, 6);
    const auto b = solve_hierarchy<double>({without, level(J2, b2)}, 6);
    CHECK(a.y_dot == b.y_dot);
  }
  SUBCASE("determinism and velocity cap") {
    const Eigen::MatrixXd J = random_matrix(rng, 3, 8);
    const Eigen::VectorXd b = 50 * random_matrix(rng, 3, 1);
    const Eigen::VectorXd caps = Eigen::VectorXd::Constant(8, 1.5);
    const auto r1 = solve_hierarchy<double>({level(J, b)}, 8, {}, caps);
    const auto r2 = solve_hierarchy<double>({level(J, b)}, 8, {}, caps);
    CHECK(r1.y_dot == r2.y_dot);
    CHECK(r1.y_dot.cwiseAbs().maxCoeff() <= 1.5 + 1e-12);
    CHECK(r1.scale < 1.0);
  }
  SUBCASE("errors") {
    auto kind = [](auto f) {
      try {
        f();
      } catch (const Error& e) {
        return e.kind();
      }
      return ErrorKind::invalid_state;
    };
    CHECK(kind([&] { solve_hierarchy<double>({level(random_matrix(rng, 2, 5), Eigen::Vector2d::Ones())}, 6); }) ==
          ErrorKind::dimension_mismatch);
    Eigen::MatrixXd bad = random_matrix(rng, 2, 6);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK(kind([&] { solve_hierarchy<double>({level(bad, Eigen::Vector2d::Ones())}, 6); }) == ErrorKind::numerical);
  }
  SUBCASE("damped inverse is continuous at the threshold and vanishes at zero") {
    Damping<double> d;
    CHECK(damped_inverse(d.sigma_min, d) == doctest::Approx(100));
    CHECK(damped_inverse(d.sigma_min * (1 - 1e-9), d) == doctest::Approx(100).epsilon(1e-6));
    CHECK(damped_inverse(0.0, d) == 0.0);
    CHECK(damped_inverse(1e-3, d) < 1.0);
  }
}

TEST_CASE("standard objective set") {
  auto w = robotsim::World::dual_arm();
  w.obstacles().push_back({Eigen::Vector2d(0.8, 0.6), 0.05});
  const auto set = standard_objective_set(w, "right");
  int joint_limits = 0, last_level = 0;
  int clearance_level = 0, ee_level = 0, pose_level = 0;
  for (const auto& o : set) {
    last_level = std::max(last_level, o.priority_level);
    if (o.id.find("joint_limit") != std::string::npos) {
      ++joint_limits;
      CHECK(o.priority_level == 1);
    }
    if (o.id == "right.clearance.0") clearance_level = o.priority_level;
    if (o.id == "right.ee_x") ee_level = o.priority_level;
    if (o.id == "right.pose.0") pose_level = o.priority_level;
  }
  CHECK(joint_limits == 4);
  CHECK(clearance_level < ee_level);
  CHECK(pose_level == last_level);
  CHECK_THROWS_AS(standard_objective_set(w, "tail"), Error);

  // At rest with references equal to the current state nothing moves.
  auto objectives = standard_objective_set(w, "left");
  for (auto& o : set) objectives.push_back(o);
  RobotAction hold{"hold", end_effector_objective_ids("left"), 0.5, 0.0};
  const auto out = solve(objectives, w, {nullptr, &hold, 1.0});
  CHECK(out.y_dot.norm() <= 1e-9);
  CHECK(out.residuals.size() == 6);
  REQUIRE(out.find("left.ee_x"));
  CHECK(out.find("left.ee_x")->alpha_p == 1.0);
  CHECK(out.find("right.ee_x")->alpha_p == 0.0);
}

TEST_CASE("end-effector tracking converges under the full hierarchy") {
  auto w = robotsim::World::dual_arm();
  auto objectives = standard_objective_set(w, "left");
  const Eigen::Vector3d start = w.end_effector(0);
  const Eigen::Vector3d goal = start + Eigen::Vector3d(0.15, 0.1, 0.2);
  for (auto& o : objectives) {
    if (o.id == "left.ee_x") o.reference = goal.x();
    if (o.id == "left.ee_y") o.reference = goal.y();
    if (o.id == "left.ee_theta") o.reference = goal.z();
  }
  RobotAction move{"move", end_effector_objective_ids("left"), 0.5, 0.0};
  for (int k = 0; k < 400; ++k) {
    const auto out = solve(objectives, w, {nullptr, &move, k * 0.01});
    CHECK(out.y_dot.cwiseAbs().maxCoeff() <= 1.5 + 1e-12);
    w.step(out.y_dot, 0.01);
  }
  CHECK((w.end_effector(0) - goal).head<2>().norm() < 1e-3);
  CHECK(std::abs(w.end_effector(0).z() - goal.z()) < 1e-2);
  CHECK(w.max_limit_violation() == 0.0);
}
