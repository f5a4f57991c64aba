#include "flexhrc/orchestrator/controller.hpp"

#include <algorithm>
#include <cmath>

#include "flexhrc/error.hpp"

namespace flexhrc::orchestrator {

using nlohmann::json;

namespace {

MotionPhase phase(const char* arm, double x, double y) {
  MotionPhase p;
  p.arm = arm;
  p.target = {x, y};
  return p;
}

}  // namespace

ProgramLibrary default_programs() {
  ProgramLibrary lib;
  {
    MotionProgram p{"wooden plate pick up and positioning", {}, 0.5};
    auto reach = phase("right", 0.55, 0.45);
    reach.grasp = "plate";
    p.phases = {reach, phase("right", 0.10, 0.75)};
    lib[p.name] = p;
  }
  {
    MotionProgram p{"wooden plate put down", {}, 0.5};
    auto place = phase("right", 0.50, 0.30);
    place.release = "plate";
    p.phases = {place, phase("right", 0.40, 0.55)};
    lib[p.name] = p;
  }
  {
    MotionProgram p{"reset pose", {}, 0.5};
    p.phases = {phase("right", -0.18, 0.78)};
    lib[p.name] = p;
  }
  return lib;
}

ProgramLibrary programs_from_json(const json& doc) {
  ProgramLibrary lib;
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      MotionProgram p;
      p.name = it.key();
      p.transition_ramp = it.value().value("transition_ramp", 0.5);
      for (const auto& jp : it.value().at("phases")) {
        MotionPhase ph;
        ph.arm = jp.at("arm").get<std::string>();
        const auto target = jp.at("target").get<std::array<double, 2>>();
        ph.target = {target[0], target[1]};
        if (jp.contains("theta")) ph.theta = jp.at("theta").get<double>();
        if (jp.contains("grasp")) ph.grasp = jp.at("grasp").get<std::string>();
        if (jp.contains("release")) ph.release = jp.at("release").get<std::string>();
        ph.tolerance = jp.value("tolerance", ph.tolerance);
        ph.timeout = jp.value("timeout", ph.timeout);
        if (!(ph.tolerance > 0) || !(ph.timeout > 0))
          throw Error(ErrorKind::invalid_argument, "program " + p.name + ": tolerance and timeout must be positive");
        p.phases.push_back(std::move(ph));
      }
      if (p.phases.empty()) throw Error(ErrorKind::invalid_argument, "program " + p.name + " has no phases");
      lib[p.name] = std::move(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("motion programs: ") + e.what());
  }
  return lib;
}

json to_json(const ProgramLibrary& programs) {
  json doc = json::object();
  for (const auto& [name, p] : programs) {
    json phases = json::array();
    for (const auto& ph : p.phases) {
      json jp{{"arm", ph.arm},
              {"target", {ph.target.x(), ph.target.y()}},
              {"tolerance", ph.tolerance},
              {"timeout", ph.timeout}};
      if (ph.theta) jp["theta"] = *ph.theta;
      if (ph.grasp) jp["grasp"] = *ph.grasp;
      if (ph.release) jp["release"] = *ph.release;
      phases.push_back(std::move(jp));
    }
    doc[name] = {{"transition_ramp", p.transition_ramp}, {"phases", std::move(phases)}};
  }
  return doc;
}

Controller::Controller(robotsim::World world, ProgramLibrary programs, ControllerConfig config)
    : world_(std::move(world)), programs_(std::move(programs)), config_(config) {
  if (config_.tick <= 0) throw Error(ErrorKind::invalid_argument, "controller tick must be positive");
  for (std::size_t a = 0; a < world_.arms().size(); ++a) {
    auto set = tpik::standard_objective_set(world_, world_.arm_name(a), config_.gains);
    objectives_.insert(objectives_.end(), set.begin(), set.end());
  }
  for (const auto& [name, p] : programs_)
    for (const auto& ph : p.phases) {
      world_.arm_index(ph.arm);  // throws unknown_id
      if (ph.grasp) world_.object(*ph.grasp);
      if (ph.release) world_.object(*ph.release);
    }
}

tpik::ControlObjective& Controller::objective(const std::string& id) {
  for (auto& o : objectives_)
    if (o.id == id) return o;
  throw Error(ErrorKind::unknown_id, "objective " + id);
}

void Controller::begin_phase(Micros t) {
  const auto& ph = program_->phases[phase_];
  const Eigen::Vector3d ee = world_.end_effector(world_.arm_index(ph.arm));
  objective(ph.arm + ".ee_x").reference = ph.target.x();
  objective(ph.arm + ".ee_y").reference = ph.target.y();
  objective(ph.arm + ".ee_theta").reference = ph.theta.value_or(ee.z());
  phase_start_ = t;
}

void Controller::start(const std::string& action_id, const std::string& program, Micros t, bool keep_phase) {
  const auto it = programs_.find(program);
  if (it == programs_.end()) throw Error(ErrorKind::unknown_id, "no motion program for robot action '" + program + "'");
  const bool same = program_ == &it->second;
  program_ = &it->second;
  phase_ = keep_phase && same ? std::min(phase_, program_->phases.size() - 1) : 0;

  tpik::RobotAction next;
  next.name = action_id;
  next.transition_ramp = program_->transition_ramp;
  next.t_start = to_seconds(t);
  std::vector<std::string> arms;
  for (const auto& ph : program_->phases)
    if (std::find(arms.begin(), arms.end(), ph.arm) == arms.end()) arms.push_back(ph.arm);
  for (const auto& arm : arms)
    for (auto& id : tpik::end_effector_objective_ids(arm)) next.objective_ids.push_back(std::move(id));

  prev_ = next_;
  next_ = std::move(next);
  action_id_ = action_id;
  running_ = true;
  begin_phase(t);
}

void Controller::halt(Micros) {
  if (!running_) return;
  for (const auto& id : next_->objective_ids) {
    auto& o = objective(id);
    o.reference = world_.value(o.variable);
  }
  running_ = false;
}

TickReport Controller::tick(Micros t) {
  tpik::TransitionState ts;
  if (prev_) ts.prev = &*prev_;
  if (next_) {
    ts.next = &*next_;
    ts.elapsed = to_seconds(t) - next_->t_start;
  }
  TickReport report;
  report.solver = tpik::solve(objectives_, world_, ts, config_.damping);

  const Eigen::VectorXd caps = world_.speed_caps();
  for (Eigen::Index i = 0; i < caps.size(); ++i)
    safety_.max_speed_ratio = std::max(safety_.max_speed_ratio, std::abs(report.solver.y_dot(i)) / caps(i));
  for (const auto& o : report.solver.objectives)
    if (o.id.find(".clearance.") != std::string::npos)
      safety_.max_clearance_activation = std::max(safety_.max_clearance_activation, o.alpha_o);

  const double dt = to_seconds(config_.tick);
  world_.step(report.solver.y_dot, dt);
  safety_.min_clearance = std::min(safety_.min_clearance, world_.min_clearance());
  safety_.max_limit_violation = std::max(safety_.max_limit_violation, world_.max_limit_violation());

  if (!running_) return report;
  const Micros now = t + config_.tick;
  const auto& ph = program_->phases[phase_];
  const Eigen::Vector3d ee = world_.end_effector(world_.arm_index(ph.arm));
  const bool reached = (ee.head<2>() - ph.target).norm() <= ph.tolerance &&
                       (!ph.theta || std::abs(ee.z() - *ph.theta) <= 10 * ph.tolerance);
  if (reached) {
    if (ph.grasp) {
      world_.grasp(*ph.grasp, world_.arm_index(ph.arm));
      report.milestones.push_back("grasp " + *ph.grasp);
    }
    if (ph.release) {
      world_.release(*ph.release);
      report.milestones.push_back("release " + *ph.release);
    }
    if (++phase_ == program_->phases.size()) {
      running_ = false;
      report.finished = true;
    } else {
      begin_phase(now);
    }
  } else if (to_seconds(now - phase_start_) > ph.timeout) {
    running_ = false;
    report.finished = false;
  }
  return report;
}

}  // namespace flexhrc::orchestrator
