#include "flexhrc/robotsim/world.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "flexhrc/error.hpp"

namespace flexhrc::robotsim {

using nlohmann::json;

const char* to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::joint: return "joint";
    case VariableKind::joint_offset: return "joint_offset";
    case VariableKind::ee_x: return "ee_x";
    case VariableKind::ee_y: return "ee_y";
    case VariableKind::ee_theta: return "ee_theta";
    case VariableKind::clearance: return "clearance";
    case VariableKind::manipulability: return "manipulability";
  }
  return "?";
}

VariableKind variable_kind_from_string(std::string_view text) {
  for (auto k : {VariableKind::joint, VariableKind::joint_offset, VariableKind::ee_x, VariableKind::ee_y,
                 VariableKind::ee_theta, VariableKind::clearance, VariableKind::manipulability})
    if (text == to_string(k)) return k;
  throw Error(ErrorKind::unknown_id, "variable kind '" + std::string(text) + "'");
}

namespace {

Eigen::VectorXd vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json arr(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::Vector3d compose(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = std::cos(a.z()), s = std::sin(a.z());
  return {a.x() + c * b.x() - s * b.y(), a.y() + s * b.x() + c * b.y(), a.z() + b.z()};
}

Eigen::Vector3d relative(const Eigen::Vector3d& frame, const Eigen::Vector3d& pose) {
  const double c = std::cos(frame.z()), s = std::sin(frame.z());
  const Eigen::Vector2d d = pose.head<2>() - frame.head<2>();
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), pose.z() - frame.z()};
}

Chain make_chain(const Eigen::Vector3d& base, const Eigen::Vector4d& q) {
  Chain c;
  c.base = base;
  c.links = Eigen::Vector4d(0.4, 0.4, 0.3, 0.15);
  c.q = q;
  c.q_min = Eigen::Vector4d::Constant(-2.5);
  c.q_max = Eigen::Vector4d::Constant(2.5);
  c.speed_cap = 1.5;
  return c;
}

}  // namespace

World World::dual_arm() {
  constexpr double half_pi = std::numbers::pi / 2;
  World w;
  // Elbows bent outwards, hands pointing inwards towards the work area.
  w.add_arm("left", make_chain({-0.25, 0.0, half_pi}, {0.6, -1.2, -0.6, -0.3}));
  w.add_arm("right", make_chain({0.25, 0.0, half_pi}, {-0.6, 1.2, 0.6, 0.3}));
  return w;
}

void World::add_arm(std::string name, Chain chain) {
  const auto n = chain.dof();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "arm " + name + " needs at least two joints");
  if (chain.links.size() != n || chain.q_min.size() != n || chain.q_max.size() != n)
    throw Error(ErrorKind::dimension_mismatch, "arm " + name + ": joint, link and limit counts differ");
  for (Eigen::Index i = 0; i < n; ++i)
    if (chain.q(i) < chain.q_min(i) || chain.q(i) > chain.q_max(i))
      throw Error(ErrorKind::invalid_argument, "arm " + name + ": initial joint outside its limits");
  if (!(chain.speed_cap > 0)) throw Error(ErrorKind::invalid_argument, "arm " + name + ": speed cap must be positive");
  for (const auto& existing : names_)
    if (existing == name) throw Error(ErrorKind::invalid_argument, "duplicate arm " + name);
  arms_.push_back(std::move(chain));
  names_.push_back(std::move(name));
}

World World::from_json(const json& doc) {
  try {
    World w;
    if (!doc.contains("arms")) {
      w = dual_arm();
    } else {
      for (const auto& ja : doc.at("arms")) {
        Chain c;
        c.base = vec(ja.at("base"));
        c.links = vec(ja.at("links"));
        c.q = ja.contains("q") ? vec(ja.at("q")) : Eigen::VectorXd::Zero(c.links.size());
        const auto n = c.links.size();
        if (ja.contains("limits")) {
          const auto lim = ja.at("limits").get<std::array<double, 2>>();
          c.q_min = Eigen::VectorXd::Constant(n, lim[0]);
          c.q_max = Eigen::VectorXd::Constant(n, lim[1]);
        } else {
          c.q_min = vec(ja.at("q_min"));
          c.q_max = vec(ja.at("q_max"));
        }
        c.speed_cap = ja.value("speed_cap", 1.5);
        w.add_arm(ja.at("name").get<std::string>(), std::move(c));
      }
    }
    if (auto home = doc.find("home"); home != doc.end())
      for (auto it = home->begin(); it != home->end(); ++it) {
        auto& c = w.arms_[w.arm_index(it.key())];
        const Eigen::VectorXd q = vec(it.value());
        if (q.size() != c.dof()) throw Error(ErrorKind::dimension_mismatch, "home pose for " + it.key());
        c.q = q;
      }
    for (const auto& jo : doc.value("obstacles", json::array())) {
      Obstacle o;
      o.center = vec(jo.at("center"));
      o.radius = jo.at("radius").get<double>();
      if (!(o.radius > 0)) throw Error(ErrorKind::invalid_argument, "obstacle radius must be positive");
      w.obstacles_.push_back(o);
    }
    for (const auto& jo : doc.value("objects", json::array())) {
      WorldObject o;
      o.name = jo.at("name").get<std::string>();
      o.pose = vec(jo.at("pose"));
      w.objects_.push_back(std::move(o));
    }
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("world description: ") + e.what());
  }
}

json World::to_json() const {
  json doc;
  doc["arms"] = json::array();
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    const auto& c = arms_[i];
    doc["arms"].push_back({{"name", names_[i]},
                           {"base", arr(c.base)},
                           {"links", arr(c.links)},
                           {"q", arr(c.q)},
                           {"q_min", arr(c.q_min)},
                           {"q_max", arr(c.q_max)},
                           {"speed_cap", c.speed_cap}});
  }
  doc["obstacles"] = json::array();
  for (const auto& o : obstacles_) doc["obstacles"].push_back({{"center", arr(o.center)}, {"radius", o.radius}});
  doc["objects"] = json::array();
  for (const auto& o : objects_) doc["objects"].push_back({{"name", o.name}, {"pose", arr(o.pose)}});
  return doc;
}

json World::frame_json() const {
  json f;
  f["time"] = time_;
  f["arms"] = json::array();
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    json clear = json::array();
    for (const auto& o : obstacles_) clear.push_back(clearance(arms_[i], o.center, o.radius).value);
    f["arms"].push_back({{"name", names_[i]},
                         {"q", arr(arms_[i].q)},
                         {"ee", arr(end_effector(i))},
                         {"clearance", std::move(clear)}});
  }
  f["objects"] = json::array();
  for (const auto& o : objects_) {
    json jo{{"name", o.name}, {"pose", arr(o.pose)}};
    jo["held_by"] = o.held_by ? json(names_[*o.held_by]) : json(nullptr);
    f["objects"].push_back(std::move(jo));
  }
  return f;
}

std::size_t World::arm_index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw Error(ErrorKind::unknown_id, "arm '" + std::string(name) + "'");
}

WorldObject& World::object(std::string_view name) {
  for (auto& o : objects_)
    if (o.name == name) return o;
  throw Error(ErrorKind::unknown_id, "object '" + std::string(name) + "'");
}

const WorldObject& World::object(std::string_view name) const { return const_cast<World*>(this)->object(name); }

Eigen::Index World::dof() const {
  Eigen::Index n = 0;
  for (const auto& c : arms_) n += c.dof();
  return n;
}

Eigen::Index World::offset(std::size_t arm) const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < arm; ++i) n += arms_.at(i).dof();
  return n;
}

Eigen::VectorXd World::joints() const {
  Eigen::VectorXd q(dof());
  Eigen::Index k = 0;
  for (const auto& c : arms_) {
    q.segment(k, c.dof()) = c.q;
    k += c.dof();
  }
  return q;
}

void World::set_joints(const Eigen::VectorXd& q) {
  if (q.size() != dof()) throw Error(ErrorKind::dimension_mismatch, "configuration size");
  Eigen::Index k = 0;
  for (auto& c : arms_) {
    c.q = q.segment(k, c.dof());
    k += c.dof();
  }
  update_held_objects();
}

Eigen::VectorXd World::speed_caps() const {
  Eigen::VectorXd caps(dof());
  Eigen::Index k = 0;
  for (const auto& c : arms_) {
    caps.segment(k, c.dof()).setConstant(c.speed_cap);
    k += c.dof();
  }
  return caps;
}

void World::step(const Eigen::VectorXd& velocities, double dt) {
  if (!(dt > 0)) throw Error(ErrorKind::invalid_argument, "step needs dt > 0");
  if (velocities.size() != dof()) throw Error(ErrorKind::dimension_mismatch, "velocity vector size");
  if (!velocities.allFinite()) throw Error(ErrorKind::numerical, "non-finite joint velocity");
  set_joints(joints() + dt * velocities);
  time_ += dt;
}

World step(World world, const Eigen::VectorXd& velocities, double dt) {
  world.step(velocities, dt);
  return world;
}

void World::grasp(std::string_view name, std::size_t arm) {
  auto& o = object(name);
  o.held_by = arm;
  o.grip = relative(end_effector(arm), o.pose);
}

void World::release(std::string_view name) { object(name).held_by.reset(); }

void World::update_held_objects() {
  for (auto& o : objects_)
    if (o.held_by) o.pose = compose(end_effector(*o.held_by), o.grip);
}

void World::check(const Variable& v) const {
  if (v.arm >= arms_.size()) throw Error(ErrorKind::unknown_id, "variable refers to arm " + std::to_string(v.arm));
  const auto& c = arms_[v.arm];
  switch (v.kind) {
    case VariableKind::joint:
    case VariableKind::joint_offset:
      if (v.index < 0 || v.index >= c.dof()) throw Error(ErrorKind::unknown_id, "joint index out of range");
      break;
    case VariableKind::clearance:
      if (v.index < 0 || v.index >= static_cast<Eigen::Index>(obstacles_.size()))
        throw Error(ErrorKind::unknown_id, "obstacle index out of range");
      break;
    default: break;
  }
}

double World::value(const Variable& v) const {
  check(v);
  const auto& c = arms_[v.arm];
  switch (v.kind) {
    case VariableKind::joint: return c.q(v.index);
    case VariableKind::joint_offset: return std::abs(c.q(v.index) - 0.5 * (c.q_min(v.index) + c.q_max(v.index)));
    case VariableKind::ee_x: return forward_kinematics(c).x();
    case VariableKind::ee_y: return forward_kinematics(c).y();
    case VariableKind::ee_theta: return end_effector_angle(c);
    case VariableKind::clearance: {
      const auto& o = obstacles_[v.index];
      return clearance(c, o.center, o.radius).value;
    }
    case VariableKind::manipulability: return manipulability(c);
  }
  return 0.0;
}

Eigen::RowVectorXd World::gradient(const Variable& v) const {
  check(v);
  const auto& c = arms_[v.arm];
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(c.dof());
  switch (v.kind) {
    case VariableKind::joint: row(v.index) = 1.0; break;
    case VariableKind::joint_offset: {
      const double d = c.q(v.index) - 0.5 * (c.q_min(v.index) + c.q_max(v.index));
      row(v.index) = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      break;
    }
    case VariableKind::ee_x: row = pose_jacobian(c).row(0); break;
    case VariableKind::ee_y: row = pose_jacobian(c).row(1); break;
    case VariableKind::ee_theta: row.setOnes(); break;
    case VariableKind::clearance: {
      const auto& o = obstacles_[v.index];
      row = clearance_gradient(c, o.center, o.radius);
      break;
    }
    case VariableKind::manipulability: row = manipulability_gradient(c); break;
  }
  Eigen::RowVectorXd full = Eigen::RowVectorXd::Zero(dof());
  full.segment(offset(v.arm), c.dof()) = row;
  return full;
}

double World::min_clearance() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : arms_)
    for (const auto& o : obstacles_) m = std::min(m, clearance(c, o.center, o.radius).value);
  return m;
}

double World::max_limit_violation() const {
  double v = 0.0;
  for (const auto& c : arms_)
    for (Eigen::Index i = 0; i < c.dof(); ++i)
      v = std::max({v, c.q_min(i) - c.q(i), c.q(i) - c.q_max(i)});
  return v;
}

}  // namespace flexhrc::robotsim
