#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace flexhrc::robotsim {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// Planar serial chain of revolute joints. `base` is (x, y, theta).
template <typename Scalar>
struct KinematicChain {
  Vec3<Scalar> base = Vec3<Scalar>::Zero();
  VecX<Scalar> links;
  VecX<Scalar> q;
  VecX<Scalar> q_min;
  VecX<Scalar> q_max;
  Scalar speed_cap = Scalar(1);

  Eigen::Index dof() const { return q.size(); }

  template <typename Other>
  KinematicChain<Other> cast() const {
    KinematicChain<Other> c;
    c.base = base.template cast<Other>();
    c.links = links.template cast<Other>();
    c.q = q.template cast<Other>();
    c.q_min = q_min.template cast<Other>();
    c.q_max = q_max.template cast<Other>();
    c.speed_cap = Other(speed_cap);
    return c;
  }
};

template <typename Scalar>
Vec2<Scalar> rot90(const Vec2<Scalar>& v) {
  return Vec2<Scalar>(-v.y(), v.x());
}

/// Joint pivots followed by the end-effector point: column i is the pivot of
/// joint i, column n is the tip.
template <typename Scalar>
Points2<Scalar> joint_positions(const KinematicChain<Scalar>& chain) {
  using std::cos;
  using std::sin;
  const Eigen::Index n = chain.dof();
  Points2<Scalar> p(2, n + 1);
  p.col(0) = chain.base.template head<2>();
  Scalar phi = chain.base.z();
  for (Eigen::Index i = 0; i < n; ++i) {
    phi += chain.q(i);
    p.col(i + 1) = p.col(i) + chain.links(i) * Vec2<Scalar>(cos(phi), sin(phi));
  }
  return p;
}

/// Absolute orientation of the end-effector frame.
template <typename Scalar>
Scalar end_effector_angle(const KinematicChain<Scalar>& chain) {
  return chain.base.z() + chain.q.sum();
}

/// End-effector pose (x, y, theta) in the world frame.
template <typename Scalar>
Vec3<Scalar> forward_kinematics(const KinematicChain<Scalar>& chain) {
  const auto p = joint_positions(chain);
  Vec3<Scalar> pose;
  pose << p.col(chain.dof()), end_effector_angle(chain);
  return pose;
}

/// Jacobian of a point rigidly attached to link `link` (0-based): only joints
/// 0..link move it.
template <typename Scalar>
MatX<Scalar> point_jacobian(const KinematicChain<Scalar>& chain, const Points2<Scalar>& pivots, Eigen::Index link,
                            const Vec2<Scalar>& point) {
  MatX<Scalar> J = MatX<Scalar>::Zero(2, chain.dof());
  for (Eigen::Index j = 0; j <= link; ++j) J.col(j) = rot90<Scalar>(point - pivots.col(j));
  return J;
}

/// 3 x n Jacobian of (x, y, theta) of the end effector.
template <typename Scalar>
MatX<Scalar> pose_jacobian(const KinematicChain<Scalar>& chain) {
  const auto p = joint_positions(chain);
  const Eigen::Index n = chain.dof();
  MatX<Scalar> J(3, n);
  J.topRows(2) = point_jacobian<Scalar>(chain, p, n - 1, p.col(n));
  J.row(2).setOnes();
  return J;
}

/// Manipulability sqrt(det(J J^T)) of the positional Jacobian.
template <typename Scalar>
Scalar manipulability(const KinematicChain<Scalar>& chain) {
  using std::sqrt;
  const MatX<Scalar> J = pose_jacobian(chain).topRows(2);
  const Scalar d = (J * J.transpose()).determinant();
  return d > Scalar(0) ? sqrt(d) : Scalar(0);
}

/// Gradient of the manipulability, m * tr((J J^T)^-1 J dJ^T/dq_i) per joint.
/// Zero at singular configurations, where the measure is not differentiable.
template <typename Scalar>
RowX<Scalar> manipulability_gradient(const KinematicChain<Scalar>& chain) {
  const auto p = joint_positions(chain);
  const Eigen::Index n = chain.dof();
  const MatX<Scalar> J = point_jacobian<Scalar>(chain, p, n - 1, p.col(n));
  const Eigen::Matrix<Scalar, 2, 2> JJt = J * J.transpose();
  const Scalar d = JJt.determinant();
  RowX<Scalar> g = RowX<Scalar>::Zero(n);
  if (!(d > Scalar(0))) return g;
  using std::sqrt;
  const Scalar m = sqrt(d);
  const Eigen::Matrix<Scalar, 2, 2> inv = JJt.inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    // Column j of J is rot90(p_tip - p_j); only pivots beyond joint i move with it.
    MatX<Scalar> dJ(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec2<Scalar> c = rot90<Scalar>(J.col(i));
      if (j > i) c -= rot90<Scalar>(rot90<Scalar>(p.col(j) - p.col(i)));
      dJ.col(j) = c;
    }
    g(i) = m * (inv * J * dJ.transpose()).trace();
  }
  return g;
}

template <typename Scalar>
struct SegmentPoint {
  Scalar distance = std::numeric_limits<Scalar>::infinity();
  Scalar s = Scalar(0);  // position along the segment in [0, 1]
  Vec2<Scalar> point = Vec2<Scalar>::Zero();
};

template <typename Scalar>
SegmentPoint<Scalar> closest_on_segment(const Vec2<Scalar>& a, const Vec2<Scalar>& b, const Vec2<Scalar>& c) {
  const Vec2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  Scalar s = len2 > Scalar(0) ? (c - a).dot(ab) / len2 : Scalar(0);
  s = std::clamp(s, Scalar(0), Scalar(1));
  SegmentPoint<Scalar> out;
  out.s = s;
  out.point = a + s * ab;
  out.distance = (c - out.point).norm();
  return out;
}

template <typename Scalar>
struct Clearance {
  Scalar value = std::numeric_limits<Scalar>::infinity();
  Eigen::Index link = -1;
  Vec2<Scalar> point = Vec2<Scalar>::Zero();
};

/// Signed distance from the chain's links to a disk boundary; negative when
/// a link penetrates the disk.
template <typename Scalar>
Clearance<Scalar> clearance(const KinematicChain<Scalar>& chain, const Vec2<Scalar>& center, Scalar radius) {
  const auto p = joint_positions(chain);
  Clearance<Scalar> best;
  for (Eigen::Index k = 0; k < chain.dof(); ++k) {
    const auto sp = closest_on_segment<Scalar>(p.col(k), p.col(k + 1), center);
    if (sp.distance - radius < best.value) {
      best.value = sp.distance - radius;
      best.link = k;
      best.point = sp.point;
    }
  }
  return best;
}

/// Gradient of the clearance. The closest point is held as a material point
/// of its link: its motion along the segment does not change the distance to
/// first order.
template <typename Scalar>
RowX<Scalar> clearance_gradient(const KinematicChain<Scalar>& chain, const Vec2<Scalar>& center, Scalar radius) {
  const auto c = clearance(chain, center, radius);
  const Vec2<Scalar> diff = c.point - center;
  const Scalar d = diff.norm();
  if (!(d > Scalar(0))) return RowX<Scalar>::Zero(chain.dof());
  const auto p = joint_positions(chain);
  return (diff / d).transpose() * point_jacobian<Scalar>(chain, p, c.link, c.point);
}

}  // namespace flexhrc::robotsim
