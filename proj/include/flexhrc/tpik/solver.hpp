#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "flexhrc/error.hpp"
#include "flexhrc/tpik/objective.hpp"

namespace flexhrc::tpik {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Singular values below sigma_min are inverted as sigma / (sigma^2 + mu^2),
/// with mu^2 = mu_max^2 (1 - (sigma / sigma_min)^2). The damped inverse is
/// continuous at sigma_min and vanishes at sigma = 0.
template <typename Scalar>
struct Damping {
  Scalar sigma_min = Scalar(1e-2);
  Scalar mu_max = Scalar(1e-1);
};

template <typename Scalar>
Scalar damped_inverse(Scalar sigma, const Damping<Scalar>& d) {
  if (sigma >= d.sigma_min) return Scalar(1) / sigma;
  const Scalar r = sigma / d.sigma_min;
  const Scalar mu2 = d.mu_max * d.mu_max * (Scalar(1) - r * r);
  const Scalar den = sigma * sigma + mu2;
  return den > Scalar(0) ? sigma / den : Scalar(0);
}

template <typename Derived>
MatX<typename Derived::Scalar> damped_pinv(const Eigen::MatrixBase<Derived>& A,
                                           const Damping<typename Derived::Scalar>& d = {}) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() == 0 || A.cols() == 0) return MatX<Scalar>::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<MatX<Scalar>> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VecX<Scalar> inv = svd.singularValues().unaryExpr([&](Scalar s) { return damped_inverse(s, d); });
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// One priority level: stacked Jacobian rows, reference rates and the
/// combined activations alpha_o * alpha_p of its scalar objectives.
template <typename Scalar>
struct LevelProblem {
  MatX<Scalar> J;
  VecX<Scalar> rate;
  VecX<Scalar> activation;
};

template <typename Scalar>
struct HierarchyResult {
  VecX<Scalar> y_dot;
  /// ||A_k (rate_k - J_k y_dot)|| per level, evaluated at the returned y_dot.
  std::vector<Scalar> residuals;
  /// Uniform factor applied to respect the speed caps (1 when not binding).
  Scalar scale = Scalar(1);
};

/// Cascaded damped least squares over the levels, highest priority first:
///   y_k = y_{k-1} + P_{k-1} pinv(A_k J_k P_{k-1}) A_k (rate_k - J_k y_{k-1})
///   P_k = P_{k-1} (I - pinv(A_k J_k P_{k-1}) A_k J_k P_{k-1})
/// Rows with activation exactly zero are dropped, so a deactivated objective
/// is indistinguishable from an absent one. When `caps` is non-empty the
/// result is scaled uniformly so that |y_i| <= caps_i.
template <typename Scalar>
HierarchyResult<Scalar> solve_hierarchy(const std::vector<LevelProblem<Scalar>>& levels, Eigen::Index n,
                                        const Damping<Scalar>& damping = {}, const VecX<Scalar>& caps = {}) {
  if (caps.size() != 0 && caps.size() != n) throw Error(ErrorKind::dimension_mismatch, "speed cap vector size");
  VecX<Scalar> y = VecX<Scalar>::Zero(n);
  MatX<Scalar> P = MatX<Scalar>::Identity(n, n);

  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& L = levels[k];
    const std::string where = "level " + std::to_string(k + 1);
    if (L.J.cols() != n) throw Error(ErrorKind::dimension_mismatch, where + ": Jacobian width");
    if (L.rate.size() != L.J.rows() || L.activation.size() != L.J.rows())
      throw Error(ErrorKind::dimension_mismatch, where + ": rate/activation size");
    if (!L.J.allFinite() || !L.rate.allFinite() || !L.activation.allFinite())
      throw Error(ErrorKind::numerical, where + ": non-finite input");

    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < L.J.rows(); ++r)
      if (L.activation(r) != Scalar(0)) rows.push_back(r);
    if (rows.empty()) continue;

    const auto m = static_cast<Eigen::Index>(rows.size());
    MatX<Scalar> AJ(m, n);
    VecX<Scalar> err(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index r = rows[static_cast<std::size_t>(i)];
      AJ.row(i) = L.activation(r) * L.J.row(r);
      err(i) = L.activation(r) * (L.rate(r) - L.J.row(r).dot(y));
    }
    const MatX<Scalar> JP = AJ * P;
    const MatX<Scalar> pinv = damped_pinv(JP, damping);
    y += P * (pinv * err);
    P = P * (MatX<Scalar>::Identity(n, n) - pinv * JP);
  }

  HierarchyResult<Scalar> out;
  if (caps.size() == n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      using std::abs;
      if (abs(y(i)) > caps(i)) out.scale = std::min(out.scale, caps(i) / abs(y(i)));
    }
    y *= out.scale;
  }
  out.y_dot = y;
  for (const auto& L : levels)
    out.residuals.push_back((L.activation.asDiagonal() * (L.rate - L.J * y)).norm());
  return out;
}

}  // namespace flexhrc::tpik
