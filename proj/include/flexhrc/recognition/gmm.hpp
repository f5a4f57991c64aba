#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace flexhrc::recognition {

struct Gaussian {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct GaussianMixture {
  std::vector<Gaussian> components;

  Eigen::Index dim() const { return components.empty() ? 0 : components.front().mean.size(); }
  /// Mean per-point log-likelihood of the rows of `data`.
  double mean_log_likelihood(const Eigen::MatrixXd& data) const;
  /// Applies x -> offset + scale .* x to every component.
  GaussianMixture affine(const Eigen::VectorXd& offset, const Eigen::VectorXd& scale) const;
};

struct EmConfig {
  int restarts = 5;
  int max_iterations = 200;
  /// Convergence threshold on the change of the mean log-likelihood.
  double tolerance = 1e-6;
  /// Added to covariance diagonals after every M-step.
  double ridge = 1e-6;
};

struct EmResult {
  GaussianMixture mixture;
  double mean_log_likelihood = 0.0;
  int iterations = 0;
  int converged_restarts = 0;
};

/// Expectation-maximization from k-means initializations, one per restart
/// (different seeds). Keeps the best converged restart. Throws not_converged
/// when no restart meets the tolerance within max_iterations.
EmResult fit_gmm(const Eigen::MatrixXd& data, int k, const EmConfig& config, std::uint64_t seed);

struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Gaussian mixture regression on input dimension 0: the mean and total
/// covariance of the remaining dimensions given x_0 = t.
Conditional regress(const GaussianMixture& mixture, double t);

/// Symmetrizes and clamps eigenvalues from below.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor);

}  // namespace flexhrc::recognition
