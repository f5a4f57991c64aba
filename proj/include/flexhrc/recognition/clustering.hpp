#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace flexhrc::recognition {

/// Rows of `data` are points.
struct KMeansResult {
  Eigen::MatrixXd centers;  // k x d
  std::vector<int> labels;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding. Deterministic for a given rng state.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng, int max_iterations = 100);

/// Mean silhouette coefficient of a labelling (points in singleton clusters
/// score 0).
double mean_silhouette(const Eigen::MatrixXd& data, const std::vector<int>& labels);

struct ModelOrder {
  int k = 0;
  std::vector<double> scores;  // silhouette per candidate, k_min first
};

/// Picks k in [k_min, k_max] maximizing the mean silhouette of k-means on a
/// random subsample of at most `subsample` points. Ties go to the smaller k.
ModelOrder select_order(const Eigen::MatrixXd& data, int k_min, int k_max, std::size_t subsample, std::uint64_t seed);

/// Column-wise z-scoring; zero-variance columns are left centred.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& data);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
};

}  // namespace flexhrc::recognition
