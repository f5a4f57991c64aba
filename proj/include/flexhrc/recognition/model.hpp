#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexhrc/recognition/features.hpp"
#include "flexhrc/recognition/gmm.hpp"

namespace flexhrc::recognition {

using CurveMatrix = Eigen::Matrix<double, Eigen::Dynamic, 6>;

struct TrainingConfig {
  int length = 100;  // L
  int k_min = 2;
  int k_max = 10;
  std::size_t silhouette_subsample = 500;
  EmConfig em;
  double covariance_floor = 1e-6;
  FilterConfig filter;
  std::uint64_t seed = 1;
};

/// Expected feature curve over normalized time with per-point covariances.
///
/// The curve is filter-consistent: it is the feature decomposition of
/// `raw_template` (native_length samples at rate_hz) seeded at its first
/// sample, resampled to `length` points. Replaying the template after a rest
/// at its first sample therefore reproduces the curve exactly. Training picks
/// the template whose features come closest to the regressed mean.
struct GestureModel {
  std::string name;
  int length = 100;
  int native_length = 0;
  double rate_hz = 40.0;
  int n_gaussians = 0;
  CurveMatrix curve;
  std::vector<Matrix6d> covariances;
  Eigen::Matrix<double, Eigen::Dynamic, 3> raw_template;

  /// Seconds spanned by the native window.
  double duration() const { return (native_length - 1) / rate_hz; }

  /// Validates shapes and caches the inverse covariances.
  void finalize();
  const std::vector<Matrix6d>& precisions() const { return precisions_; }

  nlohmann::json to_json() const;
  static GestureModel from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static GestureModel load(const std::filesystem::path& path);

 private:
  std::vector<Matrix6d> precisions_;
};

/// Trains a model from feature trials. Throws invalid_argument for fewer
/// than two trials, trials shorter than length/2 or degenerate data, and
/// not_converged when EM fails.
GestureModel train_model(const std::string& name, const std::vector<std::vector<FeatureFrame>>& trials,
                         const TrainingConfig& config = {});

/// Raw template of `native_length` samples whose resampled features minimize
/// the summed Mahalanobis distance to the per-point regression means.
Eigen::MatrixXd consistent_template(const std::vector<Vector6d>& means, const std::vector<Matrix6d>& covariances,
                                    int native_length, double rate_hz, const FilterConfig& filter = {});

/// Linear resampling of the rows of `m` onto `length` evenly spaced points
/// spanning the same normalized interval.
Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, Eigen::Index length);

/// exp(-lambda * mean squared Mahalanobis distance) between the resampled
/// window and the curve. Throws invalid_argument for fewer than two frames.
double possibility(const std::vector<FeatureFrame>& window, const GestureModel& model, double lambda = 0.5);
/// Same on an already stacked (n x 6) feature matrix.
double possibility(const Eigen::MatrixXd& window, const GestureModel& model, double lambda = 0.5);

/// Loads every *.json model in a directory, sorted by file name.
std::vector<GestureModel> load_model_directory(const std::filesystem::path& dir);

}  // namespace flexhrc::recognition
