#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace flexhrc::recognition {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct InertialSample {
  double t = 0.0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
};

struct FeatureFrame {
  double t = 0.0;
  Eigen::Vector3d gravity = Eigen::Vector3d::Zero();
  Eigen::Vector3d body = Eigen::Vector3d::Zero();

  /// (gravity, body) stacked.
  Vector6d stacked() const {
    Vector6d f;
    f << gravity, body;
    return f;
  }
};

struct FilterConfig {
  double cutoff_hz = 0.3;
  double rate_hz = 40.0;
};

/// Single-pole low-pass separating gravity from body acceleration. The
/// smoothing factor dt / (RC + dt) uses each sample's actual spacing (the
/// nominal rate for the first sample after a reset). Without a supplied
/// state the first sample seeds it.
class GravityFilter {
 public:
  explicit GravityFilter(FilterConfig config = {}) : config_(config) {}

  FeatureFrame push(const InertialSample& s);
  void reset(std::optional<Eigen::Vector3d> state = std::nullopt);
  bool primed() const { return state_.has_value(); }
  const FilterConfig& config() const { return config_; }

  /// Smoothing factor for a sample spacing of `dt` seconds.
  double alpha(double dt) const;

 private:
  FilterConfig config_;
  std::optional<Eigen::Vector3d> state_;
  std::optional<double> last_t_;
};

/// Batch feature extraction. Throws invalid_argument for an empty stream or
/// timestamps that do not strictly increase.
std::vector<FeatureFrame> extract_features(const std::vector<InertialSample>& stream, const FilterConfig& config = {},
                                           std::optional<Eigen::Vector3d> initial_state = std::nullopt);

/// Reads a `t,ax,ay,az` CSV file (header line optional).
std::vector<InertialSample> read_stream_csv(const std::filesystem::path& path);
void write_stream_csv(const std::filesystem::path& path, const std::vector<InertialSample>& stream);

}  // namespace flexhrc::recognition
