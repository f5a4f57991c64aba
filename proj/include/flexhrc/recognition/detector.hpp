#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "flexhrc/recognition/features.hpp"
#include "flexhrc/recognition/model.hpp"

namespace flexhrc::recognition {

struct DetectorConfig {
  /// A trace fires once it has fallen to this fraction of its running peak.
  double threshold_ratio = 0.9;
  /// Peaks below this value are ignored; a trace that fired (or was passed
  /// over) re-arms only after dropping below it.
  double min_peak = 0.02;
  double lambda = 0.5;
  FilterConfig filter;
};

/// Per-model possibility trace state.
struct TraceState {
  double value = 0.0;
  double peak = 0.0;
  double peak_t = 0.0;
  bool armed = true;
};

struct GestureEvent {
  std::size_t model = 0;
  std::string name;
  double t_rec = 0.0;
  double peak = 0.0;
  double t_peak = 0.0;
};

/// One detection step on fresh possibility values sampled at time t.
/// A trace fires when, past its peak, it reaches threshold_ratio * peak while
/// holding the highest current value. A trace that reaches the threshold
/// while another model is higher is passed over and waits to re-arm. A
/// trace's peak is kept for reporting until it re-arms.
/// Returns the index of the firing model, if any.
std::optional<std::size_t> detect_step(std::vector<TraceState>& traces, const std::vector<double>& values, double t,
                                       const DetectorConfig& config);

/// Online recognizer: one gravity filter, one sliding window per model
/// (length = the model's native length), advanced one sample at a time.
class GestureRecognizer {
 public:
  explicit GestureRecognizer(std::vector<GestureModel> models, DetectorConfig config = {});

  std::optional<GestureEvent> push(const InertialSample& sample);
  void reset();

  const std::vector<GestureModel>& models() const { return models_; }
  const std::vector<TraceState>& traces() const { return traces_; }
  const DetectorConfig& config() const { return config_; }
  /// Index of a model by name; throws unknown_id.
  std::size_t model_index(const std::string& name) const;

 private:
  std::vector<GestureModel> models_;
  DetectorConfig config_;
  GravityFilter filter_;
  std::deque<Vector6d> history_;
  std::size_t capacity_ = 0;
  std::vector<TraceState> traces_;
  std::vector<double> values_;
};

}  // namespace flexhrc::recognition
