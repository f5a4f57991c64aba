#include "flexhrc/recognition/detector.hpp"

#include <algorithm>

#include "flexhrc/error.hpp"

namespace flexhrc::recognition {

std::optional<std::size_t> detect_step(std::vector<TraceState>& traces, const std::vector<double>& values, double t,
                                       const DetectorConfig& config) {
  if (traces.size() != values.size()) throw Error(ErrorKind::dimension_mismatch, "one value per trace");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& tr = traces[i];
    tr.value = values[i];
    if (!tr.armed) {
      if (tr.value < config.min_peak) tr = TraceState{tr.value, 0.0, 0.0, true};
      continue;
    }
    if (tr.value > tr.peak) {
      tr.peak = tr.value;
      tr.peak_t = t;
    }
  }

  const double highest = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  std::optional<std::size_t> fired;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& tr = traces[i];
    if (!tr.armed || tr.peak < config.min_peak || tr.value > config.threshold_ratio * tr.peak) continue;
    if (!fired && tr.value >= highest) fired = i;
    // Fired or passed over: either way this peak is spent.
    tr.armed = false;
  }
  return fired;
}

GestureRecognizer::GestureRecognizer(std::vector<GestureModel> models, DetectorConfig config)
    : models_(std::move(models)), config_(config), filter_(config.filter) {
  for (const auto& m : models_) capacity_ = std::max(capacity_, static_cast<std::size_t>(m.native_length));
  reset();
}

void GestureRecognizer::reset() {
  filter_.reset();
  history_.clear();
  traces_.assign(models_.size(), TraceState{});
  values_.assign(models_.size(), 0.0);
}

std::size_t GestureRecognizer::model_index(const std::string& name) const {
  for (std::size_t i = 0; i < models_.size(); ++i)
    if (models_[i].name == name) return i;
  throw Error(ErrorKind::unknown_id, "gesture model '" + name + "'");
}

std::optional<GestureEvent> GestureRecognizer::push(const InertialSample& sample) {
  history_.push_back(filter_.push(sample).stacked());
  if (history_.size() > capacity_) history_.pop_front();

  for (std::size_t m = 0; m < models_.size(); ++m) {
    const auto n = static_cast<std::size_t>(models_[m].native_length);
    if (history_.size() < n) {
      values_[m] = 0.0;
      continue;
    }
    Eigen::MatrixXd window(static_cast<Eigen::Index>(n), 6);
    const std::size_t first = history_.size() - n;
    for (std::size_t i = 0; i < n; ++i) window.row(static_cast<Eigen::Index>(i)) = history_[first + i].transpose();
    values_[m] = possibility(window, models_[m], config_.lambda);
  }

  const auto fired = detect_step(traces_, values_, sample.t, config_);
  if (!fired) return std::nullopt;
  const auto& tr = traces_[*fired];
  return GestureEvent{*fired, models_[*fired].name, sample.t, tr.peak, tr.peak_t};
}

}  // namespace flexhrc::recognition
