#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexhrc/recognition/features.hpp"
#include "flexhrc/recognition/model.hpp"

namespace flexhrc::recognition {

/// Analytic wrist-acceleration profile of a gesture over normalized time
/// u in [0, 1]: a gravity vector tilted by pitch/roll plus body bumps.
struct GestureTemplate {
  std::string name;  // matches the action name in the cooperation graph
  std::string slug;  // file-system friendly
  double duration = 1.0;
  std::function<Eigen::Vector3d(double)> raw;
};

/// The four assembly gestures: tool pick up, initial sink, screwing, put down.
const std::vector<GestureTemplate>& gesture_templates();
const GestureTemplate& gesture_template(const std::string& name_or_slug);

/// One noisy recording of a template at `rate_hz`, starting at t = 0.
std::vector<InertialSample> synthesize_trial(const GestureTemplate& g, double noise_sigma, std::uint64_t seed,
                                             double rate_hz = 40.0);

struct StreamLayout {
  double t0 = 0.0;
  double rest_before = 1.0;  // seconds of rest at the template's first sample
  double rest_after = 1.0;   // seconds of rest at its last sample
};

struct SyntheticStream {
  std::vector<InertialSample> samples;
  double gesture_start = 0.0;  // timestamp of the first template sample
  double gesture_end = 0.0;    // timestamp of the last template sample

  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
};

/// Replays a model's raw template between two rests at the model rate, plus
/// i.i.d. Gaussian noise on every axis. Deterministic for a given seed; with
/// zero noise the template part reproduces the model curve exactly.
SyntheticStream synthesize_gesture_stream(const GestureModel& model, double noise_sigma, std::uint64_t seed,
                                          const StreamLayout& layout = {});

}  // namespace flexhrc::recognition
