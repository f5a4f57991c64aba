#include "flexhrc/recognition/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "flexhrc/error.hpp"

namespace flexhrc::recognition {

namespace {

constexpr double kG = 9.81;
constexpr double kPi = std::numbers::pi;

Eigen::Vector3d gravity(double pitch, double roll) {
  return kG * Eigen::Vector3d(-std::sin(pitch), std::sin(roll) * std::cos(pitch), std::cos(roll) * std::cos(pitch));
}

double bump(double u, double centre, double width) {
  const double z = (u - centre) / width;
  return std::exp(-0.5 * z * z);
}

std::vector<GestureTemplate> build() {
  std::vector<GestureTemplate> t;
  t.push_back({"bolt or screwdriver pick up", "pickup", 1.6, [](double u) {
                 const double pitch = 0.9 * std::sin(kPi * u) * (1 - 0.3 * u);
                 const double roll = 0.2 * u;
                 const Eigen::Vector3d body(1.2 * bump(u, 0.3, 0.18), 0.8 * bump(u, 0.65, 0.2), -1.0 * bump(u, 0.5, 0.2));
                 return Eigen::Vector3d(gravity(pitch, roll) + body);
               }});
  t.push_back({"initial bolt sink", "sink", 2.0, [](double u) {
                 const double pitch = -0.2 * std::sin(2 * kPi * u);
                 const double roll = 0.7 * std::sin(kPi * u);
                 const Eigen::Vector3d body(0.7 * bump(u, 0.5, 0.2), 0.0, -1.5 * bump(u, 0.5, 0.18));
                 return Eigen::Vector3d(gravity(pitch, roll) + body);
               }});
  t.push_back({"bolt screw", "screw", 2.4, [](double u) {
                 const double twist = std::sin(2 * kPi * u) * std::sin(kPi * u);
                 const double pitch = 0.3 * u;
                 const double roll = 0.9 * twist;
                 const Eigen::Vector3d body(0.5 * twist, 0.0, 0.0);
                 return Eigen::Vector3d(gravity(pitch, roll) + body);
               }});
  t.push_back({"screwdriver put down", "putdown", 1.4, [](double u) {
                 const double pitch = -0.8 * std::sin(kPi * u);
                 const double roll = -0.3 * std::sin(kPi * u);
                 const Eigen::Vector3d body(0.0, -1.2 * bump(u, 0.4, 0.18), 0.8 * bump(u, 0.7, 0.18));
                 return Eigen::Vector3d(gravity(pitch, roll) + body);
               }});
  return t;
}

}  // namespace

const std::vector<GestureTemplate>& gesture_templates() {
  static const std::vector<GestureTemplate> templates = build();
  return templates;
}

const GestureTemplate& gesture_template(const std::string& key) {
  for (const auto& g : gesture_templates())
    if (g.name == key || g.slug == key) return g;
  throw Error(ErrorKind::unknown_id, "gesture template '" + key + "'");
}

std::vector<InertialSample> synthesize_trial(const GestureTemplate& g, double noise_sigma, std::uint64_t seed,
                                             double rate_hz) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  const int n = static_cast<int>(std::lround(g.duration * rate_hz)) + 1;
  std::vector<InertialSample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.t = i / rate_hz;
    s.acc = g.raw(static_cast<double>(i) / (n - 1));
    if (noise_sigma > 0) s.acc += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  }
  return out;
}

SyntheticStream synthesize_gesture_stream(const GestureModel& model, double noise_sigma, std::uint64_t seed,
                                          const StreamLayout& layout) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  const double dt = 1.0 / model.rate_hz;
  const int before = static_cast<int>(std::lround(layout.rest_before * model.rate_hz));
  const int after = static_cast<int>(std::lround(layout.rest_after * model.rate_hz));
  const int n = model.native_length;

  SyntheticStream s;
  s.samples.reserve(static_cast<std::size_t>(before + n + after));
  auto emit = [&](const Eigen::Vector3d& a) {
    InertialSample x;
    x.t = layout.t0 + static_cast<double>(s.samples.size()) * dt;
    x.acc = a;
    if (noise_sigma > 0) x.acc += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    s.samples.push_back(x);
  };
  for (int i = 0; i < before; ++i) emit(model.raw_template.row(0).transpose());
  s.gesture_start = layout.t0 + before * dt;
  for (int i = 0; i < n; ++i) emit(model.raw_template.row(i).transpose());
  s.gesture_end = s.samples.back().t;
  for (int i = 0; i < after; ++i) emit(model.raw_template.row(n - 1).transpose());
  return s;
}

}  // namespace flexhrc::recognition
