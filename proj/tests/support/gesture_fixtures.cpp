#include "support/gesture_fixtures.hpp"

#include <algorithm>

namespace flexhrc::testing {

using namespace recognition;

std::vector<std::vector<FeatureFrame>> fixture_trials(const GestureTemplate& g, int count, double noise,
                                                      std::uint64_t seed) {
  std::vector<std::vector<FeatureFrame>> out;
  for (int i = 0; i < count; ++i) out.push_back(extract_features(synthesize_trial(g, noise, seed + i)));
  return out;
}

const std::vector<GestureModel>& fixture_models() {
  static const std::vector<GestureModel> models = [] {
    std::vector<GestureModel> m;
    for (const auto& g : gesture_templates()) m.push_back(train_model(g.name, fixture_trials(g, 10, 0.05, 1000)));
    return m;
  }();
  return models;
}

DetectionStats detection_stats(const std::vector<GestureModel>& models, std::size_t truth, int trials, double noise,
                               std::uint64_t seed, const DetectorConfig& config) {
  DetectionStats st;
  for (int k = 0; k < trials; ++k) {
    GestureRecognizer rec(models, config);
    const auto s = synthesize_gesture_stream(models[truth], noise, seed + static_cast<std::uint64_t>(k));
    std::vector<GestureEvent> events;
    for (const auto& x : s.samples)
      if (auto e = rec.push(x)) {
        st.ordered = st.ordered && e->t_rec >= e->t_peak;
        events.push_back(*e);
      }
    ++st.trials;
    if (events.size() > 1) st.extra_events += static_cast<int>(events.size() - 1);
    st.duration_sum += s.duration();
    if (events.empty()) {
      ++st.missed;
    } else if (events.front().model == truth) {
      ++st.correct;
      const double d = events.front().t_rec - s.gesture_end;
      st.delay_sum += d;
      st.worst_delay = std::max(st.worst_delay, d);
    } else {
      ++st.wrong;
    }
  }
  return st;
}

}  // namespace flexhrc::testing
