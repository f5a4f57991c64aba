#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "flexhrc/error.hpp"
#include "flexhrc/recognition/clustering.hpp"
#include "flexhrc/recognition/detector.hpp"
#include "flexhrc/recognition/features.hpp"
#include "flexhrc/recognition/gmm.hpp"
#include "flexhrc/recognition/model.hpp"
#include "flexhrc/recognition/synth.hpp"
#include "support/gesture_fixtures.hpp"

using namespace flexhrc;
using namespace flexhrc::recognition;
using flexhrc::testing::fixture_models;
using flexhrc::testing::fixture_trials;

namespace {

std::vector<InertialSample> sampled(int n, double rate, const std::function<Eigen::Vector3d(double)>& f) {
  std::vector<InertialSample> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = {i / rate, f(i / rate)};
  return s;
}

Eigen::MatrixXd stacked(const std::vector<FeatureFrame>& frames) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), 6);
  for (std::size_t i = 0; i < frames.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = frames[i].stacked().transpose();
  return m;
}

std::vector<double> possibility_trace(const GestureModel& model, const std::vector<InertialSample>& stream) {
  const auto frames = stacked(extract_features(stream));
  const Eigen::Index n = model.native_length;
  std::vector<double> out;
  for (Eigen::Index end = n; end <= frames.rows(); ++end)
    out.push_back(possibility(Eigen::MatrixXd(frames.middleRows(end - n, n)), model));
  return out;
}

}  // namespace

TEST_CASE("gravity filter: constant input settles to gravity with zero body") {
  const auto frames = extract_features(sampled(200, 40.0, [](double) { return Eigen::Vector3d(0, 0, 9.81); }));
  REQUIRE(frames.size() == 200);
  for (const auto& f : frames) {
    CHECK(f.gravity.isApprox(Eigen::Vector3d(0, 0, 9.81), 1e-15));
    CHECK(f.body.norm() < 1e-12);
  }
}

TEST_CASE("gravity filter: a 2 Hz sinusoid survives within the single-pole attenuation bound") {
  const double rate = 40.0, f = 2.0, amp = 1.5;
  const FilterConfig cfg;
  const double dt = 1.0 / rate;
  const double rc = 1.0 / (2 * std::numbers::pi * cfg.cutoff_hz);
  const double a = dt / (rc + dt);
  // Low-pass leakage |H(e^{jw})| = a / |1 - (1 - a) e^{-jw}|; the body channel
  // differs from the input sinusoid by exactly that leaked component.
  const double w = 2 * std::numbers::pi * f / rate;
  const double leak = a / std::abs(1.0 - (1.0 - a) * std::polar(1.0, -w));
  CHECK(leak == doctest::Approx(0.1457).epsilon(1e-3));

  const auto input = [&](double t) { return Eigen::Vector3d(amp * std::sin(2 * std::numbers::pi * f * t), 0, 9.81); };
  const auto frames = extract_features(sampled(1200, rate, input));
  double worst = 0;
  for (const auto& fr : frames) {
    if (fr.t < 10.0) continue;  // transient decays as (1 - a)^k
    worst = std::max(worst, std::abs(fr.body.x() - input(fr.t).x()));
    CHECK(std::abs(fr.body.z()) < 1e-9);
  }
  CHECK(worst <= amp * leak * (1 + 1e-6));
  CHECK(worst >= 0.9 * amp * leak);  // bound is tight, not vacuous
}

TEST_CASE("gravity filter: errors and identity") {
  CHECK_THROWS_AS(extract_features({}), Error);
  std::vector<InertialSample> bad{{0.0, {}}, {0.1, {}}, {0.1, {}}};
  CHECK_THROWS_AS(extract_features(bad), Error);
  bad[2].t = 0.05;
  CHECK_THROWS_AS(extract_features(bad), Error);

  const auto trial = synthesize_trial(gesture_template("screw"), 0.05, 3);
  const auto frames = extract_features(trial);
  REQUIRE(frames.size() == trial.size());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    CHECK(frames[i].t == trial[i].t);
    CHECK((frames[i].gravity + frames[i].body - trial[i].acc).cwiseAbs().maxCoeff() <= 4e-15 * 16);
  }
}

TEST_CASE("gravity filter: streaming equals batch, reset restores initial behaviour") {
  const auto trial = synthesize_trial(gesture_template("pickup"), 0.05, 9);
  const auto batch = extract_features(trial);
  GravityFilter g;
  for (int pass = 0; pass < 2; ++pass) {
    g.reset();
    CHECK_FALSE(g.primed());
    for (std::size_t i = 0; i < trial.size(); ++i) CHECK(g.push(trial[i]).gravity == batch[i].gravity);
  }
}

TEST_CASE("silhouette selects k = 2 on two well separated clusters") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Eigen::MatrixXd data(400, 3);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double c = i < 200 ? 0.0 : 20.0;
    data.row(i) << c + jitter(rng), jitter(rng), jitter(rng);
  }
  const auto order = select_order(data, 2, 10, 500, 1);
  CHECK(order.k == 2);
  REQUIRE(order.scores.size() == 9);
  // Within-cluster distances are O(0.1) against 20 between clusters, so the
  // mean silhouette at k = 2 sits within a few percent of 1.
  CHECK(order.scores[0] > 0.98);
  for (std::size_t j = 1; j < order.scores.size(); ++j) CHECK(order.scores[j] < order.scores[0]);
}

TEST_CASE("mean_silhouette against a direct evaluation") {
  // Four points on a line: {0, 1} and {5, 7}.
  Eigen::MatrixXd data(4, 1);
  data << 0, 1, 5, 7;
  const std::vector<int> labels{0, 0, 1, 1};
  // s = (b - a) / max(a, b) per point.
  const double s0 = (6.0 - 1.0) / 6.0, s1 = (5.0 - 1.0) / 5.0;
  const double s2 = (4.5 - 2.0) / 4.5, s3 = (6.5 - 2.0) / 6.5;
  CHECK(mean_silhouette(data, labels) == doctest::Approx((s0 + s1 + s2 + s3) / 4).epsilon(1e-14));
}

TEST_CASE("train_model: preconditions") {
  const auto& g = gesture_template("sink");
  const auto one = fixture_trials(g, 1, 0.05, 1);
  CHECK_THROWS_AS(train_model(g.name, one), Error);

  std::vector<std::vector<FeatureFrame>> flat(3, extract_features(sampled(80, 40.0, [](double) {
                                                return Eigen::Vector3d(0, 0, 9.81);
                                              })));
  CHECK_THROWS_AS(train_model("flat", flat), Error);

  auto shortt = fixture_trials(g, 2, 0.05, 1);
  shortt[1].resize(30);
  CHECK_THROWS_AS(train_model(g.name, shortt), Error);
}

TEST_CASE("train_model: curve length is independent of the trial count") {
  const auto& g = gesture_template("putdown");
  const auto few = train_model(g.name, fixture_trials(g, 2, 0.05, 10));
  const auto many = train_model(g.name, fixture_trials(g, 20, 0.05, 10));
  CHECK(few.length == 100);
  CHECK(many.length == 100);
  CHECK(few.curve.rows() == many.curve.rows());
  CHECK(few.covariances.size() == many.covariances.size());
}

TEST_CASE("train_model: curve stays within the 3 sigma band of the template") {
  for (const auto& model : fixture_models()) {
    CAPTURE(model.name);
    const auto& g = gesture_template(model.name);
    CHECK(model.n_gaussians >= 2);
    CHECK(model.n_gaussians <= 10);
    const Eigen::MatrixXd truth = resample_rows(stacked(extract_features(synthesize_trial(g, 0.0, 0))), model.length);
    for (Eigen::Index j = 0; j < model.length; ++j)
      for (int c = 0; c < 6; ++c) {
        const double sigma = std::sqrt(model.covariances[static_cast<std::size_t>(j)](c, c));
        CHECK(std::abs(model.curve(j, c) - truth(j, c)) <= 3 * sigma);
      }
    for (const auto& cov : model.covariances) {
      CHECK((cov - cov.transpose()).norm() == 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix6d>(cov).eigenvalues().minCoeff() >= 1e-6 * (1 - 1e-9));
    }
  }
}

TEST_CASE("possibility: range, exact match and far offset") {
  const auto& model = fixture_models().front();
  CHECK(possibility(model.curve, model) == 1.0);

  Eigen::MatrixXd far = model.curve;
  for (Eigen::Index j = 0; j < model.length; ++j)
    far(j, 0) += 10 * std::sqrt(model.covariances[static_cast<std::size_t>(j)](0, 0));
  // Each squared distance is at least 100, so the value is at most exp(-50).
  CHECK(possibility(far, model) < std::exp(-50.0) * (1 + 1e-9));
  CHECK(possibility(far, model) < 0.01);

  CHECK_THROWS_AS(possibility(Eigen::MatrixXd(model.curve.topRows(1)), model), Error);
  CHECK_THROWS_AS(possibility(Eigen::MatrixXd::Zero(10, 5), model), Error);
}

TEST_CASE("possibility: scaling the deviation strictly decreases it") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 0.05);
  for (const auto& model : fixture_models()) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd dev = Eigen::MatrixXd::NullaryExpr(model.length, 6, [&] { return n(rng); });
      double prev = 1.0;
      for (double c : {0.5, 1.0, 1.5, 2.0, 4.0}) {
        const double p = possibility(Eigen::MatrixXd(model.curve + c * dev), model);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p < prev);
        prev = p;
      }
    }
  }
}

TEST_CASE("possibility: sliding a true stream rises to a peak then declines") {
  for (std::size_t m = 0; m < fixture_models().size(); ++m) {
    const auto& model = fixture_models()[m];
    CAPTURE(model.name);
    const auto s = synthesize_gesture_stream(model, 0.0, 1);
    const auto trace = possibility_trace(model, s.samples);
    const auto peak = static_cast<std::size_t>(std::max_element(trace.begin(), trace.end()) - trace.begin());
    // Window ending at sample k covers samples k - N + 1 .. k; full overlap ends at the gesture's last sample.
    const auto full = static_cast<std::size_t>(std::lround((s.gesture_end - s.samples.front().t) * model.rate_hz)) -
                      static_cast<std::size_t>(model.native_length - 1);
    CHECK(peak == full);
    CHECK(trace[peak] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(trace[peak] >= 0.99);
    CHECK(trace[peak / 2] < 0.5);
    CHECK(trace.back() < 0.9 * trace[peak]);
  }
}

TEST_CASE("detect_step: single trace fires at the 90% crossing") {
  std::vector<TraceState> traces(1);
  const std::vector<double> series{0.0, 0.3, 0.6, 0.95, 0.9, 0.87, 0.85, 0.6};
  std::vector<int> fired_at;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (detect_step(traces, {series[i]}, static_cast<double>(i), {})) fired_at.push_back(static_cast<int>(i));
  REQUIRE(fired_at.size() == 1);
  CHECK(fired_at[0] == 6);  // first value <= 0.855
  CHECK(traces[0].peak == 0.95);
  CHECK(traces[0].peak_t == 3.0);
}

TEST_CASE("detect_step: a falling trace below another model does not fire") {
  std::vector<TraceState> traces(2);
  DetectorConfig cfg;
  CHECK_FALSE(detect_step(traces, {0.5, 0.3}, 0, cfg));
  CHECK_FALSE(detect_step(traces, {1.0, 0.6}, 1, cfg));
  CHECK_FALSE(detect_step(traces, {0.95, 0.8}, 2, cfg));
  // A reaches 0.9 of its peak while B is at 0.95.
  CHECK_FALSE(detect_step(traces, {0.9, 0.95}, 3, cfg));
  CHECK_FALSE(traces[0].armed);
  // A passed over stays silent even once it is the highest again.
  CHECK_FALSE(detect_step(traces, {0.88, 0.97}, 4, cfg));
  CHECK_FALSE(detect_step(traces, {0.99, 0.9}, 5, cfg));
  const auto b = detect_step(traces, {0.5, 0.85}, 6, cfg);
  REQUIRE(b);
  CHECK(*b == 1);
}

TEST_CASE("detect_step: rising trace never fires, re-arm after falling below min_peak") {
  std::vector<TraceState> traces(1);
  for (int i = 0; i <= 100; ++i) CHECK_FALSE(detect_step(traces, {i / 100.0}, i, {}));
  CHECK(detect_step(traces, {0.5}, 101, {}));
  CHECK_FALSE(detect_step(traces, {0.9}, 102, {}));  // spent until re-armed
  CHECK_FALSE(detect_step(traces, {0.01}, 103, {}));
  CHECK(traces[0].armed);
  CHECK(traces[0].peak == 0.0);
  CHECK_FALSE(detect_step(traces, {0.6}, 104, {}));
  CHECK(detect_step(traces, {0.5}, 105, {}));
  std::vector<TraceState> two(2);
  CHECK_THROWS_AS(detect_step(two, {0.1}, 0, {}), Error);
}

TEST_CASE("synthesize_gesture_stream: deterministic and exact without noise") {
  const auto& model = fixture_models()[1];
  const auto a = synthesize_gesture_stream(model, 0.05, 7);
  const auto b = synthesize_gesture_stream(model, 0.05, 7);
  const auto c = synthesize_gesture_stream(model, 0.05, 8);
  REQUIRE(a.samples.size() == b.samples.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK(a.samples[i].acc == b.samples[i].acc);
    differs = differs || a.samples[i].acc != c.samples[i].acc;
  }
  CHECK(differs);
  CHECK(a.samples.size() == static_cast<std::size_t>(40 + model.native_length + 40));
  for (std::size_t i = 1; i < a.samples.size(); ++i) CHECK(a.samples[i].t > a.samples[i - 1].t);
}

TEST_CASE("recognizer: seed 42 at sigma 0.05 fires for the true model within a quarter of its duration") {
  const auto& models = fixture_models();
  for (std::size_t m = 0; m < models.size(); ++m) {
    CAPTURE(models[m].name);
    GestureRecognizer rec(models);
    const auto s = synthesize_gesture_stream(models[m], 0.05, 42);
    std::optional<GestureEvent> first;
    for (const auto& x : s.samples)
      if (auto e = rec.push(x); e && !first) first = e;
    REQUIRE(first);
    CHECK(first->model == m);
    CHECK(first->name == models[m].name);
    CHECK(first->t_rec >= first->t_peak);
    CHECK(first->t_rec >= s.gesture_end);
    CHECK(first->t_rec - s.gesture_end <= 0.25 * models[m].duration());
  }
}

TEST_CASE("recognizer: noiseless replay detects every model exactly one sample after full overlap") {
  const auto& models = fixture_models();
  for (std::size_t m = 0; m < models.size(); ++m) {
    GestureRecognizer rec(models);
    const auto s = synthesize_gesture_stream(models[m], 0.0, 0);
    std::vector<GestureEvent> events;
    for (const auto& x : s.samples)
      if (auto e = rec.push(x)) events.push_back(*e);
    REQUIRE(events.size() == 1);
    CHECK(events[0].model == m);
    CHECK(events[0].peak == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(events[0].t_peak == doctest::Approx(s.gesture_end).epsilon(1e-12));
    CHECK(events[0].t_rec > s.gesture_end);
  }
  GestureRecognizer rec(models);
  CHECK(rec.model_index(models[2].name) == 2);
  CHECK_THROWS_AS(rec.model_index("wave"), Error);
}

TEST_CASE("gesture model JSON round trip") {
  const auto& model = fixture_models()[2];
  const auto back = GestureModel::from_json(model.to_json());
  CHECK(back.name == model.name);
  CHECK(back.length == model.length);
  CHECK(back.native_length == model.native_length);
  CHECK(back.n_gaussians == model.n_gaussians);
  CHECK(back.rate_hz == model.rate_hz);
  CHECK(back.curve == model.curve);
  CHECK(back.raw_template == model.raw_template);
  for (std::size_t j = 0; j < model.covariances.size(); ++j) CHECK(back.covariances[j] == model.covariances[j]);

  auto doc = model.to_json();
  doc["version"] = 2;
  CHECK_THROWS_AS(GestureModel::from_json(doc), Error);
  doc = model.to_json();
  doc["curve"].erase(0);
  CHECK_THROWS_AS(GestureModel::from_json(doc), Error);

  const auto dir = std::filesystem::temp_directory_path() / "flexhrc_model_rt";
  std::filesystem::create_directories(dir);
  model.save(dir / "m.json");
  CHECK(GestureModel::load(dir / "m.json").curve == model.curve);
  CHECK(load_model_directory(dir).size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stream CSV round trip") {
  const auto trial = synthesize_trial(gesture_template("pickup"), 0.05, 4);
  const auto path = std::filesystem::temp_directory_path() / "flexhrc_stream.csv";
  write_stream_csv(path, trial);
  const auto back = read_stream_csv(path);
  REQUIRE(back.size() == trial.size());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    CHECK(back[i].t == trial[i].t);
    CHECK(back[i].acc == trial[i].acc);
  }
  std::filesystem::remove(path);
}

TEST_CASE("EM: recovers a two component mixture and regresses through it") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.1);
  Eigen::MatrixXd data(600, 2);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double t = i < 300 ? 0.0 : 1.0;
    data.row(i) << t + n(rng), 5 * t - 2 + n(rng);
  }
  const auto em = fit_gmm(data, 2, {}, 11);
  CHECK(em.converged_restarts >= 1);
  REQUIRE(em.mixture.components.size() == 2);
  for (const auto& c : em.mixture.components) CHECK(c.weight == doctest::Approx(0.5).epsilon(0.02));
  CHECK(regress(em.mixture, 0.0).mean(0) == doctest::Approx(-2.0).epsilon(0.03));
  CHECK(regress(em.mixture, 1.0).mean(0) == doctest::Approx(3.0).epsilon(0.03));

  EmConfig strict;
  strict.max_iterations = 1;
  strict.tolerance = 0.0;
  CHECK_THROWS_AS(fit_gmm(data, 2, strict, 11), Error);
}
