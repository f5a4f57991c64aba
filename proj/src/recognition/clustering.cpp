#include "flexhrc/recognition/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "flexhrc/error.hpp"

namespace flexhrc::recognition {

namespace {

int nearest(const Eigen::MatrixXd& centers, const Eigen::RowVectorXd& x, double* dist2 = nullptr) {
  Eigen::Index best = 0;
  const double d = (centers.rowwise() - x).rowwise().squaredNorm().minCoeff(&best);
  if (dist2) *dist2 = d;
  return static_cast<int>(best);
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::mt19937_64& rng, int max_iterations) {
  const Eigen::Index n = data.rows();
  if (k < 1 || n < k) throw Error(ErrorKind::invalid_argument, "k-means needs 1 <= k <= number of points");

  // k-means++ seeding.
  KMeansResult r;
  r.centers.resize(k, data.cols());
  r.centers.row(0) = data.row(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  Eigen::VectorXd d2 = (data.rowwise() - r.centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        u -= d2(pick);
        if (u <= 0) break;
      }
    } else {
      pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    }
    r.centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - r.centers.row(c)).rowwise().squaredNorm());
  }

  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = nearest(r.centers, data.row(i));
      if (l != r.labels[static_cast<std::size_t>(i)]) {
        r.labels[static_cast<std::size_t>(i)] = l;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(r.labels[static_cast<std::size_t>(i)]) += data.row(i);
      ++counts(r.labels[static_cast<std::size_t>(i)]);
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) r.centers.row(c) = sums.row(c) / counts(c);
  }
  r.inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (data.row(i) - r.centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return r;
}

double mean_silhouette(const Eigen::MatrixXd& data, const std::vector<int>& labels) {
  const Eigen::Index n = data.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw Error(ErrorKind::dimension_mismatch, "labels vs points");
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++size[static_cast<std::size_t>(l)];

  double total = 0;
  std::vector<double> sum(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    if (size[li] <= 1) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (data.row(i) - data.row(j)).norm();
    const double a = sum[li] / (size[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != li && size[c] > 0) b = std::min(b, sum[c] / size[c]);
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

ModelOrder select_order(const Eigen::MatrixXd& data, int k_min, int k_max, std::size_t subsample, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd pts = data;
  if (static_cast<std::size_t>(data.rows()) > subsample) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(subsample);
    std::sort(idx.begin(), idx.end());
    pts.resize(static_cast<Eigen::Index>(subsample), data.cols());
    for (std::size_t i = 0; i < subsample; ++i) pts.row(static_cast<Eigen::Index>(i)) = data.row(idx[i]);
  }
  k_max = std::min<int>(k_max, static_cast<int>(pts.rows()) - 1);
  if (k_max < k_min) throw Error(ErrorKind::invalid_argument, "too few points for model order selection");

  ModelOrder out;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    const auto km = kmeans(pts, k, rng);
    const double s = mean_silhouette(pts, km.labels);
    out.scores.push_back(s);
    if (s > best) {
      best = s;
      out.k = k;
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& data) {
  Standardizer s;
  s.mean = data.colwise().mean();
  const Eigen::MatrixXd centred = data.rowwise() - s.mean;
  s.scale = (centred.colwise().squaredNorm() / std::max<Eigen::Index>(1, data.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 0)) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& data) const {
  return (data.rowwise() - mean).array().rowwise() / scale.array();
}

}  // namespace flexhrc::recognition
