#include "flexhrc/recognition/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "flexhrc/error.hpp"
#include "flexhrc/recognition/clustering.hpp"

namespace flexhrc::recognition {

namespace {

/// log N(x; mean, L L^T) for each row of `data`.
Eigen::VectorXd log_density(const Eigen::MatrixXd& data, const Gaussian& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::numerical, "covariance not positive definite");
  const Eigen::MatrixXd centred = (data.rowwise() - g.mean.transpose()).transpose();
  const Eigen::MatrixXd z = llt.matrixL().solve(centred);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double c = -0.5 * (static_cast<double>(g.mean.size()) * std::log(2.0 * std::numbers::pi) + log_det);
  return (c - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
}

/// Row-wise log-sum-exp of per-component log responsibilities.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  return mx.array() + ((m.colwise() - mx).array().exp().rowwise().sum()).log();
}

Eigen::MatrixXd weighted_log_densities(const GaussianMixture& gm, const Eigen::MatrixXd& data) {
  Eigen::MatrixXd lp(data.rows(), static_cast<Eigen::Index>(gm.components.size()));
  for (std::size_t c = 0; c < gm.components.size(); ++c)
    lp.col(static_cast<Eigen::Index>(c)) =
        log_density(data, gm.components[c]).array() + std::log(gm.components[c].weight);
  return lp;
}

GaussianMixture from_labels(const Eigen::MatrixXd& data, const std::vector<int>& labels, int k, double ridge) {
  GaussianMixture gm;
  const Eigen::Index d = data.cols();
  for (int c = 0; c < k; ++c) {
    Gaussian g;
    Eigen::Index count = 0;
    g.mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      if (labels[static_cast<std::size_t>(i)] == c) {
        g.mean += data.row(i).transpose();
        ++count;
      }
    if (count == 0) continue;
    g.mean /= static_cast<double>(count);
    g.cov = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      if (labels[static_cast<std::size_t>(i)] == c) {
        const Eigen::VectorXd x = data.row(i).transpose() - g.mean;
        g.cov += x * x.transpose();
      }
    g.cov /= static_cast<double>(count);
    g.cov.diagonal().array() += ridge;
    g.weight = static_cast<double>(count) / static_cast<double>(data.rows());
    gm.components.push_back(std::move(g));
  }
  return gm;
}

}  // namespace

double GaussianMixture::mean_log_likelihood(const Eigen::MatrixXd& data) const {
  return log_sum_exp_rows(weighted_log_densities(*this, data)).mean();
}

GaussianMixture GaussianMixture::affine(const Eigen::VectorXd& offset, const Eigen::VectorXd& scale) const {
  GaussianMixture out = *this;
  for (auto& g : out.components) {
    g.mean = offset + scale.cwiseProduct(g.mean);
    g.cov = scale.asDiagonal() * g.cov * scale.asDiagonal();
  }
  return out;
}

EmResult fit_gmm(const Eigen::MatrixXd& data, int k, const EmConfig& config, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < k) throw Error(ErrorKind::invalid_argument, "fewer points than mixture components");

  EmResult best;
  best.mean_log_likelihood = -std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < config.restarts; ++restart) {
    std::mt19937_64 rng(seed + 7919ULL * static_cast<std::uint64_t>(restart));
    const auto km = kmeans(data, k, rng);
    GaussianMixture gm = from_labels(data, km.labels, k, config.ridge);

    double previous = -std::numeric_limits<double>::infinity();
    double current = previous;
    bool converged = false;
    int it = 0;
    try {
      for (it = 1; it <= config.max_iterations; ++it) {
        // E-step.
        const Eigen::MatrixXd lp = weighted_log_densities(gm, data);
        const Eigen::VectorXd norm = log_sum_exp_rows(lp);
        current = norm.mean();
        const Eigen::MatrixXd resp = (lp.colwise() - norm).array().exp();
        if (std::abs(current - previous) < config.tolerance) {
          converged = true;
          break;
        }
        previous = current;

        // M-step.
        GaussianMixture next;
        for (Eigen::Index c = 0; c < resp.cols(); ++c) {
          const double nk = resp.col(c).sum();
          if (nk < 1e-8) continue;  // component starved; drop it
          Gaussian g;
          g.weight = nk / static_cast<double>(n);
          g.mean = (data.transpose() * resp.col(c)) / nk;
          const Eigen::MatrixXd centred = data.rowwise() - g.mean.transpose();
          g.cov = (centred.transpose() * resp.col(c).asDiagonal() * centred) / nk;
          g.cov.diagonal().array() += config.ridge;
          next.components.push_back(std::move(g));
        }
        gm = std::move(next);
      }
    } catch (const Error&) {
      continue;  // a collapsed restart is simply discarded
    }
    if (!converged) continue;
    ++best.converged_restarts;
    if (current > best.mean_log_likelihood) {
      best.mixture = gm;
      best.mean_log_likelihood = current;
      best.iterations = it;
    }
  }
  if (best.converged_restarts == 0)
    throw Error(ErrorKind::not_converged, "EM did not converge in " + std::to_string(config.max_iterations) +
                                              " iterations on any of " + std::to_string(config.restarts) +
                                              " restarts (k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  return best;
}

Conditional regress(const GaussianMixture& mixture, double t) {
  const Eigen::Index d = mixture.dim() - 1;
  const std::size_t k = mixture.components.size();
  std::vector<Eigen::VectorXd> means(k);
  std::vector<Eigen::MatrixXd> covs(k);
  Eigen::VectorXd logw(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const auto& g = mixture.components[c];
    const double stt = g.cov(0, 0);
    const Eigen::VectorXd sft = g.cov.col(0).tail(d);
    means[c] = g.mean.tail(d) + sft * ((t - g.mean(0)) / stt);
    covs[c] = g.cov.bottomRightCorner(d, d) - sft * sft.transpose() / stt;
    logw(static_cast<Eigen::Index>(c)) = std::log(g.weight) - 0.5 * std::log(2 * std::numbers::pi * stt) -
                                         0.5 * (t - g.mean(0)) * (t - g.mean(0)) / stt;
  }
  const Eigen::VectorXd beta = (logw.array() - logw.maxCoeff()).exp();
  const Eigen::VectorXd h = beta / beta.sum();

  Conditional out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (std::size_t c = 0; c < k; ++c) out.mean += h(static_cast<Eigen::Index>(c)) * means[c];
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd dm = means[c] - out.mean;
    out.cov += h(static_cast<Eigen::Index>(c)) * (covs[c] + dm * dm.transpose());
  }
  return out;
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  const Eigen::MatrixXd r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

}  // namespace flexhrc::recognition
