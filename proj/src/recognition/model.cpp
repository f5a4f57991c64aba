#include "flexhrc/recognition/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "flexhrc/error.hpp"
#include "flexhrc/recognition/clustering.hpp"

namespace flexhrc::recognition {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "flexhrc-gesture-model";
constexpr int kVersion = 1;

Eigen::MatrixXd stack(const std::vector<FeatureFrame>& frames) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), 6);
  for (std::size_t i = 0; i < frames.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = frames[i].stacked().transpose();
  return m;
}

std::vector<InertialSample> template_stream(const Eigen::MatrixXd& raw, double rate_hz) {
  std::vector<InertialSample> stream(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    stream[static_cast<std::size_t>(i)] = {static_cast<double>(i) / rate_hz, raw.row(i).transpose()};
  return stream;
}

}  // namespace

Eigen::MatrixXd consistent_template(const std::vector<Vector6d>& means, const std::vector<Matrix6d>& covariances,
                                    int native_length, double rate_hz, const FilterConfig& filter) {
  const auto length = static_cast<Eigen::Index>(means.size());
  const Eigen::Index n = native_length;
  if (covariances.size() != means.size() || length < 2 || n < 2)
    throw Error(ErrorKind::dimension_mismatch, "template fit needs matching means and covariances");

  // Features are linear in the raw samples: column (3k + a) of phi holds the
  // stacked feature frames produced by a unit impulse on axis a at sample k.
  Eigen::MatrixXd phi(6 * n, 3 * n);
  Eigen::MatrixXd impulse = Eigen::MatrixXd::Zero(n, 3);
  for (Eigen::Index k = 0; k < n; ++k)
    for (int a = 0; a < 3; ++a) {
      impulse(k, a) = 1.0;
      const auto frames = extract_features(template_stream(impulse, rate_hz), filter);
      for (Eigen::Index i = 0; i < n; ++i)
        phi.block<6, 1>(6 * i, 3 * k + a) = frames[static_cast<std::size_t>(i)].stacked();
      impulse(k, a) = 0.0;
    }
  const Eigen::MatrixXd interp = resample_rows(Eigen::MatrixXd::Identity(n, n), length);

  // Minimize sum_j (A_j r - mu_j)' P_j (A_j r - mu_j) over the raw samples r.
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * n);
  for (Eigen::Index j = 0; j < length; ++j) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 3 * n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (interp(j, i) != 0.0) a += interp(j, i) * phi.middleRows(6 * i, 6);
    const Matrix6d p = Eigen::LLT<Matrix6d>(covariances[static_cast<std::size_t>(j)]).solve(Matrix6d::Identity());
    normal += a.transpose() * p * a;
    rhs += a.transpose() * (p * means[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd r = normal.ldlt().solve(rhs);
  if (!r.allFinite()) throw Error(ErrorKind::numerical, "raw template fit failed");
  Eigen::MatrixXd raw(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) raw.row(k) = r.segment<3>(3 * k).transpose();
  return raw;
}

Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& m, Eigen::Index length) {
  const Eigen::Index n = m.rows();
  if (n < 2 || length < 2) throw Error(ErrorKind::invalid_argument, "resampling needs at least two points");
  Eigen::MatrixXd out(length, m.cols());
  const double step = static_cast<double>(n - 1) / static_cast<double>(length - 1);
  for (Eigen::Index j = 0; j < length; ++j) {
    const double u = j * step;
    const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), n - 1);
    const double f = u - static_cast<double>(i0);
    if (i0 == n - 1 || f == 0.0)
      out.row(j) = m.row(i0);
    else
      out.row(j) = (1 - f) * m.row(i0) + f * m.row(i0 + 1);
  }
  return out;
}

void GestureModel::finalize() {
  if (length < 2 || curve.rows() != length || static_cast<int>(covariances.size()) != length)
    throw Error(ErrorKind::dimension_mismatch, "model " + name + ": curve/covariance length differs from L");
  if (native_length < 2 || raw_template.rows() != native_length)
    throw Error(ErrorKind::dimension_mismatch, "model " + name + ": raw template length differs from native length");
  precisions_.clear();
  precisions_.reserve(covariances.size());
  for (const auto& c : covariances) {
    Eigen::LLT<Matrix6d> llt(c);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::numerical, "model " + name + ": covariance not positive definite");
    precisions_.push_back(llt.solve(Matrix6d::Identity()));
  }
}

json GestureModel::to_json() const {
  json doc{{"format", kFormat},     {"version", kVersion},          {"name", name},
           {"L", length},           {"native_length", native_length}, {"rate_hz", rate_hz},
           {"n_gaussians", n_gaussians}};
  doc["curve"] = json::array();
  for (Eigen::Index i = 0; i < curve.rows(); ++i) {
    std::vector<double> row(6);
    for (int j = 0; j < 6; ++j) row[static_cast<std::size_t>(j)] = curve(i, j);
    doc["curve"].push_back(row);
  }
  doc["covariances"] = json::array();
  for (const auto& c : covariances) doc["covariances"].push_back(std::vector<double>(c.data(), c.data() + 36));
  doc["raw_template"] = json::array();
  for (Eigen::Index i = 0; i < raw_template.rows(); ++i)
    doc["raw_template"].push_back({raw_template(i, 0), raw_template(i, 1), raw_template(i, 2)});
  return doc;
}

GestureModel GestureModel::from_json(const json& doc) {
  try {
    if (doc.value("format", "") != kFormat) throw Error(ErrorKind::parse, "not a gesture model document");
    if (doc.at("version").get<int>() != kVersion)
      throw Error(ErrorKind::parse, "unsupported model version " + doc.at("version").dump());
    GestureModel m;
    m.name = doc.at("name").get<std::string>();
    m.length = doc.at("L").get<int>();
    m.native_length = doc.at("native_length").get<int>();
    m.rate_hz = doc.at("rate_hz").get<double>();
    m.n_gaussians = doc.at("n_gaussians").get<int>();
    const auto& curve = doc.at("curve");
    m.curve.resize(static_cast<Eigen::Index>(curve.size()), 6);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const auto row = curve[i].get<std::vector<double>>();
      if (row.size() != 6) throw Error(ErrorKind::parse, "curve rows must have 6 entries");
      for (int j = 0; j < 6; ++j) m.curve(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    for (const auto& jc : doc.at("covariances")) {
      const auto v = jc.get<std::vector<double>>();
      if (v.size() != 36) throw Error(ErrorKind::parse, "covariances must have 36 entries");
      m.covariances.push_back(Eigen::Map<const Matrix6d>(v.data()));
    }
    const auto& raw = doc.at("raw_template");
    m.raw_template.resize(static_cast<Eigen::Index>(raw.size()), 3);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto row = raw[i].get<std::array<double, 3>>();
      for (int j = 0; j < 3; ++j) m.raw_template(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    m.finalize();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("gesture model: ") + e.what());
  }
}

void GestureModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::parse, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

GestureModel GestureModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

std::vector<GestureModel> load_model_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<GestureModel> out;
  for (const auto& f : files) out.push_back(GestureModel::load(f));
  return out;
}

GestureModel train_model(const std::string& name, const std::vector<std::vector<FeatureFrame>>& trials,
                         const TrainingConfig& config) {
  if (trials.size() < 2) throw Error(ErrorKind::invalid_argument, "training needs at least two trials");
  std::size_t total = 0;
  for (const auto& tr : trials) {
    if (static_cast<int>(tr.size()) * 2 < config.length || tr.size() < 2)
      throw Error(ErrorKind::invalid_argument, "trial shorter than half the model length");
    total += tr.size();
  }

  // (normalized time, features) points and the nominal rate.
  Eigen::MatrixXd points(static_cast<Eigen::Index>(total), 7);
  std::vector<double> rates;
  double mean_length = 0;
  Eigen::Index r = 0;
  for (const auto& tr : trials) {
    const double n1 = static_cast<double>(tr.size() - 1);
    for (std::size_t i = 0; i < tr.size(); ++i, ++r) {
      points(r, 0) = static_cast<double>(i) / n1;
      points.row(r).tail(6) = tr[i].stacked().transpose();
    }
    rates.push_back(n1 / (tr.back().t - tr.front().t));
    mean_length += static_cast<double>(tr.size()) / static_cast<double>(trials.size());
  }
  const Eigen::MatrixXd features = points.rightCols(6);
  if (((features.rowwise() - features.row(0)).cwiseAbs().maxCoeff()) == 0.0)
    throw Error(ErrorKind::invalid_argument, "degenerate training data: every frame is identical");

  const auto z = Standardizer::fit(points);
  const Eigen::MatrixXd zp = z.apply(points);
  const auto order = select_order(zp, config.k_min, config.k_max, config.silhouette_subsample, config.seed);
  const auto em = fit_gmm(zp, order.k, config.em, config.seed);
  const GaussianMixture mixture = em.mixture.affine(z.mean.transpose(), z.scale.transpose());

  GestureModel m;
  m.name = name;
  m.length = config.length;
  m.n_gaussians = static_cast<int>(mixture.components.size());
  std::nth_element(rates.begin(), rates.begin() + static_cast<std::ptrdiff_t>(rates.size() / 2), rates.end());
  m.rate_hz = rates[rates.size() / 2];
  m.native_length = static_cast<int>(std::lround(mean_length));

  std::vector<Vector6d> means;
  for (int j = 0; j < m.length; ++j) {
    const auto c = regress(mixture, static_cast<double>(j) / (m.length - 1));
    means.push_back(c.mean);
    m.covariances.push_back(floor_eigenvalues(c.cov, config.covariance_floor));
  }
  m.raw_template = consistent_template(means, m.covariances, m.native_length, m.rate_hz, config.filter);
  m.curve = resample_rows(stack(extract_features(template_stream(m.raw_template, m.rate_hz), config.filter)), m.length);
  m.finalize();
  return m;
}

double possibility(const Eigen::MatrixXd& window, const GestureModel& model, double lambda) {
  if (window.rows() < 2) throw Error(ErrorKind::invalid_argument, "window too short to resample");
  if (window.cols() != 6) throw Error(ErrorKind::dimension_mismatch, "feature windows have 6 columns");
  const Eigen::MatrixXd x = resample_rows(window, model.length);
  const auto& prec = model.precisions();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < model.length; ++j) {
    const Vector6d d = (x.row(j) - model.curve.row(j)).transpose();
    sum += d.dot(prec[static_cast<std::size_t>(j)] * d);
  }
  return std::exp(-lambda * sum / static_cast<double>(model.length));
}

double possibility(const std::vector<FeatureFrame>& window, const GestureModel& model, double lambda) {
  if (window.size() < 2) throw Error(ErrorKind::invalid_argument, "window too short to resample");
  return possibility(stack(window), model, lambda);
}

}  // namespace flexhrc::recognition
