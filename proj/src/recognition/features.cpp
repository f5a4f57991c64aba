#include "flexhrc/recognition/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "flexhrc/error.hpp"

namespace flexhrc::recognition {

double GravityFilter::alpha(double dt) const {
  const double rc = 1.0 / (2.0 * std::numbers::pi * config_.cutoff_hz);
  return dt / (rc + dt);
}

void GravityFilter::reset(std::optional<Eigen::Vector3d> state) {
  state_ = state;
  last_t_.reset();
}

FeatureFrame GravityFilter::push(const InertialSample& s) {
  if (!state_) {
    state_ = s.acc;
  } else {
    const double dt = last_t_ && s.t > *last_t_ ? s.t - *last_t_ : 1.0 / config_.rate_hz;
    *state_ += alpha(dt) * (s.acc - *state_);
  }
  last_t_ = s.t;
  FeatureFrame f;
  f.t = s.t;
  f.gravity = *state_;
  f.body = s.acc - f.gravity;
  return f;
}

std::vector<FeatureFrame> extract_features(const std::vector<InertialSample>& stream, const FilterConfig& config,
                                           std::optional<Eigen::Vector3d> initial_state) {
  if (stream.empty()) throw Error(ErrorKind::invalid_argument, "empty inertial stream");
  for (std::size_t i = 1; i < stream.size(); ++i)
    if (!(stream[i].t > stream[i - 1].t))
      throw Error(ErrorKind::invalid_argument, "timestamps must strictly increase (sample " + std::to_string(i) + ")");
  GravityFilter filter(config);
  filter.reset(initial_state);
  std::vector<FeatureFrame> out;
  out.reserve(stream.size());
  for (const auto& s : stream) out.push_back(filter.push(s));
  return out;
}

std::vector<InertialSample> read_stream_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open " + path.string());
  std::vector<InertialSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    InertialSample s;
    if (!(ss >> s.t >> s.acc.x() >> s.acc.y() >> s.acc.z())) {
      if (lineno == 1) continue;  // header
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": expected t,ax,ay,az");
    }
    out.push_back(s);
  }
  return out;
}

void write_stream_csv(const std::filesystem::path& path, const std::vector<InertialSample>& stream) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::parse, "cannot write " + path.string());
  out << "t,ax,ay,az\n" << std::setprecision(17);
  for (const auto& s : stream) out << s.t << ',' << s.acc.x() << ',' << s.acc.y() << ',' << s.acc.z() << '\n';
}

}  // namespace flexhrc::recognition
