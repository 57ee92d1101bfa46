#include "safetrack/reference.hpp"

#include <algorithm>
#include <cmath>

#include "safetrack/errors.hpp"

namespace safetrack {

SinusoidReference::SinusoidReference(Eigen::VectorXd sin_amplitude, Eigen::VectorXd cos_amplitude,
                                     Eigen::VectorXd frequency, Eigen::VectorXd offset)
    : sin_amplitude_(std::move(sin_amplitude)),
      cos_amplitude_(std::move(cos_amplitude)),
      frequency_(std::move(frequency)),
      offset_(std::move(offset)) {
  const Eigen::Index n = frequency_.size();
  if (n == 0 || sin_amplitude_.size() != n || cos_amplitude_.size() != n || offset_.size() != n) {
    throw ConfigError("sinusoid reference: amplitude, frequency and offset sizes must agree");
  }
  if (!sin_amplitude_.allFinite() || !cos_amplitude_.allFinite() || !frequency_.allFinite() ||
      !offset_.allFinite()) {
    throw ConfigError("sinusoid reference: coefficients must be finite");
  }
}

ReferenceSample SinusoidReference::sample(double t) const {
  const Eigen::Index n = dof();
  ReferenceSample s{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = frequency_(i);
    const double sn = std::sin(w * t);
    const double cs = std::cos(w * t);
    const double a = sin_amplitude_(i);
    const double b = cos_amplitude_(i);
    s.q(i) = a * sn + b * cs + offset_(i);
    s.qdot(i) = w * (a * cs - b * sn);
    s.qddot(i) = -w * w * (a * sn + b * cs);
  }
  return s;
}

ReferenceBounds measure_reference_bounds(const ReferenceTrajectory& ref, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw InvalidInput("reference sampling needs dt > 0, t_end >= 0");
  ReferenceBounds b;
  const auto steps = static_cast<long>(std::llround(t_end / dt));
  for (long k = 0; k <= steps; ++k) {
    const ReferenceSample s = ref.sample(static_cast<double>(k) * dt);
    b.max_position_norm = std::max(b.max_position_norm, s.q.norm());
    b.max_velocity_norm = std::max(b.max_velocity_norm, s.qdot.norm());
  }
  return b;
}

}  // namespace safetrack
