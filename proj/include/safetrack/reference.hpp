#pragma once

#include <Eigen/Dense>
#include <string_view>

#include "safetrack/plant.hpp"

namespace safetrack {

/// Desired joint trajectory q_d(t) with its first two derivatives.
class ReferenceTrajectory {
 public:
  virtual ~ReferenceTrajectory() = default;
  virtual std::string_view name() const = 0;
  virtual Eigen::Index dof() const = 0;
  virtual ReferenceSample sample(double t) const = 0;
};

/// Per joint: q_d,i(t) = a_i sin(w_i t) + b_i cos(w_i t) + c_i.
class SinusoidReference final : public ReferenceTrajectory {
 public:
  SinusoidReference(Eigen::VectorXd sin_amplitude, Eigen::VectorXd cos_amplitude,
                    Eigen::VectorXd frequency, Eigen::VectorXd offset);

  std::string_view name() const override { return "sinusoid"; }
  Eigen::Index dof() const override { return frequency_.size(); }
  ReferenceSample sample(double t) const override;

  const Eigen::VectorXd& sin_amplitude() const { return sin_amplitude_; }
  const Eigen::VectorXd& cos_amplitude() const { return cos_amplitude_; }
  const Eigen::VectorXd& frequency() const { return frequency_; }
  const Eigen::VectorXd& offset() const { return offset_; }

 private:
  Eigen::VectorXd sin_amplitude_;
  Eigen::VectorXd cos_amplitude_;
  Eigen::VectorXd frequency_;
  Eigen::VectorXd offset_;
};

/// Suprema of ||q_d|| and ||qdot_d|| sampled on t = k dt, k = 0..N.
struct ReferenceBounds {
  double max_position_norm = 0.0;
  double max_velocity_norm = 0.0;
};

ReferenceBounds measure_reference_bounds(const ReferenceTrajectory& ref, double t_end, double dt);

}  // namespace safetrack
