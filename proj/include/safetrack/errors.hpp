#pragma once

#include <stdexcept>
#include <string>

namespace safetrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, non-finite values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Scenario or constraint configuration violates a documented invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written; the message carries the OS reason.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A linear solve or integration stage produced garbage.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, double condition_estimate = 0.0)
      : Error(what), condition_estimate_(condition_estimate) {}

  /// Reciprocal condition estimate of the offending matrix, 0 if not applicable.
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// The filtered error reached the barrier radius: ||r|| >= kappa.
class BarrierBreach : public Error {
 public:
  BarrierBreach(double r_norm, double kappa)
      : Error("barrier breach: ||r|| = " + std::to_string(r_norm) +
              " >= kappa = " + std::to_string(kappa)),
        r_norm_(r_norm),
        kappa_(kappa) {}

  double r_norm() const { return r_norm_; }
  double kappa() const { return kappa_; }

 private:
  double r_norm_;
  double kappa_;
};

}  // namespace safetrack
