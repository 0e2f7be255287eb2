#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace popbp {

/// Raised when an arithmetic step produces a value the algorithms cannot
/// continue from (NaN, infinity, degenerate divisor).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters of a partially observable pure birth process.
///
/// `q` is cached as `1 - p` at construction. All fields are immutable.
class ModelParams {
 public:
  ModelParams(double lambda, double p, int x0 = 1, double tau = 1.0);

  double lambda() const { return lambda_; }
  double p() const { return p_; }
  double q() const { return q_; }
  int x0() const { return x0_; }
  double tau() const { return tau_; }

  ModelParams with_lambda(double lambda) const { return {lambda, p_, x0_, tau_}; }
  ModelParams with_p(double p) const { return {lambda_, p, x0_, tau_}; }

 private:
  double lambda_;
  double p_;
  double q_;
  int x0_;
  double tau_;
};

/// Observation times t_1 <= ... <= t_n with the decay factors
/// exp(-lambda (t_i - t_{i-1})) for the birth rate it was built with.
/// t_0 = 0 is implicit and never stored.
class ObservationSchedule {
 public:
  ObservationSchedule(std::vector<double> times, double lambda);

  int size() const { return static_cast<int>(times_.size()); }
  std::span<const double> times() const { return times_; }
  std::span<const double> upsilon() const { return upsilon_; }
  double time(int i) const { return times_[i]; }
  /// Gap t_i - t_{i-1} (zero-based i, t_{-1} = 0).
  double gap(int i) const { return times_[i] - (i == 0 ? 0.0 : times_[i - 1]); }
  double horizon() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<double> upsilon_;
};

/// Optimal design found by a search over observation schedules.
struct DesignResult {
  std::vector<double> times;
  double fi = 0.0;
  std::string region;
};

/// Throws std::invalid_argument unless `times` is non-empty, non-negative,
/// finite and non-decreasing.
void validate_times(std::span<const double> times);

/// exp(-lambda * gap) for each consecutive gap, with t_0 = 0.
std::vector<double> decay_factors(std::span<const double> times, double lambda);

/// Maps a unit-horizon schedule onto horizon `tau`. The optimal design for
/// (lambda, p) on [0, 1] scales to the optimal design for (lambda / tau, p)
/// on [0, tau].
std::vector<double> rescale_design(std::span<const double> times, double tau);

}  // namespace popbp
