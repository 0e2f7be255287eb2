#include "popbp/model.hpp"

#include <cmath>
#include <sstream>

namespace popbp {

ModelParams::ModelParams(double lambda, double p, int x0, double tau)
    : lambda_(lambda), p_(p), q_(1.0 - p), x0_(x0), tau_(tau) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be a positive finite number");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("p must lie in [0, 1]");
  }
  if (x0 < 1) {
    throw std::invalid_argument("x0 must be at least 1");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("tau must be a positive finite number");
  }
}

void validate_times(std::span<const double> times) {
  if (times.empty()) {
    throw std::invalid_argument("schedule needs at least one observation time");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < prev) {
      std::ostringstream msg;
      msg << "observation times must be finite, non-negative and "
             "non-decreasing (offending index "
          << i << ", value " << times[i] << ")";
      throw std::invalid_argument(msg.str());
    }
    prev = times[i];
  }
}

std::vector<double> decay_factors(std::span<const double> times, double lambda) {
  validate_times(times);
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("lambda must be positive");
  }
  std::vector<double> out(times.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = std::exp(-lambda * (times[i] - prev));
    prev = times[i];
  }
  return out;
}

ObservationSchedule::ObservationSchedule(std::vector<double> times, double lambda)
    : times_(std::move(times)), upsilon_(decay_factors(times_, lambda)) {}

std::vector<double> rescale_design(std::span<const double> times, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("tau must be a positive finite number");
  }
  validate_times(times);
  std::vector<double> out(times.begin(), times.end());
  for (double& t : out) t *= tau;
  return out;
}

}  // namespace popbp
