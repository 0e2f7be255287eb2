#include "popbp/fisher.hpp"

#include <cmath>
#include <stdexcept>

#include "popbp/likelihood.hpp"
#include "popbp/pbp.hpp"
#include "popbp/summation.hpp"

namespace popbp::fisher {

std::string to_string(Termination t) {
  return t == Termination::Converged ? "converged" : "slice_cap";
}

template <typename Real>
FisherResult fisher_info(const ObservationSchedule& schedule, const ModelParams& params,
                         const TerminationPolicy& policy) {
  if (policy.smax < 1) throw std::invalid_argument("smax must be at least 1");
  if (policy.consecutive < 1) throw std::invalid_argument("consecutive must be at least 1");
  FisherResult out;
  if (params.p() == 0.0) return out;
  if (params.p() == 1.0) {
    out.value = pbp::fisher_info_merged(params.x0(), schedule.times(), params.lambda());
    out.last_slice_value = out.value;
    return out;
  }

  likelihood::SliceBuffer<Real> buffer(schedule, params, policy.workers);
  CompensatedSum<Real> total;
  int unchanged = 0;
  out.terminated = Termination::SliceCap;
  for (int s = 0; s < policy.smax; ++s) {
    const Real before = total.value();
    const auto summary = buffer.advance();
    total.add(summary.fisher_term);
    out.slices_used = s + 1;
    out.last_slice_value = static_cast<double>(summary.fisher_term);
    unchanged = total.value() == before ? unchanged + 1 : 0;
    if (unchanged >= policy.consecutive) {
      out.terminated = Termination::Converged;
      break;
    }
  }
  out.value = static_cast<double>(total.value());
  return out;
}

template FisherResult fisher_info<float>(const ObservationSchedule&, const ModelParams&,
                                         const TerminationPolicy&);
template FisherResult fisher_info<double>(const ObservationSchedule&, const ModelParams&,
                                          const TerminationPolicy&);
template FisherResult fisher_info<long double>(const ObservationSchedule&,
                                               const ModelParams&, const TerminationPolicy&);

namespace {

constexpr double kDelta = 1e-9;

// x^2 / (1 - exp(-lambda x)), continuous at x = 0 with value 0.
double square_over_decay(double x, double lambda) {
  if (x == 0.0) return 0.0;
  if (x < kDelta) return x / lambda * (1.0 + 0.5 * lambda * x);
  return x * x / -std::expm1(-lambda * x);
}

}  // namespace

double fisher_info_approx_n2(double t1, double t2, double lambda, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(t1 >= 0.0 && t2 >= t1)) throw std::invalid_argument("need 0 <= t1 <= t2");
  const double q = 1.0 - p;
  const double gap = t2 - t1;
  const double th1 = std::exp(-lambda * t1);
  const double th2 = std::exp(-lambda * t2);
  const double v = std::exp(-lambda * gap);
  const double base1 = p + q * th1;

  // First term: growth between the observations seen through the second count.
  double first = 0.0;
  const double lin = gap * p + q * t2 * th1;
  if (lin != 0.0) {
    double lin_sq_over_d;
    if (t2 < kDelta) {
      lin_sq_over_d = lin * lin / (lambda * (p * gap + q * t2));
    } else {
      const double d = -p * std::expm1(-lambda * gap) - q * std::expm1(-lambda * t2);
      lin_sq_over_d = lin * lin / d;
    }
    const double b = p * v + q * th2;
    const double a = p + q * b - q * b * b;
    const double base2 = p + p * q * v + q * q * th2;
    first = (1.0 + p / th1) * p * a / (base1 * base1 * base2 * base2) * lin_sq_over_d;
  }

  const double base_v = p + q * v;
  const double second = p / base1 * p * (p + q * (1.0 - v) * v) / (base_v * base_v) *
                        square_over_decay(gap, lambda);
  const double third =
      p * (p + q * (1.0 - th1) * th1) / (base1 * base1) * square_over_decay(t1, lambda);
  return first - second + third;
}

}  // namespace popbp::fisher
