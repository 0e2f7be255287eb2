#include "popbp/genpoly.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace popbp::genpoly {

template <typename Real>
Real MultilinearPoly<Real>::evaluate(const std::vector<Real>& u) const {
  Real total(0);
  for (std::uint32_t c = 0; c < coeffs.size(); ++c) {
    Real term = coeffs[c];
    for (int j = 0; j < nvars; ++j) {
      if ((c >> j) & 1u) term *= u[j];
    }
    total += term;
  }
  return total;
}

namespace {

int offset(Mode mode) { return mode == Mode::GeneralX0 ? 1 : 0; }

template <typename Real>
struct Denominator {
  MultilinearPoly<Real> q;
  MultilinearPoly<Real> dq;
  Real complement;  // 1 - q[0], tracked without cancellation
};

template <typename Real>
Denominator<Real> build(const ObservationSchedule& schedule, const ModelParams& params,
                        Mode mode) {
  const int n = schedule.size();
  const int vars = n + offset(mode);
  const Real lambda = static_cast<Real>(params.lambda());
  const Real p = static_cast<Real>(params.p());
  const Real q = static_cast<Real>(params.q());

  Denominator<Real> d{MultilinearPoly<Real>(vars), MultilinearPoly<Real>(vars), Real(0)};
  auto& Q = d.q.coeffs;
  auto& dQ = d.dq.coeffs;

  // Q_0 = (1 - v01) + v01 u_0; the fixed-x0 family keeps only 1 - v01.
  const Real g0 = static_cast<Real>(schedule.gap(0));
  const Real v01 = std::exp(-lambda * g0);
  const Real one_minus_v01 = -std::expm1(-lambda * g0);
  const Real dv01 = -g0 * v01;
  Q[0] = one_minus_v01;
  dQ[0] = -dv01;
  if (mode == Mode::GeneralX0) {
    Q[1] = v01;
    dQ[1] = dv01;
  }
  d.complement = v01;

  std::vector<Real> w(Q.size()), wd(Q.size());
  for (int i = 1; i <= n; ++i) {
    const Real gap = i < n ? static_cast<Real>(schedule.gap(i)) : Real(0);
    const Real v = i < n ? std::exp(-lambda * gap) : Real(1);
    const Real one_minus_v = i < n ? -std::expm1(-lambda * gap) : Real(0);
    const Real dv = -gap * v;
    const std::uint32_t bit = 1u << (i - 1 + offset(mode));
    // Coefficients with bit set or above are still zero.
    for (std::uint32_t c = 0; c < bit; ++c) {
      w[c] = q * Q[c];
      w[c | bit] = p * Q[c];
      wd[c] = q * dQ[c];
      wd[c | bit] = p * dQ[c];
    }
    const std::uint32_t used = bit << 1;
    for (std::uint32_t c = 0; c < used; ++c) {
      Q[c] = v * w[c];
      dQ[c] = dv * w[c] + v * wd[c];
    }
    Q[0] += one_minus_v;
    dQ[0] -= dv;
    d.complement = v * (d.complement + p * (Real(1) - d.complement));
  }
  return d;
}

}  // namespace

template <typename Real>
MultilinearPoly<Real> build_denominator(const ObservationSchedule& schedule,
                                        const ModelParams& params, Mode mode) {
  return build<Real>(schedule, params, mode).q;
}

template <typename Real>
MultilinearPoly<Real> build_denominator_derivative(const ObservationSchedule& schedule,
                                                   const ModelParams& params, Mode mode) {
  return build<Real>(schedule, params, mode).dq;
}

template <typename Real>
std::pair<MultilinearPoly<Real>, MultilinearPoly<Real>> build_numerator(
    const ObservationSchedule& schedule, const ModelParams& params, Mode mode) {
  const int n = schedule.size();
  const int vars = n + offset(mode);
  const Real horizon = static_cast<Real>(schedule.horizon());
  const Real p = static_cast<Real>(params.p());
  const Real q = static_cast<Real>(params.q());
  const Real decay = std::exp(-static_cast<Real>(params.lambda()) * horizon);

  MultilinearPoly<Real> num(vars), dnum(vars);
  std::vector<Real> p_pow(n + 1, Real(1)), q_pow(n + 1, Real(1));
  for (int k = 1; k <= n; ++k) {
    p_pow[k] = p_pow[k - 1] * p;
    q_pow[k] = q_pow[k - 1] * q;
  }
  for (std::uint32_t c = 0; c < (1u << n); ++c) {
    const int ones = std::popcount(c);
    const Real value = decay * p_pow[ones] * q_pow[n - ones];
    const std::uint32_t index = mode == Mode::GeneralX0 ? ((c << 1) | 1u) : c;
    num[index] = value;
    dnum[index] = -horizon * value;
  }
  return {std::move(num), std::move(dnum)};
}

template <typename Real>
RecurrenceCoefficients<Real> assemble(const ObservationSchedule& schedule,
                                      const ModelParams& params, Mode mode) {
  auto den = build<Real>(schedule, params, mode);
  auto [num, dnum] = build_numerator<Real>(schedule, params, mode);
  RecurrenceCoefficients<Real> rc;
  rc.mode = mode;
  rc.divisor = den.complement;
  if (!(rc.divisor > Real(1e-300))) {
    std::ostringstream msg;
    msg << "degenerate divisor 1 - q_0 = " << static_cast<double>(rc.divisor)
        << " (lambda=" << params.lambda() << ", p=" << params.p() << ")";
    throw NumericalError(msg.str());
  }
  rc.q = std::move(den.q);
  rc.dq = std::move(den.dq);
  rc.num = std::move(num);
  rc.dnum = std::move(dnum);
  rc.q_hat.resize(rc.q.size());
  rc.num_hat.resize(rc.num.size());
  for (std::size_t c = 0; c < rc.q.size(); ++c) {
    rc.q_hat[c] = rc.q.coeffs[c] / rc.divisor;
    rc.num_hat[c] = rc.num.coeffs[c] / rc.divisor;
  }
  return rc;
}

template <typename Real>
void write_coefficients_csv(std::ostream& out, const RecurrenceCoefficients<Real>& rc) {
  const auto old_precision = out.precision(17);
  out << "c-bits,q,dq,num,dnum\n";
  for (std::uint32_t c = 0; c < rc.q.size(); ++c) {
    for (int j = 0; j < rc.q.nvars; ++j) out << ((c >> j) & 1u);
    out << ',' << static_cast<double>(rc.q[c]) << ',' << static_cast<double>(rc.dq[c])
        << ',' << static_cast<double>(rc.num[c]) << ','
        << static_cast<double>(rc.dnum[c]) << '\n';
  }
  out.precision(old_precision);
}

#define POPBP_INSTANTIATE(Real)                                                        \
  template struct MultilinearPoly<Real>;                                              \
  template MultilinearPoly<Real> build_denominator<Real>(                             \
      const ObservationSchedule&, const ModelParams&, Mode);                          \
  template MultilinearPoly<Real> build_denominator_derivative<Real>(                  \
      const ObservationSchedule&, const ModelParams&, Mode);                          \
  template std::pair<MultilinearPoly<Real>, MultilinearPoly<Real>>                    \
  build_numerator<Real>(const ObservationSchedule&, const ModelParams&, Mode);        \
  template RecurrenceCoefficients<Real> assemble<Real>(const ObservationSchedule&,    \
                                                       const ModelParams&, Mode);     \
  template void write_coefficients_csv<Real>(std::ostream&,                           \
                                             const RecurrenceCoefficients<Real>&);

POPBP_INSTANTIATE(float)
POPBP_INSTANTIATE(double)
POPBP_INSTANTIATE(long double)

#undef POPBP_INSTANTIATE

}  // namespace popbp::genpoly
