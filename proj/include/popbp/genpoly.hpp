#pragma once

// Coefficients of the rational generating function of the likelihood,
//
//   sum_y L(y) u^y = P(u) / (1 - Q_n(u)),
//
// built at runtime for any number of observations. Q_n is produced by the
// recurrence Q_i = (1 - v_{i,i+1}) + v_{i,i+1} (p u_i + q) Q_{i-1} with
// v_{n,n+1} = 1, and P = u_0 v_{0,1} ... v_{n-1,n} (p u_1 + q) ... (p u_n + q).

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "popbp/model.hpp"

namespace popbp::genpoly {

/// Which coefficient family to build.
///  - FixedX0One: x0 = 1 is extracted as the u_0^1 coefficient. The u_0 factor
///    of P is dropped and Q_0 is replaced by its u_0-free part 1 - v_{0,1};
///    polynomials have n variables, bit i-1 <-> u_i.
///  - GeneralX0: u_0 stays as a variable; polynomials have n + 1 variables,
///    bit 0 <-> u_0 and bit i <-> u_i.
enum class Mode { FixedX0One, GeneralX0 };

/// Polynomial of degree at most one in each variable, stored densely. The
/// coefficient of prod u_j^{c_j} sits at the index whose bit j is c_j.
template <typename Real>
struct MultilinearPoly {
  int nvars = 0;
  std::vector<Real> coeffs;

  MultilinearPoly() = default;
  explicit MultilinearPoly(int vars)
      : nvars(vars), coeffs(std::size_t{1} << vars, Real(0)) {}

  Real operator[](std::uint32_t c) const { return coeffs[c]; }
  Real& operator[](std::uint32_t c) { return coeffs[c]; }
  std::size_t size() const { return coeffs.size(); }

  /// Evaluates at `u` (length nvars) by expanding every monomial.
  Real evaluate(const std::vector<Real>& u) const;
};

template <typename Real>
struct RecurrenceCoefficients {
  Mode mode = Mode::FixedX0One;
  MultilinearPoly<Real> q;     // Q_n
  MultilinearPoly<Real> dq;    // dQ_n / dlambda
  MultilinearPoly<Real> num;   // P
  MultilinearPoly<Real> dnum;  // dP / dlambda
  Real divisor = Real(1);      // 1 - q[0]
  std::vector<Real> q_hat;     // q / divisor
  std::vector<Real> num_hat;   // num / divisor
};

template <typename Real>
MultilinearPoly<Real> build_denominator(const ObservationSchedule& schedule,
                                        const ModelParams& params, Mode mode);

template <typename Real>
MultilinearPoly<Real> build_denominator_derivative(const ObservationSchedule& schedule,
                                                   const ModelParams& params, Mode mode);

/// Returns (P, dP/dlambda). dP/dlambda = -t_n P because every decay factor
/// contributes minus its gap and the gaps telescope to t_n.
template <typename Real>
std::pair<MultilinearPoly<Real>, MultilinearPoly<Real>> build_numerator(
    const ObservationSchedule& schedule, const ModelParams& params, Mode mode);

/// Bundles the builders and pre-divides by 1 - q_0. Throws NumericalError
/// when the divisor is not above 1e-300.
template <typename Real>
RecurrenceCoefficients<Real> assemble(const ObservationSchedule& schedule,
                                      const ModelParams& params, Mode mode);

/// CSV dump with header `c-bits,q,dq,num,dnum`; c-bits lists the exponent
/// of each variable, lowest bit first.
template <typename Real>
void write_coefficients_csv(std::ostream& out, const RecurrenceCoefficients<Real>& rc);

}  // namespace popbp::genpoly
