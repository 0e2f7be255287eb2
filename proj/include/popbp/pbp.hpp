#pragma once

// Closed forms for the fully observed pure birth process.

#include <span>
#include <vector>

#include "popbp/model.hpp"

namespace popbp::pbp {

/// P(X_{t+dt} = x_to | X_t = x_from) for a pure birth process with rate
/// lambda: C(x_to-1, x_from-1) v^x_from (1-v)^(x_to-x_from), v = exp(-lambda dt).
double transition_pmf(int x_from, int x_to, double lambda, double dt);

/// Exact Fisher information for lambda from full observations at `times`.
/// Throws std::domain_error when a gap is zero.
double fisher_info(int x0, std::span<const double> times, double lambda);

/// Same as fisher_info, but tied observation times are merged first; a
/// repeated full observation carries no extra information.
double fisher_info_merged(int x0, std::span<const double> times, double lambda);

/// Gradient of fisher_info with respect to t_1..t_{n-1} (t_n fixed).
std::vector<double> fisher_info_gradient(int x0, std::span<const double> times,
                                         double lambda);

double phi1(double x);
double phi2(double x);

/// phi1(lambda * gap_i) - phi2(lambda * gap_{i+1}) for i = 1..n-1; zero at
/// an interior stationary point of fisher_info.
std::vector<double> stationarity_residual(std::span<const double> times, double lambda);

/// Large-sample approximation of the optimal times:
/// t_i = (3/lambda) log(1 + (i/n)(exp(lambda tau / 3) - 1)).
/// lambda == 0 gives the equidistant limit i tau / n.
std::vector<double> optimal_times_approx(int n, double lambda, double tau = 1.0);

/// Direct numerical maximisation of fisher_info over 0 < t_1 < ... < t_n = 1,
/// seeded at optimal_times_approx. x0 only scales the objective.
DesignResult optimal_times(int n, double lambda, int x0 = 1);

}  // namespace popbp::pbp
