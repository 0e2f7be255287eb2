#include "popbp/pbp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "popbp/optim.hpp"

namespace popbp::pbp {

double transition_pmf(int x_from, int x_to, double lambda, double dt) {
  if (x_from < 1) throw std::invalid_argument("x_from must be at least 1");
  if (!(lambda >= 0.0) || !(dt >= 0.0)) {
    throw std::invalid_argument("lambda and dt must be non-negative");
  }
  if (x_to < x_from) return 0.0;
  const double log_v = -lambda * dt;
  const int births = x_to - x_from;
  if (births == 0) return std::exp(static_cast<double>(x_from) * log_v);
  if (log_v == 0.0) return 0.0;
  const double log_binom = std::lgamma(static_cast<double>(x_to)) -
                           std::lgamma(static_cast<double>(x_from)) -
                           std::lgamma(static_cast<double>(births) + 1.0);
  const double log_one_minus_v = std::log(-std::expm1(log_v));
  return std::exp(log_binom + x_from * log_v + births * log_one_minus_v);
}

double fisher_info(int x0, std::span<const double> times, double lambda) {
  validate_times(times);
  if (x0 < 1) throw std::invalid_argument("x0 must be at least 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  double sum = 0.0;
  double prev = 0.0;
  for (double t : times) {
    const double gap = t - prev;
    if (gap == 0.0) {
      throw std::domain_error("pure birth Fisher information is undefined for a zero gap");
    }
    // exp(-l t_{i-1}) - exp(-l t_i) without cancellation.
    const double denom = -std::exp(-lambda * prev) * std::expm1(-lambda * gap);
    sum += gap * gap / denom;
    prev = t;
  }
  return static_cast<double>(x0) * sum;
}

double fisher_info_merged(int x0, std::span<const double> times, double lambda) {
  validate_times(times);
  std::vector<double> distinct;
  for (double t : times) {
    if (t == 0.0) continue;  // observing the known x0 again adds nothing
    if (distinct.empty() || distinct.back() != t) distinct.push_back(t);
  }
  if (distinct.empty()) return 0.0;
  return fisher_info(x0, distinct, lambda);
}

std::vector<double> fisher_info_gradient(int x0, std::span<const double> times,
                                         double lambda) {
  validate_times(times);
  const std::size_t n = times.size();
  std::vector<double> grad(n > 0 ? n - 1 : 0);
  auto gap = [&](std::size_t i) { return times[i] - (i == 0 ? 0.0 : times[i - 1]); };
  auto denom = [&](std::size_t i) {
    const double start = i == 0 ? 0.0 : times[i - 1];
    return -std::exp(-lambda * start) * std::expm1(-lambda * gap(i));
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = gap(i);
    const double b = gap(i + 1);
    const double da = denom(i);
    const double db = denom(i + 1);
    const double e = std::exp(-lambda * times[i]);
    grad[i] = static_cast<double>(x0) *
              (2.0 * a / da - a * a * lambda * e / (da * da) - 2.0 * b / db +
               b * b * lambda * e / (db * db));
  }
  return grad;
}

double phi1(double x) {
  if (x < 0.0) throw std::invalid_argument("phi1 requires x >= 0");
  if (x < 1e-4) return 1.0 - x * x / 4.0 + x * x * x / 12.0;
  if (x <= 1.0) {
    const double em1 = std::expm1(x);
    return x * (2.0 * em1 - x) / (em1 * em1);
  }
  const double e = std::exp(-x);
  const double one_minus = -std::expm1(-x);
  return x * (2.0 * e - (x + 2.0) * e * e) / (one_minus * one_minus);
}

double phi2(double x) {
  if (x < 0.0) throw std::invalid_argument("phi2 requires x >= 0");
  if (x < 1e-4) return 1.0 - x * x / 4.0 - x * x * x / 12.0;
  if (x <= 1.0) {
    const double em1 = std::expm1(x);
    const double ex = em1 + 1.0;
    return x * ex * (2.0 * em1 - x * ex) / (em1 * em1);
  }
  const double e = std::exp(-x);
  const double one_minus = -std::expm1(-x);
  return x * (2.0 - x - 2.0 * e) / (one_minus * one_minus);
}

std::vector<double> stationarity_residual(std::span<const double> times, double lambda) {
  validate_times(times);
  if (times.size() < 2) throw std::invalid_argument("need at least two observation times");
  std::vector<double> out(times.size() - 1);
  double prev = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double left = times[i] - prev;
    const double right = times[i + 1] - times[i];
    out[i] = phi1(lambda * left) - phi2(lambda * right);
    prev = times[i];
  }
  return out;
}

std::vector<double> optimal_times_approx(int n, double lambda, double tau) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  std::vector<double> t(n);
  const double growth = std::expm1(lambda * tau / 3.0);
  for (int i = 1; i <= n; ++i) {
    const double frac = static_cast<double>(i) / n;
    t[i - 1] = lambda == 0.0 ? frac * tau : 3.0 / lambda * std::log1p(frac * growth);
  }
  t[n - 1] = tau;
  return t;
}

namespace {

// Interior times 0 < s_1 < ... < s_{k} < 1 from k unconstrained log-ratios of
// the k+1 gaps against the first gap.
std::vector<double> times_from_logits(std::span<const double> z) {
  const std::size_t k = z.size();
  std::vector<double> w(k + 1);
  double m = 0.0;
  for (double v : z) m = std::max(m, v);
  w[0] = std::exp(-m);
  double total = w[0];
  for (std::size_t j = 0; j < k; ++j) {
    w[j + 1] = std::exp(z[j] - m);
    total += w[j + 1];
  }
  std::vector<double> t(k + 1);
  double acc = 0.0;
  for (std::size_t j = 0; j <= k; ++j) {
    acc += w[j] / total;
    t[j] = acc;
  }
  t[k] = 1.0;
  return t;
}

std::vector<double> logits_from_times(std::span<const double> t) {
  std::vector<double> z(t.size() - 1);
  const double g0 = std::max(t[0], 1e-300);
  for (std::size_t j = 1; j < t.size(); ++j) {
    z[j - 1] = std::log(std::max(t[j] - t[j - 1], 1e-300) / g0);
  }
  return z;
}

// Coordinate-wise bisection on the analytic partial derivatives.
void polish_stationary(std::vector<double>& t, double lambda) {
  const std::size_t n = t.size();
  for (int sweep = 0; sweep < 500; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double lo0 = i == 0 ? 0.0 : t[i - 1];
      const double hi0 = t[i + 1];
      auto partial = [&](double x) {
        const double keep = t[i];
        t[i] = x;
        const double g = fisher_info_gradient(1, t, lambda)[i];
        t[i] = keep;
        return g;
      };
      double lo = lo0 + (hi0 - lo0) * 1e-12;
      double hi = hi0 - (hi0 - lo0) * 1e-12;
      double glo = partial(lo);
      if (!(glo > 0.0) || !(partial(hi) < 0.0)) continue;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double g = partial(mid);
        if ((g > 0.0) == (glo > 0.0)) {
          lo = mid;
          glo = g;
        } else {
          hi = mid;
        }
      }
      const double x = 0.5 * (lo + hi);
      moved = std::max(moved, std::abs(x - t[i]));
      t[i] = x;
    }
    if (moved < 1e-15) break;
  }
}

}  // namespace

DesignResult optimal_times(int n, double lambda, int x0) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  DesignResult out;
  out.region = "interior";
  if (n == 1) {
    out.times = {1.0};
    out.fi = fisher_info(x0, out.times, lambda);
    return out;
  }
  const std::vector<double> seed = optimal_times_approx(n, lambda, 1.0);
  auto objective = [&](std::span<const double> z) {
    const auto t = times_from_logits(z);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= (i == 0 ? 0.0 : t[i - 1])) return -1.0;
    }
    return fisher_info(x0, t, lambda);
  };
  optim::NelderMeadOptions opts;
  opts.initial_step = 0.1;
  opts.ftol = 1e-12;
  opts.max_evaluations = 20000;
  const auto best = optim::nelder_mead_max(objective, logits_from_times(seed), opts);
  std::vector<double> t = times_from_logits(best.x);

  // Golden-section polish per coordinate, then a derivative root polish.
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (int i = 0; i + 1 < n; ++i) {
      const double lo = i == 0 ? 0.0 : t[i - 1];
      const double hi = t[i + 1];
      auto f = [&](double x) {
        auto trial = t;
        trial[i] = x;
        if (x <= lo || x >= hi) return -1.0;
        return fisher_info(x0, trial, lambda);
      };
      const auto r = optim::golden_section_max(f, lo, hi, 1e-10);
      if (r.value > fisher_info(x0, t, lambda)) t[i] = r.x;
    }
  }
  std::vector<double> polished = t;
  polish_stationary(polished, lambda);
  // Accept the stationary point unless it is worse beyond rounding.
  const double before = fisher_info(x0, t, lambda);
  if (fisher_info(x0, polished, lambda) >= before * (1.0 - 1e-13)) t = polished;

  out.times = t;
  out.fi = fisher_info(x0, t, lambda);
  const double seed_fi = fisher_info(x0, seed, lambda);
  if (out.fi < seed_fi) {
    out.times = seed;
    out.fi = seed_fi;
  }
  return out;
}

}  // namespace popbp::pbp
