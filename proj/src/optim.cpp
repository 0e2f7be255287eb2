#include "popbp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace popbp::optim {

namespace {
const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
}

ScalarMax golden_section_max(const std::function<double(double)>& f, double lo,
                             double hi, double xtol) {
  if (!(lo <= hi)) throw std::invalid_argument("golden_section_max: lo > hi");
  ScalarMax out;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  out.evaluations = 2;
  while (b - a > xtol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
  }
  if (fc >= fd) {
    out.x = c;
    out.value = fc;
  } else {
    out.x = d;
    out.value = fd;
  }
  return out;
}

ScalarMax grid_then_golden_max(const std::function<double(double)>& f, double lo,
                               double hi, double step, double xtol) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const long nodes = std::max(1L, std::lround(std::ceil((hi - lo) / step)));
  const double h = (hi - lo) / static_cast<double>(nodes);
  ScalarMax best;
  best.value = -std::numeric_limits<double>::infinity();
  for (long k = 0; k <= nodes; ++k) {
    const double x = (k == nodes) ? hi : lo + h * static_cast<double>(k);
    const double v = f(x);
    if (v > best.value) {
      best.value = v;
      best.x = x;
    }
  }
  best.evaluations = static_cast<int>(nodes + 1);
  const double a = std::max(lo, best.x - h);
  const double b = std::min(hi, best.x + h);
  if (b - a > xtol) {
    ScalarMax refined = golden_section_max(f, a, b, xtol);
    best.evaluations += refined.evaluations;
    if (refined.value > best.value) {
      best.value = refined.value;
      best.x = refined.x;
    }
  }
  return best;
}

VectorMax nelder_mead_max(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> start,
                          const NelderMeadOptions& options) {
  const std::size_t k = start.size();
  VectorMax out;
  if (k == 0) {
    out.value = f(start);
    out.evaluations = 1;
    out.converged = true;
    return out;
  }
  // Minimise the negated objective.
  auto g = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
  };

  std::vector<std::vector<double>> simplex(k + 1, start);
  std::vector<double> values(k + 1);
  for (std::size_t i = 0; i < k; ++i) simplex[i + 1][i] += options.initial_step;
  for (std::size_t i = 0; i <= k; ++i) values[i] = g(simplex[i]);

  std::vector<std::size_t> order(k + 1);
  std::vector<double> centroid(k), trial(k), trial2(k);
  auto blend = [&](std::vector<double>& dst, double w) {
    // dst = centroid + w * (centroid - worst)
    const auto& worst = simplex[order[k]];
    for (std::size_t j = 0; j < k; ++j) dst[j] = centroid[j] + w * (centroid[j] - worst[j]);
  };

  while (out.evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double best = values[order[0]];
    const double worst = values[order[k]];
    if (std::abs(worst - best) <= options.ftol * (std::abs(best) + 1e-300)) {
      out.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[order[i]][j];
    }
    for (double& c : centroid) c /= static_cast<double>(k);

    blend(trial, 1.0);
    const double fr = g(trial);
    if (fr < best) {
      blend(trial2, 2.0);
      const double fe = g(trial2);
      if (fe < fr) {
        simplex[order[k]] = trial2;
        values[order[k]] = fe;
      } else {
        simplex[order[k]] = trial;
        values[order[k]] = fr;
      }
      continue;
    }
    if (fr < values[order[k - 1]]) {
      simplex[order[k]] = trial;
      values[order[k]] = fr;
      continue;
    }
    // Contraction, outside if the reflection improved on the worst point.
    const bool outside = fr < worst;
    blend(trial2, outside ? 0.5 : -0.5);
    const double fc = g(trial2);
    if (fc < (outside ? fr : worst)) {
      simplex[order[k]] = trial2;
      values[order[k]] = fc;
      continue;
    }
    const auto& anchor = simplex[order[0]];
    for (std::size_t i = 1; i <= k; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t j = 0; j < k; ++j) v[j] = anchor[j] + 0.5 * (v[j] - anchor[j]);
      values[order[i]] = g(v);
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(best_it - values.begin());
  out.x = simplex[idx];
  out.value = -values[idx];
  return out;
}

}  // namespace popbp::optim
