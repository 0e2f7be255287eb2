#pragma once

#include <functional>
#include <span>
#include <vector>

namespace popbp::optim {

struct ScalarMax {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for a maximum of `f` on [lo, hi]. Assumes `f` is
/// unimodal on the bracket; stops when the bracket is narrower than `xtol`.
ScalarMax golden_section_max(const std::function<double(double)>& f, double lo,
                             double hi, double xtol = 1e-8);

/// Dense grid with step `step` on [lo, hi] (both endpoints included),
/// followed by golden-section refinement around the best grid node.
ScalarMax grid_then_golden_max(const std::function<double(double)>& f, double lo,
                               double hi, double step, double xtol = 1e-8);

struct NelderMeadOptions {
  double initial_step = 0.25;
  /// Stop when the spread of simplex values falls below
  /// ftol * (|best| + tiny).
  double ftol = 1e-10;
  int max_evaluations = 4000;
};

struct VectorMax {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead simplex search for a maximum of `f` over R^k.
VectorMax nelder_mead_max(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> start,
                          const NelderMeadOptions& options = {});

}  // namespace popbp::optim
