#pragma once

// Optimal observation schedules on the unit horizon, drop values of the
// detection probability, and sweep tables over p.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popbp/fisher.hpp"
#include "popbp/model.hpp"

namespace popbp::design {

/// A stratum of 0 <= t_1 <= ... <= t_n = 1: consecutive indices grouped into
/// blocks that share one time. The last block is pinned at 1; the others
/// take free, strictly increasing times in (0, 1).
struct TiePattern {
  std::vector<int> blocks;  // block sizes, summing to n

  int n() const;
  int free_blocks() const { return static_cast<int>(blocks.size()) - 1; }
  /// Expands one time per free block into the full schedule.
  std::vector<double> expand(std::span<const double> block_times) const;
  /// e.g. "t1|t2=t3=1" for t_1 free and t_2 = t_3 = 1.
  std::string label() const;
};

/// All 2^(n-1) patterns, interior first.
std::vector<TiePattern> enumerate_tie_patterns(int n);

/// Objective: Fisher information of a full schedule.
using Evaluator = std::function<double(std::span<const double> times)>;

/// Exact objective at (lambda, p): the slice series, or the fully observed
/// closed form at p = 1.
Evaluator exact_evaluator(double lambda, double p, const fisher::TerminationPolicy& policy = {});

/// Two-observation closed-form approximation at (lambda, p).
Evaluator approx_evaluator(double lambda, double p);

struct OptimizeOptions {
  double grid_step = 1e-3;
  double xtol = 1e-8;
  int polish_sweeps = 2;
};

/// Best schedule over every tie pattern. One free block is searched on a
/// grid followed by golden-section refinement; more free blocks use
/// Nelder-Mead from two seeds and a coordinate-wise golden polish. The
/// region field carries the winning pattern's label.
DesignResult optimize_times(int n, double lambda, const Evaluator& fi,
                            const OptimizeOptions& options = {});

/// Optimisation at detection probability p.
using Optimizer = std::function<DesignResult(double p)>;

/// optimize_times with the exact objective; p = 1 uses the fully observed
/// optimiser directly.
Optimizer exact_optimizer(int n, double lambda, const fisher::TerminationPolicy& policy = {},
                          const OptimizeOptions& options = {});

/// optimize_times with the two-observation approximation (n = 2 only).
Optimizer approx_optimizer(double lambda, const OptimizeOptions& options = {});

/// t_i treated as equal to 1 during the drop-value search.
constexpr double kAtHorizon = 1.0 - 1e-6;

struct DropInterval {
  int index = 0;  // i in D_i, 1-based
  double lower = 0.0;
  double upper = 1.0;
  double width() const { return upper - lower; }
  double midpoint() const { return 0.5 * (lower + upper); }
};

struct DropSearchReport {
  std::vector<DropInterval> intervals;
  /// Bracket checks that failed (t_i* < 1 near p = 0, or t_i* = 1 at p = 1).
  std::vector<std::string> violations;
  /// True when every pair of intervals is disjoint or identical.
  bool non_overlapping = true;
  int optimizations = 0;
};

/// Bisection on p for D_1, ..., D_{n-1}, each from the bracket (0, 1), until
/// every interval is narrower than `width`. Every probe updates the bounds of
/// all drop values whose interval contains it.
DropSearchReport drop_values(int n, const Optimizer& optimize, double width = 1e-6);

/// True when every pair of intervals is disjoint or identical.
bool intervals_non_overlapping(std::span<const DropInterval> intervals);

struct SweepRow {
  double p = 0.0;
  std::vector<double> times;  // t_1 .. t_n
  double fi = 0.0;
  int part = 0;
  bool sentinel = false;  // marks a drop between parts; other fields NaN
};

struct SweepOptions {
  double spacing = 0.005;
  int min_points = 3;
  /// Completed optimisations are appended here and reused on a rerun.
  std::optional<std::string> checkpoint;
};

/// Rows over p in [0, 1]. Below the first drop the schedule is all ones and
/// only the objective is evaluated; every later part (between consecutive
/// distinct drop intervals, the last ending at p = 1) is optimised on an
/// evenly spaced grid. A sentinel row at each drop midpoint separates parts.
/// `fi_at(p, times)` evaluates the objective at a fixed schedule.
std::vector<SweepRow> sweep(int n, std::span<const DropInterval> drops,
                            const Optimizer& optimize,
                            const std::function<double(double, std::span<const double>)>& fi_at,
                            const SweepOptions& options = {});

/// Evenly spaced points from a to b inclusive, at most `spacing` apart and at
/// least `min_points` of them.
std::vector<double> part_grid(double a, double b, double spacing, int min_points);

}  // namespace popbp::design
