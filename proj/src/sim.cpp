#include "popbp/sim.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "popbp/lattice.hpp"
#include "popbp/likelihood.hpp"

namespace popbp::sim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 run_engine(std::uint64_t seed, std::uint64_t run) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ run));
}

std::vector<long long> simulate_pbp(int x0, double lambda, std::span<const double> times,
                                    std::mt19937_64& rng) {
  if (x0 < 1) throw std::invalid_argument("x0 must be at least 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  validate_times(times);
  std::vector<long long> out;
  out.reserve(times.size());
  long long x = x0;
  double now = 0.0;
  for (double target : times) {
    if (lambda > 0.0) {
      while (true) {
        std::exponential_distribution<double> wait(lambda * static_cast<double>(x));
        const double next = now + wait(rng);
        if (next > target) break;
        now = next;
        ++x;
      }
    }
    // The pending waiting time is memoryless, so it restarts at the observation.
    now = target;
    out.push_back(x);
  }
  return out;
}

std::vector<long long> thin(std::span<const long long> x, double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  std::vector<long long> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (p == 0.0) {
      y[i] = 0;
    } else if (p == 1.0) {
      y[i] = x[i];
    } else {
      std::binomial_distribution<long long> draw(x[i], p);
      y[i] = draw(rng);
    }
  }
  return y;
}

Trajectory simulate_run(const ObservationSchedule& schedule, const ModelParams& params,
                        std::uint64_t seed, std::uint64_t run) {
  auto rng = run_engine(seed, run);
  Trajectory t;
  t.seed = seed;
  t.run = run;
  t.x = simulate_pbp(params.x0(), params.lambda(), schedule.times(), rng);
  t.y = thin(t.x, params.p(), rng);
  return t;
}

EmpiricalReport empirical_check(const ObservationSchedule& schedule, const ModelParams& params,
                                long long runs, std::uint64_t seed, int max_total,
                                int workers) {
  if (runs < 1) throw std::invalid_argument("runs must be positive");
  if (max_total < 0) throw std::invalid_argument("max_total must be non-negative");
  const int n = schedule.size();
  lattice::CompositionIndex index(n, max_total);

  // Cells are laid out slice by slice in rank order.
  std::vector<std::size_t> slice_start(max_total + 2, 0);
  for (int s = 0; s <= max_total; ++s) {
    slice_start[s + 1] = slice_start[s] + index.slice_size(s);
  }
  const std::size_t cells = slice_start[max_total + 1];

  std::vector<long long> counts(cells + 1, 0);  // last slot: |y| > max_total
  const int threads = std::max(1, workers);
#pragma omp parallel num_threads(threads)
  {
    std::vector<long long> local(cells + 1, 0);
    std::vector<int> y(n);
#pragma omp for schedule(static)
    for (long long r = 0; r < runs; ++r) {
      const Trajectory t = simulate_run(schedule, params, seed, static_cast<std::uint64_t>(r));
      const long long total = std::accumulate(t.y.begin(), t.y.end(), 0LL);
      if (total > max_total) {
        ++local[cells];
        continue;
      }
      for (int i = 0; i < n; ++i) y[i] = static_cast<int>(t.y[i]);
      ++local[slice_start[total] + index.rank(y)];
    }
#pragma omp critical
    for (std::size_t c = 0; c <= cells; ++c) counts[c] += local[c];
  }

  EmpiricalReport report;
  report.runs = runs;
  report.max_total = max_total;
  report.outside_count = counts[cells];
  likelihood::SliceBuffer<double> buffer(schedule, params);
  const double n_runs = static_cast<double>(runs);
  for (int s = 0; s <= max_total; ++s) {
    buffer.advance();
    const auto values = buffer.slice(s);
    for (std::size_t r = 0; r < values.size(); ++r) {
      EmpiricalCell cell;
      cell.y = index.unrank(s, r);
      cell.count = counts[slice_start[s] + r];
      cell.frequency = static_cast<double>(cell.count) / n_runs;
      cell.likelihood = values[r].value;
      cell.sigma = std::sqrt(std::max(0.0, cell.likelihood * (1.0 - cell.likelihood)) / n_runs);
      cell.within = std::abs(cell.frequency - cell.likelihood) <= 3.0 * cell.sigma;
      report.all_within = report.all_within && cell.within;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace popbp::sim
