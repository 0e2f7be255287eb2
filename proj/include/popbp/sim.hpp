#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "popbp/model.hpp"

namespace popbp::sim {

std::uint64_t splitmix64(std::uint64_t x);

/// Engine for one run, seeded from (seed, run) so that every run has its own
/// reproducible stream regardless of how runs are distributed over workers.
std::mt19937_64 run_engine(std::uint64_t seed, std::uint64_t run);

/// Population sizes at `times` for a pure birth process started at x0 at
/// time 0, simulated birth by birth with exponential waiting times of rate
/// lambda * x.
std::vector<long long> simulate_pbp(int x0, double lambda, std::span<const double> times,
                                    std::mt19937_64& rng);

/// Independent Binomial(x_i, p) draws.
std::vector<long long> thin(std::span<const long long> x, double p, std::mt19937_64& rng);

struct Trajectory {
  std::vector<long long> x;
  std::vector<long long> y;
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
};

Trajectory simulate_run(const ObservationSchedule& schedule, const ModelParams& params,
                        std::uint64_t seed, std::uint64_t run);

struct EmpiricalCell {
  std::vector<int> y;
  long long count = 0;
  double frequency = 0.0;
  double likelihood = 0.0;
  double sigma = 0.0;  // sqrt(L (1 - L) / runs)
  bool within = true;  // |frequency - L| <= 3 sigma
};

struct EmpiricalReport {
  long long runs = 0;
  int max_total = 0;
  std::vector<EmpiricalCell> cells;  // every y with |y| <= max_total, rank order
  long long outside_count = 0;       // runs with |y| > max_total
  bool all_within = true;
};

/// Simulates `runs` observation vectors and compares the frequency of each
/// y with |y| <= max_total against the recurrence likelihood.
EmpiricalReport empirical_check(const ObservationSchedule& schedule, const ModelParams& params,
                                long long runs, std::uint64_t seed, int max_total = 4,
                                int workers = 1);

}  // namespace popbp::sim
