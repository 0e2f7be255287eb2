#include "popbp/design.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "popbp/optim.hpp"
#include "popbp/pbp.hpp"

namespace popbp::design {

int TiePattern::n() const { return std::accumulate(blocks.begin(), blocks.end(), 0); }

std::vector<double> TiePattern::expand(std::span<const double> block_times) const {
  if (static_cast<int>(block_times.size()) != free_blocks()) {
    throw std::invalid_argument("expected one time per free block");
  }
  std::vector<double> times;
  times.reserve(n());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double t = b + 1 < blocks.size() ? block_times[b] : 1.0;
    times.insert(times.end(), blocks[b], t);
  }
  return times;
}

std::string TiePattern::label() const {
  std::ostringstream out;
  int index = 1;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b > 0) out << '|';
    for (int k = 0; k < blocks[b]; ++k) {
      out << (k > 0 ? "=t" : "t") << index++;
    }
  }
  out << "=1";
  return out.str();
}

std::vector<TiePattern> enumerate_tie_patterns(int n) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (n > 30) throw std::invalid_argument("n too large to enumerate tie patterns");
  // Bit j of `cuts` set: a block ends after index j + 1.
  std::vector<TiePattern> out;
  const std::uint32_t all = (1u << (n - 1)) - 1u;
  std::vector<std::uint32_t> masks;
  for (std::uint32_t cuts = 0; cuts <= all; ++cuts) masks.push_back(cuts);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    return std::popcount(a) > std::popcount(b);
  });
  for (std::uint32_t cuts : masks) {
    TiePattern pattern;
    int size = 1;
    for (int j = 0; j + 1 < n; ++j) {
      if ((cuts >> j) & 1u) {
        pattern.blocks.push_back(size);
        size = 1;
      } else {
        ++size;
      }
    }
    pattern.blocks.push_back(size);
    out.push_back(std::move(pattern));
  }
  return out;
}

Evaluator exact_evaluator(double lambda, double p, const fisher::TerminationPolicy& policy) {
  const ModelParams params(lambda, p);
  return [params, policy](std::span<const double> times) {
    const ObservationSchedule schedule(std::vector<double>(times.begin(), times.end()),
                                       params.lambda());
    return fisher::fisher_info(schedule, params, policy).value;
  };
}

Evaluator approx_evaluator(double lambda, double p) {
  return [lambda, p](std::span<const double> times) {
    if (times.size() != 2) {
      throw std::invalid_argument("the approximation needs exactly two observation times");
    }
    return fisher::fisher_info_approx_n2(times[0], times[1], lambda, p);
  };
}

namespace {

constexpr double kTieTolerance = 1e-12;

// Free block times s_1 < ... < s_k in (0, 1) from unconstrained z: the k + 1
// gaps are proportional to (e^{z_1}, ..., e^{z_k}, 1).
std::vector<double> block_times_from(std::span<const double> z) {
  const std::size_t k = z.size();
  const double top = std::max(0.0, *std::max_element(z.begin(), z.end()));
  std::vector<double> w(k + 1);
  for (std::size_t j = 0; j < k; ++j) w[j] = std::exp(z[j] - top);
  w[k] = std::exp(-top);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> s(k);
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    acc += w[j];
    s[j] = std::min(1.0, acc / total);
  }
  return s;
}

std::vector<double> coordinates_from(std::span<const double> s) {
  const std::size_t k = s.size();
  std::vector<double> gaps(k + 1);
  double prev = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    gaps[j] = std::max(s[j] - prev, 1e-12);
    prev = s[j];
  }
  gaps[k] = std::max(1.0 - prev, 1e-12);
  std::vector<double> z(k);
  for (std::size_t j = 0; j < k; ++j) z[j] = std::log(gaps[j] / gaps[k]);
  return z;
}

struct Candidate {
  std::vector<double> block_times;
  double value = -std::numeric_limits<double>::infinity();
};

Candidate search_pattern(const TiePattern& pattern, double lambda, const Evaluator& fi,
                         const OptimizeOptions& options) {
  const int k = pattern.free_blocks();
  auto objective = [&](std::span<const double> s) { return fi(pattern.expand(s)); };

  if (k == 0) return {{}, objective({})};

  if (k == 1) {
    auto f = [&](double s) {
      const double one[1] = {s};
      return objective(one);
    };
    const auto best = optim::grid_then_golden_max(f, 0.0, 1.0, options.grid_step, options.xtol);
    return {{best.x}, best.value};
  }

  // Seeds: the fully observed approximate optimum averaged within each block,
  // and evenly spaced block times.
  const auto approx = pbp::optimal_times_approx(pattern.n(), lambda);
  std::vector<std::vector<double>> seeds(2, std::vector<double>(k));
  int index = 0;
  for (int b = 0; b < k; ++b) {
    double sum = 0.0;
    for (int m = 0; m < pattern.blocks[b]; ++m) sum += approx[index++];
    seeds[0][b] = sum / pattern.blocks[b];
    seeds[1][b] = static_cast<double>(b + 1) / (k + 1);
  }

  Candidate best;
  for (const auto& seed : seeds) {
    const double seed_value = objective(seed);
    if (seed_value > best.value) best = {seed, seed_value};
    auto f = [&](std::span<const double> z) { return objective(block_times_from(z)); };
    const auto nm = optim::nelder_mead_max(f, coordinates_from(seed));
    Candidate local{block_times_from(nm.x), nm.value};
    for (int sweep = 0; sweep < options.polish_sweeps; ++sweep) {
      for (int j = 0; j < k; ++j) {
        const double lo = j == 0 ? 0.0 : local.block_times[j - 1];
        const double hi = j + 1 == k ? 1.0 : local.block_times[j + 1];
        if (!(hi - lo > options.xtol)) continue;
        std::vector<double> trial = local.block_times;
        auto g = [&](double s) {
          trial[j] = s;
          return objective(trial);
        };
        const auto line = optim::golden_section_max(g, lo, hi, options.xtol);
        if (line.value > local.value) {
          local.block_times[j] = line.x;
          local.value = line.value;
        }
      }
    }
    if (local.value > best.value) best = std::move(local);
  }
  return best;
}

}  // namespace

DesignResult optimize_times(int n, double lambda, const Evaluator& fi,
                            const OptimizeOptions& options) {
  const auto patterns = enumerate_tie_patterns(n);
  std::vector<Candidate> found;
  double best = -std::numeric_limits<double>::infinity();
  for (const TiePattern& pattern : patterns) {
    try {
      found.push_back(search_pattern(pattern, lambda, fi, options));
    } catch (const std::exception& e) {
      throw std::runtime_error("optimisation on pattern " + pattern.label() +
                               " failed: " + e.what());
    }
    best = std::max(best, found.back().value);
  }
  // Near-ties go to the pattern with fewer free times, so a search that
  // converges onto a face reports that face exactly.
  const double cutoff = best - kTieTolerance * std::abs(best);
  std::size_t pick = 0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    if (found[i].value < cutoff) continue;
    if (found[pick].value < cutoff ||
        patterns[i].free_blocks() < patterns[pick].free_blocks()) {
      pick = i;
    }
  }
  DesignResult out;
  out.fi = found[pick].value;
  out.times = patterns[pick].expand(found[pick].block_times);
  out.region = patterns[pick].label();
  return out;
}

Optimizer exact_optimizer(int n, double lambda, const fisher::TerminationPolicy& policy,
                          const OptimizeOptions& options) {
  return [=](double p) {
    if (p == 1.0) return pbp::optimal_times(n, lambda);
    return optimize_times(n, lambda, exact_evaluator(lambda, p, policy), options);
  };
}

Optimizer approx_optimizer(double lambda, const OptimizeOptions& options) {
  return [=](double p) { return optimize_times(2, lambda, approx_evaluator(lambda, p), options); };
}

bool intervals_non_overlapping(std::span<const DropInterval> intervals) {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    for (std::size_t j = i + 1; j < intervals.size(); ++j) {
      const auto& a = intervals[i];
      const auto& b = intervals[j];
      const bool identical = a.lower == b.lower && a.upper == b.upper;
      const bool disjoint = a.upper <= b.lower || b.upper <= a.lower;
      if (!identical && !disjoint) return false;
    }
  }
  return true;
}

DropSearchReport drop_values(int n, const Optimizer& optimize, double width) {
  if (n < 2) throw std::invalid_argument("drop values need n >= 2");
  if (!(width > 0.0)) throw std::invalid_argument("width must be positive");
  DropSearchReport report;
  for (int i = 1; i < n; ++i) report.intervals.push_back({i, 0.0, 1.0});

  auto describe = [](int i, double p, const char* what) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "t" << i << "* " << what << " at p = " << p;
    return msg.str();
  };

  // Bracket checks; these probes lie outside the open brackets.
  {
    const auto top = optimize(1.0);
    ++report.optimizations;
    for (int i = 1; i < n; ++i) {
      if (top.times[i - 1] >= kAtHorizon) report.violations.push_back(describe(i, 1.0, "= 1"));
    }
    const auto bottom = optimize(width);
    ++report.optimizations;
    for (int i = 1; i < n; ++i) {
      if (bottom.times[i - 1] < kAtHorizon) {
        report.violations.push_back(describe(i, width, "< 1"));
      }
    }
  }

  for (int i = 1; i < n; ++i) {
    DropInterval& target = report.intervals[i - 1];
    while (target.upper - target.lower >= width) {
      const double mid = target.midpoint();
      const auto result = optimize(mid);
      ++report.optimizations;
      for (DropInterval& d : report.intervals) {
        const bool at_one = result.times[d.index - 1] >= kAtHorizon;
        if (d.lower < mid && mid < d.upper) {
          (at_one ? d.lower : d.upper) = mid;
        } else if (mid <= d.lower && !at_one) {
          report.violations.push_back(describe(d.index, mid, "< 1 below its lower bound"));
        } else if (mid >= d.upper && at_one) {
          report.violations.push_back(describe(d.index, mid, "= 1 above its upper bound"));
        }
      }
    }
  }
  report.non_overlapping = intervals_non_overlapping(report.intervals);
  return report;
}

std::vector<double> part_grid(double a, double b, double spacing, int min_points) {
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  if (b < a) throw std::invalid_argument("part grid needs a <= b");
  const double span = b - a;
  const long steps = std::max<long>(min_points - 1, std::lround(std::ceil(span / spacing - 1e-9)));
  std::vector<double> out(steps + 1);
  for (long k = 0; k <= steps; ++k) {
    out[k] = k == steps ? b : a + span * static_cast<double>(k) / static_cast<double>(steps);
  }
  return out;
}

namespace {

std::uint64_t key_of(double p) {
  std::uint64_t bits;
  std::memcpy(&bits, &p, sizeof bits);
  return bits;
}

std::map<std::uint64_t, SweepRow> load_checkpoint(const std::string& path, int n) {
  std::map<std::uint64_t, SweepRow> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(fields.size()) != n + 2) continue;  // partial trailing line
    SweepRow row;
    row.p = fields[0];
    row.times.assign(fields.begin() + 1, fields.begin() + 1 + n);
    row.fi = fields[n + 1];
    rows[key_of(row.p)] = row;
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep(int n, std::span<const DropInterval> drops,
                            const Optimizer& optimize,
                            const std::function<double(double, std::span<const double>)>& fi_at,
                            const SweepOptions& options) {
  std::vector<DropInterval> distinct;
  for (const DropInterval& d : drops) {
    if (distinct.empty() || d.lower != distinct.back().lower ||
        d.upper != distinct.back().upper) {
      distinct.push_back(d);
    }
  }
  std::sort(distinct.begin(), distinct.end(),
            [](const DropInterval& a, const DropInterval& b) { return a.lower < b.lower; });

  std::map<std::uint64_t, SweepRow> saved;
  std::ofstream journal;
  if (options.checkpoint) {
    saved = load_checkpoint(*options.checkpoint, n);
    journal.open(*options.checkpoint, std::ios::app);
    if (!journal) throw std::runtime_error("cannot open checkpoint " + *options.checkpoint);
    journal << std::setprecision(17);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows;
  const std::vector<double> ones(n, 1.0);
  const double first_end = distinct.empty() ? 1.0 : distinct.front().lower;
  for (double p : part_grid(0.0, first_end, options.spacing, options.min_points)) {
    rows.push_back({p, ones, fi_at(p, ones), 0, false});
  }

  for (std::size_t k = 0; k < distinct.size(); ++k) {
    rows.push_back({distinct[k].midpoint(), std::vector<double>(n, nan), nan,
                    static_cast<int>(k), true});
    const double a = distinct[k].upper;
    const double b = k + 1 < distinct.size() ? distinct[k + 1].lower : 1.0;
    for (double p : part_grid(a, b, options.spacing, options.min_points)) {
      SweepRow row;
      if (auto it = saved.find(key_of(p)); it != saved.end()) {
        row = it->second;
      } else {
        const DesignResult r = optimize(p);
        row.p = p;
        row.times = r.times;
        row.fi = r.fi;
        if (journal.is_open()) {
          journal << p;
          for (double t : row.times) journal << ',' << t;
          journal << ',' << row.fi << '\n' << std::flush;
        }
      }
      row.part = static_cast<int>(k) + 1;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace popbp::design
