#include "popbp/likelihood.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "popbp/pbp.hpp"

namespace popbp::likelihood {

template <typename Real>
SliceBuffer<Real>::SliceBuffer(const ObservationSchedule& schedule,
                               const ModelParams& params, int workers)
    : n_(schedule.size()),
      layers_(params.x0()),
      workers_(workers < 1 ? 1 : workers),
      rc_(genpoly::assemble<Real>(schedule, params,
                                  params.x0() == 1 ? genpoly::Mode::FixedX0One
                                                   : genpoly::Mode::GeneralX0)),
      index_(n_, 64),
      dq0_(rc_.dq[0]),
      ring_(static_cast<std::size_t>(n_) + 1) {
  const bool general = rc_.mode == genpoly::Mode::GeneralX0;
  for (std::uint32_t c = 1; c < rc_.q.size(); ++c) {
    if (rc_.q[c] == Real(0) && rc_.dq[c] == Real(0)) continue;
    Dependency d;
    d.layer_shift = general ? static_cast<int>(c & 1u) : 0;
    d.ybits = general ? (c >> 1) : c;
    if (d.layer_shift >= layers_) continue;  // would read layer 0, which is zero
    d.weight = std::popcount(d.ybits);
    d.q_hat = rc_.q_hat[c];
    d.q = rc_.q[c];
    d.dq = rc_.dq[c];
    d.suffix.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int i = n_ - 1; i >= 0; --i) {
      d.suffix[i] = d.suffix[i + 1] + static_cast<int>((d.ybits >> i) & 1u);
    }
    deps_.push_back(std::move(d));
  }
}

template <typename Real>
void SliceBuffer<Real>::compute_block(int degree, lattice::Index begin,
                                      lattice::Index end, BlockResult& out) {
  const int n = n_;
  const bool general = rc_.mode == genpoly::Mode::GeneralX0;
  const Real divisor = rc_.divisor;
  const std::size_t layers = static_cast<std::size_t>(layers_);
  Value<Real>* current = ring_[slot(degree)].data();

  // Subtracting a fixed c preserves lexicographic order and maps the valid
  // compositions of this slice onto the whole slice degree - |c|, so the
  // rank of y - c advances by one at every valid y.
  struct Cursor {
    const Value<Real>* source;
    lattice::Index rank;
    bool started;
  };
  std::vector<Cursor> cursors(deps_.size());
  for (std::size_t k = 0; k < deps_.size(); ++k) {
    const int from = degree - deps_[k].weight;
    cursors[k] = {from >= 0 ? ring_[slot(from)].data() : nullptr, 0, false};
  }

  std::vector<int> y(n), suffix(n + 1, 0);
  index_.unrank_into(degree, begin, y);

  for (lattice::Index rank = begin; rank < end; ++rank) {
    std::uint32_t zero_mask = 0;
    std::uint32_t unit_bits = 0;
    bool numerator_support = true;
    for (int i = 0; i < n; ++i) {
      if (y[i] == 0) zero_mask |= 1u << i;
      if (y[i] == 1) unit_bits |= 1u << i;
      if (y[i] > 1) numerator_support = false;
    }

    auto advance_cursor = [&](std::size_t k) {
      Cursor& cur = cursors[k];
      if (cur.started) {
        ++cur.rank;
        return;
      }
      suffix[n] = 0;
      for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + y[i];
      const std::vector<int>& sub = deps_[k].suffix;
      lattice::Index r = 0;
      for (int i = 0; i + 1 < n; ++i) {
        const int kk = n - 1 - i;
        r += index_.cumulative(kk, suffix[i] - sub[i]) -
             index_.cumulative(kk, suffix[i + 1] - sub[i + 1]);
      }
      cur.rank = r;
      cur.started = true;
    };

    if (layers == 1) {
      Real value(0);
      Real dsum(0);
      if (numerator_support) {
        value = rc_.num_hat[unit_bits];
        dsum = rc_.dnum[unit_bits];
      }
      for (std::size_t k = 0; k < deps_.size(); ++k) {
        const Dependency& d = deps_[k];
        if (d.ybits & zero_mask) continue;
        advance_cursor(k);
        const Value<Real>& prev = cursors[k].source[cursors[k].rank];
        value += d.q_hat * prev.value;
        dsum += d.dq * prev.value + d.q * prev.derivative;
      }
      const Real deriv = (dsum + dq0_ * value) / divisor;
      current[rank] = {value, deriv};
      if (!std::isfinite(value) || !std::isfinite(deriv)) {
        if (!out.bad) {
          out.bad = true;
          out.bad_rank = rank;
        }
      }
      out.mass.add(value);
      if (value > Real(0)) out.fisher.add(deriv * deriv / value);
      lattice::CompositionIndex::next(y);
      continue;
    }

    for (std::size_t k = 0; k < deps_.size(); ++k) {
      if (!(deps_[k].ybits & zero_mask)) advance_cursor(k);
    }

    for (std::size_t a = 1; a <= layers; ++a) {
      Real value(0);
      Real dsum(0);
      if (a == 1 && numerator_support) {
        const std::uint32_t idx = general ? ((unit_bits << 1) | 1u) : unit_bits;
        value = rc_.num_hat[idx];
        dsum = rc_.dnum[idx];
      }
      for (std::size_t k = 0; k < deps_.size(); ++k) {
        const Dependency& d = deps_[k];
        if (d.ybits & zero_mask) continue;
        if (static_cast<int>(a) - d.layer_shift < 1) continue;
        const Value<Real>& prev =
            cursors[k].source[cursors[k].rank * layers + (a - 1 - d.layer_shift)];
        value += d.q_hat * prev.value;
        dsum += d.dq * prev.value + d.q * prev.derivative;
      }
      const Real deriv = (dsum + dq0_ * value) / divisor;
      current[rank * layers + (a - 1)] = {value, deriv};
      if (!std::isfinite(value) || !std::isfinite(deriv)) {
        if (!out.bad) {
          out.bad = true;
          out.bad_rank = rank;
        }
      }
      if (a == layers) {
        out.mass.add(value);
        if (value > Real(0)) out.fisher.add(deriv * deriv / value);
      }
    }
    lattice::CompositionIndex::next(y);
  }
}

template <typename Real>
SliceSummary<Real> SliceBuffer<Real>::advance() {
  const int degree = degree_ + 1;
  index_.reserve(degree);
  const lattice::Index size = index_.slice_size(degree);
  const std::size_t layers = static_cast<std::size_t>(layers_);
  ring_[slot(degree)].resize(size * layers);

  const std::size_t blocks = (size + kBlockSize - 1) / kBlockSize;
  std::vector<BlockResult> results(blocks);
  auto run = [&](std::size_t b) {
    const lattice::Index begin = b * kBlockSize;
    const lattice::Index end = std::min<lattice::Index>(size, begin + kBlockSize);
    compute_block(degree, begin, end, results[b]);
  };
  if (workers_ > 1 && blocks > 1) {
    const long long count = static_cast<long long>(blocks);
#pragma omp parallel for num_threads(workers_) schedule(static)
    for (long long b = 0; b < count; ++b) run(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
  }

  CompensatedSum<Real> fisher, mass;
  for (const BlockResult& r : results) {
    if (r.bad) {
      std::ostringstream msg;
      msg << "non-finite likelihood value at slice " << degree << ", rank " << r.bad_rank;
      throw NumericalError(msg.str());
    }
    fisher.merge(r.fisher);
    mass.merge(r.mass);
  }
  degree_ = degree;
  return {degree, fisher.value(), mass.value()};
}

template <typename Real>
std::optional<Value<Real>> SliceBuffer<Real>::lookup(std::span<const int> y) const {
  if (static_cast<int>(y.size()) != n_) return std::nullopt;
  const int degree = std::accumulate(y.begin(), y.end(), 0);
  if (degree > degree_ || degree < degree_ - n_ || degree < 0) return std::nullopt;
  const lattice::Index r = index_.rank(y);
  const std::size_t at = r * static_cast<std::size_t>(layers_) + (layers_ - 1);
  return ring_[slot(degree)][at];
}

template <typename Real>
std::vector<Value<Real>> SliceBuffer<Real>::slice(int degree) const {
  if (degree > degree_ || degree < degree_ - n_ || degree < 0) {
    throw std::out_of_range("slice is not retained");
  }
  const lattice::Index size = index_.slice_size(degree);
  std::vector<Value<Real>> out(size);
  const std::size_t layers = static_cast<std::size_t>(layers_);
  for (lattice::Index r = 0; r < size; ++r) {
    const std::size_t at = r * layers + (layers - 1);
    out[r] = ring_[slot(degree)][at];
  }
  return out;
}

template <typename Real>
Value<Real> likelihood_point(std::span<const int> y, const ObservationSchedule& schedule,
                             const ModelParams& params) {
  if (static_cast<int>(y.size()) != schedule.size()) {
    throw std::invalid_argument("observation vector length must match the schedule");
  }
  for (int v : y) {
    if (v < 0) throw std::invalid_argument("observations must be non-negative");
  }
  SliceBuffer<Real> buffer(schedule, params);
  const int degree = std::accumulate(y.begin(), y.end(), 0);
  while (buffer.degree() < degree) buffer.advance();
  return *buffer.lookup(y);
}

int default_population_cap(const ModelParams& params, double horizon) {
  const double scaled = 8.0 * std::exp(params.lambda() * horizon);
  if (!(scaled < 1e5)) return 100000;
  return std::max(60, static_cast<int>(std::ceil(scaled)));
}

namespace {

double binomial_pmf(int y, int x, double p) {
  if (y > x) return 0.0;
  if (p == 0.0) return y == 0 ? 1.0 : 0.0;
  if (p == 1.0) return y == x ? 1.0 : 0.0;
  const double log_c = std::lgamma(x + 1.0) - std::lgamma(y + 1.0) - std::lgamma(x - y + 1.0);
  return std::exp(log_c + y * std::log(p) + (x - y) * std::log1p(-p));
}

}  // namespace

BruteForceResult likelihood_bruteforce(std::span<const int> y,
                                       const ObservationSchedule& schedule,
                                       const ModelParams& params, int x_cap) {
  const int n = schedule.size();
  if (static_cast<int>(y.size()) != n) {
    throw std::invalid_argument("observation vector length must match the schedule");
  }
  const int x0 = params.x0();
  if (x_cap < x0) throw std::invalid_argument("population cap below x0");
  const double lambda = params.lambda();
  const std::size_t width = static_cast<std::size_t>(x_cap) + 1;

  // mass[x] = sum over paths ending at x of the path weight; score[x] = the
  // same sum weighted by each path's accumulated dlog/dlambda.
  std::vector<double> mass(width, 0.0), score(width, 0.0);
  mass[x0] = 1.0;
  std::vector<double> next_mass(width), next_score(width);
  for (int i = 0; i < n; ++i) {
    const double gap = schedule.gap(i);
    const double v = std::exp(-lambda * gap);
    const double one_minus_v = -std::expm1(-lambda * gap);
    std::fill(next_mass.begin(), next_mass.end(), 0.0);
    std::fill(next_score.begin(), next_score.end(), 0.0);
    for (int from = x0; from <= x_cap; ++from) {
      if (mass[from] == 0.0 && score[from] == 0.0) continue;
      for (int to = from; to <= x_cap; ++to) {
        const double w = pbp::transition_pmf(from, to, lambda, gap) *
                         binomial_pmf(y[i], to, params.p());
        if (w == 0.0) continue;
        const double step_score = gap == 0.0 ? 0.0 : gap * (to * v - from) / one_minus_v;
        next_mass[to] += mass[from] * w;
        next_score[to] += (score[from] + mass[from] * step_score) * w;
      }
    }
    mass.swap(next_mass);
    score.swap(next_score);
  }

  BruteForceResult out;
  out.value = std::accumulate(mass.begin(), mass.end(), 0.0);
  out.derivative = std::accumulate(score.begin(), score.end(), 0.0);
  out.converged = !(mass[x_cap] > 1e-12 * out.value);
  return out;
}

template class SliceBuffer<float>;
template class SliceBuffer<double>;
template class SliceBuffer<long double>;
template Value<float> likelihood_point<float>(std::span<const int>, const ObservationSchedule&,
                                              const ModelParams&);
template Value<double> likelihood_point<double>(std::span<const int>,
                                                const ObservationSchedule&, const ModelParams&);
template Value<long double> likelihood_point<long double>(std::span<const int>,
                                                          const ObservationSchedule&,
                                                          const ModelParams&);

}  // namespace popbp::likelihood
