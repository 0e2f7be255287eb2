#pragma once

// Likelihood L(y | lambda, p) and dL/dlambda of a partially observable pure
// birth process, evaluated degree-slice by degree-slice through the linear
// recurrence implied by the generating function (see genpoly.hpp):
//
//   L(y)  = p^_y + sum_{c != 0} q^_c L(y - c)
//   dL(y) = (p'_y + sum_c q'_c L(y - c) + sum_{c != 0} q_c dL(y - c)) / (1 - q_0)
//
// where the hatted coefficients are pre-divided by 1 - q_0 and the c = 0
// term of the derivative sum uses L(y) itself.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "popbp/genpoly.hpp"
#include "popbp/lattice.hpp"
#include "popbp/model.hpp"
#include "popbp/summation.hpp"

namespace popbp::likelihood {

template <typename Real>
struct Value {
  Real value{0};
  Real derivative{0};
};

/// Aggregates of the slice just computed, for the target x0 layer. Sums run
/// over fixed-size rank blocks and are combined in block order, so they do
/// not depend on the number of workers.
template <typename Real>
struct SliceSummary {
  int degree = 0;
  Real fisher_term{0};  // sum dL^2 / L over entries with L > 0
  Real mass{0};         // sum L
};

/// Ring storage for the last n + 1 degree slices and the driver that fills
/// the next one.
///
/// Entries of a slice are stored in lexicographic rank order. With x0 = m > 1
/// the recurrence also runs over the initial-population index 1..m and each
/// rank holds m interleaved entries; only layer m is the likelihood for the
/// known x0.
template <typename Real>
class SliceBuffer {
 public:
  static constexpr std::size_t kBlockSize = 1024;

  SliceBuffer(const ObservationSchedule& schedule, const ModelParams& params,
              int workers = 1);

  int parts() const { return n_; }
  int layers() const { return layers_; }
  /// Degree of the most recently completed slice, -1 before the first advance.
  int degree() const { return degree_; }
  const genpoly::RecurrenceCoefficients<Real>& coefficients() const { return rc_; }

  /// Computes slice degree() + 1. Throws NumericalError naming the slice and
  /// rank if a non-finite value appears.
  SliceSummary<Real> advance();

  /// Likelihood and derivative for a composition in one of the retained
  /// slices (degree() - n .. degree()); nullopt when not retained.
  std::optional<Value<Real>> lookup(std::span<const int> y) const;

  /// Target-layer values of a retained slice in rank order.
  std::vector<Value<Real>> slice(int degree) const;

 private:
  struct Dependency {
    std::uint32_t ybits;      // bit i <-> y_{i+1}
    int weight;               // popcount(ybits)
    int layer_shift;          // 1 if the u_0 exponent is 1
    Real q_hat, q, dq;
    std::vector<int> suffix;  // suffix[i] = sum_{j >= i} c_j, length n + 1
  };

  struct BlockResult {
    CompensatedSum<Real> fisher;
    CompensatedSum<Real> mass;
    bool bad = false;
    lattice::Index bad_rank = 0;
  };

  std::size_t slot(int degree) const {
    return static_cast<std::size_t>(degree) % static_cast<std::size_t>(n_ + 1);
  }
  void compute_block(int degree, lattice::Index begin, lattice::Index end,
                     BlockResult& out);

  int n_;
  int layers_;
  int workers_;
  genpoly::RecurrenceCoefficients<Real> rc_;
  lattice::CompositionIndex index_;
  std::vector<Dependency> deps_;
  Real dq0_;
  std::vector<std::vector<Value<Real>>> ring_;
  int degree_ = -1;
};

/// Drives a fresh SliceBuffer up to |y| and reads one entry.
template <typename Real = double>
Value<Real> likelihood_point(std::span<const int> y, const ObservationSchedule& schedule,
                             const ModelParams& params);

struct BruteForceResult {
  double value = 0.0;
  double derivative = 0.0;
  /// False when the last truncated shell still contributed more than 1e-12
  /// of the total.
  bool converged = true;
};

/// Default population cap max(60, 8 exp(lambda * horizon)).
int default_population_cap(const ModelParams& params, double horizon);

/// Direct evaluation of the nested sums over hidden population paths
/// x0 <= x_1 <= ... <= x_n <= x_cap of prod_i Bin(y_i | x_i, p) P(x_i | x_{i-1}),
/// with the derivative weighting each path by its score
/// sum_j gap_j (x_j v_j - x_{j-1}) / (1 - v_j). The sums are organised as a
/// forward pass over observation times.
BruteForceResult likelihood_bruteforce(std::span<const int> y,
                                       const ObservationSchedule& schedule,
                                       const ModelParams& params, int x_cap);

}  // namespace popbp::likelihood
