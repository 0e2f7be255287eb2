#include "popbp/lattice.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace popbp::lattice {

namespace {
constexpr Index kSaturated = std::numeric_limits<Index>::max();

Index saturating_add(Index a, Index b) {
  return (a > kSaturated - b) ? kSaturated : a + b;
}
}  // namespace

Index slice_size(int degree, int parts) {
  if (parts < 1) throw std::invalid_argument("parts must be at least 1");
  if (degree < 0) return 0;
  // C(degree + parts - 1, parts - 1) by the multiplicative formula with
  // exact division at each step.
  const int k = parts - 1;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(degree + i) / static_cast<unsigned>(i);
    if (acc > kSaturated) {
      throw std::overflow_error("slice size C(" + std::to_string(degree + k) + ", " +
                                std::to_string(k) + ") exceeds 64 bits");
    }
  }
  return static_cast<Index>(acc);
}

CompositionIndex::CompositionIndex(int parts, int reserve_degree) : parts_(parts) {
  if (parts < 1) throw std::invalid_argument("parts must be at least 1");
  rebuild(std::max(reserve_degree, 0));
}

void CompositionIndex::reserve(int degree) {
  if (degree > max_degree_) {
    // Grow geometrically so repeated advances do not rebuild every slice.
    rebuild(std::max(degree, 2 * max_degree_ + 16));
  }
}

void CompositionIndex::rebuild(int degree) {
  stride_ = static_cast<std::size_t>(degree) + 1;
  table_.assign(static_cast<std::size_t>(parts_) * stride_, 0);
  // Row k holds C(r + k, k); row k = row (k-1) prefix-summed.
  for (std::size_t r = 0; r < stride_; ++r) table_[r] = 1;
  for (int k = 1; k < parts_; ++k) {
    Index* row = &table_[static_cast<std::size_t>(k) * stride_];
    const Index* prev = row - stride_;
    Index acc = 0;
    for (std::size_t r = 0; r < stride_; ++r) {
      acc = saturating_add(acc, prev[r]);
      row[r] = acc;
    }
  }
  max_degree_ = degree;
}

Index CompositionIndex::slice_size(int degree) const {
  if (degree < 0) return 0;
  if (degree > max_degree_) return lattice::slice_size(degree, parts_);
  const Index v = cumulative(parts_ - 1, degree);
  if (v == kSaturated) return lattice::slice_size(degree, parts_);  // throws
  return v;
}

Index CompositionIndex::rank(std::span<const int> y) const {
  if (static_cast<int>(y.size()) != parts_) {
    throw std::invalid_argument("composition has the wrong number of parts");
  }
  int remaining = 0;
  for (int v : y) {
    if (v < 0) throw std::invalid_argument("composition parts must be non-negative");
    remaining += v;
  }
  if (remaining > max_degree_) {
    throw std::out_of_range("degree exceeds the reserved index range");
  }
  Index r = 0;
  for (int i = 0; i + 1 < parts_; ++i) {
    const int k = parts_ - 1 - i;
    const int after = remaining - y[i];
    r += cumulative(k, remaining) - cumulative(k, after);
    remaining = after;
  }
  return r;
}

Index CompositionIndex::rank(std::span<const int> y, int degree) const {
  if (std::accumulate(y.begin(), y.end(), 0) != degree) {
    throw std::invalid_argument("composition does not sum to the declared degree");
  }
  return rank(y);
}

void CompositionIndex::unrank_into(int degree, Index k, std::span<int> out) const {
  if (static_cast<int>(out.size()) != parts_) {
    throw std::invalid_argument("output has the wrong number of parts");
  }
  if (degree < 0 || degree > max_degree_) {
    throw std::out_of_range("degree outside the reserved index range");
  }
  if (k >= slice_size(degree)) throw std::out_of_range("rank beyond slice size");
  int remaining = degree;
  for (int i = 0; i + 1 < parts_; ++i) {
    const int kk = parts_ - 1 - i;
    const Index total = cumulative(kk, remaining);
    // Largest v with (compositions whose part i is < v) <= k.
    int lo = 0;
    int hi = remaining;
    while (lo < hi) {
      const int mid = lo + (hi - lo + 1) / 2;
      if (total - cumulative(kk, remaining - mid) <= k) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    k -= total - cumulative(kk, remaining - lo);
    out[i] = lo;
    remaining -= lo;
  }
  out[parts_ - 1] = remaining;
}

std::vector<int> CompositionIndex::unrank(int degree, Index k) const {
  std::vector<int> y(parts_);
  unrank_into(degree, k, y);
  return y;
}

bool CompositionIndex::next(std::span<int> y) {
  const int n = static_cast<int>(y.size());
  if (n < 2) return false;
  int last = n - 1;
  while (last >= 0 && y[last] == 0) --last;
  if (last <= 0) return false;  // (S, 0, ..., 0) or all zero
  const int j = last - 1;
  const int moved = y[last] - 1;
  y[j] += 1;
  y[last] = 0;
  y[n - 1] = moved;
  return true;
}

std::optional<DependencyRef> CompositionIndex::dependency_index(std::span<const int> y,
                                                                std::uint32_t c) const {
  if (static_cast<int>(y.size()) != parts_) {
    throw std::invalid_argument("composition has the wrong number of parts");
  }
  std::vector<int> z(y.begin(), y.end());
  int degree = 0;
  for (int i = 0; i < parts_; ++i) {
    z[i] -= static_cast<int>((c >> i) & 1u);
    if (z[i] < 0) return std::nullopt;
    degree += z[i];
  }
  return DependencyRef{degree, rank(z)};
}

}  // namespace popbp::lattice
