#pragma once

// Indexing of degree slices: weak compositions of S into n parts, ranked in
// lexicographic order of (y_1, ..., y_n).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace popbp::lattice {

using Index = std::uint64_t;

/// Number of weak compositions of `degree` into `parts` parts,
/// C(degree + parts - 1, parts - 1). Throws std::overflow_error when the
/// count does not fit in Index.
Index slice_size(int degree, int parts);

/// Where y - c lives: slice (degree - |c|) at `rank`.
struct DependencyRef {
  int degree = 0;
  Index rank = 0;
};

/// Rank/unrank tables for compositions into a fixed number of parts.
///
/// Holds cumulative counts C(R + k, k) for k < parts, grown on demand up to
/// the largest degree seen. Lookups after `reserve` are read-only, so one
/// table may be shared by concurrent readers as long as no thread grows it.
class CompositionIndex {
 public:
  explicit CompositionIndex(int parts, int reserve_degree = 64);

  int parts() const { return parts_; }
  int max_degree() const { return max_degree_; }

  /// Extends the tables to cover every degree <= `degree`. Not thread-safe.
  void reserve(int degree);

  Index slice_size(int degree) const;

  /// Lexicographic rank of `y` among compositions of sum(y).
  Index rank(std::span<const int> y) const;
  /// Same, with the degree supplied and checked against sum(y).
  Index rank(std::span<const int> y, int degree) const;

  std::vector<int> unrank(int degree, Index k) const;
  void unrank_into(int degree, Index k, std::span<int> out) const;

  /// Advances `y` to its lexicographic successor in the same slice. Returns
  /// false (leaving `y` unspecified) if `y` was the last composition.
  static bool next(std::span<int> y);

  /// Rank of y - c, where c is a bit pattern (bit i <-> part i), or nullopt
  /// when some part would become negative.
  std::optional<DependencyRef> dependency_index(std::span<const int> y,
                                                std::uint32_t c) const;

  /// C(r + k, k), the number of compositions of r into k + 1 parts.
  Index cumulative(int k, int r) const {
    return table_[static_cast<std::size_t>(k) * stride_ + static_cast<std::size_t>(r)];
  }

 private:
  void rebuild(int degree);

  int parts_;
  int max_degree_ = -1;
  std::size_t stride_ = 0;
  std::vector<Index> table_;
};

}  // namespace popbp::lattice
