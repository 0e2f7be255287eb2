#pragma once

#include <cmath>

namespace popbp {

/// Neumaier's variant of Kahan summation. The result depends only on the
/// order in which terms are added.
template <typename Real>
class CompensatedSum {
 public:
  void add(Real x) {
    Real t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  /// Folds another partial in, keeping its compensation term.
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  Real value() const { return sum_ + comp_; }

 private:
  Real sum_{0};
  Real comp_{0};
};

}  // namespace popbp
