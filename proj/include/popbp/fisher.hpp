#pragma once

#include <string>

#include "popbp/model.hpp"

namespace popbp::fisher {

enum class Termination { Converged, SliceCap };

std::string to_string(Termination t);

struct TerminationPolicy {
  /// Hard cap on the number of slices evaluated.
  int smax = 100000;
  /// Stop once this many consecutive slices leave the total unchanged.
  int consecutive = 2;
  /// Parallel workers per slice. The result does not depend on this.
  int workers = 1;
};

struct FisherResult {
  double value = 0.0;
  /// Number of slices added (degrees 0 .. slices_used - 1).
  int slices_used = 0;
  double last_slice_value = 0.0;
  Termination terminated = Termination::Converged;
};

/// Fisher information for lambda from binomially thinned observations at
/// the schedule's times, summed slice by slice over observation vectors of
/// growing total count. p = 1 returns the fully observed closed form (tied
/// times merged) and p = 0 returns 0. Real selects the working precision.
///
/// Throws NumericalError if a slice produces a non-finite value.
template <typename Real = double>
FisherResult fisher_info(const ObservationSchedule& schedule, const ModelParams& params,
                         const TerminationPolicy& policy = {});

/// Closed-form approximation of the two-observation Fisher information.
/// Removable singularities at t1 = t2, t1 = 0 and t2 = 0 are replaced by
/// their limits below a threshold of 1e-9. Requires 0 <= t1 <= t2 and
/// 0 < p <= 1.
double fisher_info_approx_n2(double t1, double t2, double lambda, double p);

}  // namespace popbp::fisher
