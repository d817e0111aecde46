#pragma once

#include <stdexcept>
#include <string>

namespace qstab {

// Quantizer input left [-1/2, 1/2]: the scaling invariant was violated
// somewhere upstream, so the closed loop cannot continue.
struct saturation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative routine ran out of iterations; carries the best estimate so the
// caller can report it.
struct convergence_error : std::runtime_error {
  convergence_error(const std::string& what, double best, double residual)
      : std::runtime_error(what), best_estimate(best), residual(residual) {}
  double best_estimate;
  double residual;
};

}  // namespace qstab
