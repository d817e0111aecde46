#pragma once

#include "qstab/limit_value.hpp"
#include "qstab/quantizer.hpp"

namespace qstab {

// Closed-form stabilizability limits for the scalar plant over the
// Gilbert-Elliott channel. All rates are in bits (log base 2).
struct ScalarLimits {
  double r_a = 0.0;          // (|a*|-eps)/(|a*|+eps)
  double r_b = 0.0;          // (|b*|-delta)/(|b*|+delta)
  double delta_total = 0.0;  // eps + delta |a*|/|b*|
  bool delta_ok = false;     // delta_total < 1
  LimitValue nu = LimitValue::divergent();
  LimitValue r_nec = LimitValue::infinite();        // required data rate, bits
  LimitValue q_nec = LimitValue::infinite();        // required recovery probability
  LimitValue n_nec_even = LimitValue::infinite();   // symbol-count bound, even N
  LimitValue n_nec_odd = LimitValue::infinite();    // symbol-count bound, odd N
};

// p in [0,1), q in (0,1]; p = 0 / q = 1 are the lossless / instant-recovery
// degenerate cases (nu = 1, classical rate limit recovered).
ScalarLimits compute_limits(const ScalarUncertainty& u, double p_fail, double q_recover);

// Symbol-count bound N_nec for the requested parity. Throws
// std::domain_error when the regime is undefined (nu divergent or
// delta_total * nu >= 1).
double n_nec(const ScalarUncertainty& u, double p_fail, double q_recover, bool odd_parity);

// Smallest even N with N > n_nec_even (the rate the sufficiency construction
// uses). Throws std::domain_error when the limit is not finite.
int minimal_even_symbols(const ScalarLimits& limits);

// Sufficient-rate bounds from the earlier lossless-channel literature,
// delta = 0 only; for comparison against r_nec.
struct ComparisonBounds {
  LimitValue r_suf;        // infinite when the denominator is nonpositive
  LimitValue r_suf_prime;  // log2(|a*| / (1 - eps)); infinite when eps >= 1
};
ComparisonBounds comparison_bounds(const ScalarUncertainty& u);

}  // namespace qstab
