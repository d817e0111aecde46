#pragma once

#include <cstdint>
#include <ostream>

#include "qstab/limit_value.hpp"
#include "qstab/rng.hpp"

namespace qstab {

// Two-state Markov packet-erasure channel (Gilbert-Elliott model) with
// acknowledgment. State gamma = 1 means the packet got through.
//
//   P(fail | previous success) = p,      P(success | previous success) = 1 - p
//   P(success | previous fail) = q,      P(fail | previous fail)       = 1 - q
//
// The chain starts in the good state (the first transmission succeeds).
// p = 0 and q = 1 are accepted as lossless / instant-recovery degenerate
// cases; ergodicity needs p, q in (0, 1).
class GilbertElliott {
 public:
  GilbertElliott(double p_fail, double q_recover, std::uint64_t seed);

  double p_fail() const { return p_; }
  double q_recover() const { return q_; }
  int state() const { return state_; }

  // One Markov transition; returns the new state.
  int step() {
    const double x = rng_.next_unit();
    state_ = state_ == 1 ? (x < p_ ? 0 : 1) : (x < q_ ? 1 : 0);
    return state_;
  }

  GilbertElliott clone_with_seed(std::uint64_t seed) const {
    return GilbertElliott(p_, q_, seed);
  }

  // P(tau = i), the law of the gap between consecutive successful arrivals:
  // 1-p for i = 1, p q (1-q)^{i-2} for i > 1.
  double sojourn_pmf(int i) const;

  // "k,gamma" per line for `steps` transitions, simulated on a copy.
  void trace_csv(std::ostream& os, long steps) const;

 private:
  double p_;
  double q_;
  int state_ = 1;
  CounterRng rng_;
};

// Channel-quality factor nu with nu^2 = E[growth^(2(tau-1))] for the sojourn
// law above; requires growth > 1. Divergent when (1-q) growth^2 >= 1, in
// which case no data rate stabilizes the loop.
LimitValue nu(double p_fail, double q_recover, double growth);

}  // namespace qstab
