#pragma once

#include <span>
#include <string>
#include <vector>

#include "qstab/interval.hpp"
#include "qstab/quantizer.hpp"
#include "qstab/rng.hpp"

namespace qstab {

// Interval uncertainty of the order-n autoregressive plant
//   y_{k+1} = a_{1,k} y_k + ... + a_{n,k} y_{k-n+1} + b_k u_k,
// a_{i,k} in [a_star[i] - eps[i], a_star[i] + eps[i]], b_k in
// [b_star - delta, b_star + delta].
struct ARUncertainty {
  std::vector<double> a_star;
  std::vector<double> eps;
  double b_star = 1.0;
  double delta = 0.0;

  int order() const { return static_cast<int>(a_star.size()); }
  Interval a_interval(int i) const;  // i = 1..n
  Interval b_interval() const { return {b_star - delta, b_star + delta}; }

  ScalarUncertainty scalar() const;  // order() == 1 only
  static ARUncertainty from_scalar(const ScalarUncertainty& u);

  void validate() const;  // throws std::invalid_argument
};

// How the time-varying parameters are drawn inside their intervals.
// greedy_adversarial picks, among the 2^(n+1) interval endpoints, the
// combination maximizing |y_{k+1}| for the current history and input; it is
// the strongest built-in policy but still a heuristic lower bound on the
// true worst case over full perturbation sequences.
enum class PerturbationMode { nominal, uniform_random, endpoint_random, greedy_adversarial };

PerturbationMode perturbation_mode_from_string(const std::string& name);
const char* to_string(PerturbationMode mode);

struct DrawnParams {
  std::vector<double> a;
  double b = 0.0;
};

// One plant transition with explicit parameters; history is newest-first
// (history[0] = y_k, history[n-1] = y_{k-n+1}).
double step_plant(std::span<const double> history, double input, const DrawnParams& params);

DrawnParams draw_params(PerturbationMode mode, const ARUncertainty& u,
                        std::span<const double> history, double input, CounterRng& rng);

class Plant {
 public:
  Plant(ARUncertainty u, PerturbationMode mode, std::vector<double> initial_outputs,
        std::uint64_t seed, bool keep_audit = false);

  const ARUncertainty& uncertainty() const { return unc_; }
  double output() const { return history_.front(); }               // y_k
  std::span<const double> history() const { return history_; }     // newest first

  // Draws parameters by policy, advances one step, returns y_{k+1}.
  double step(double input);

  const DrawnParams& last_draw() const { return last_draw_; }
  const std::vector<DrawnParams>& audit_trail() const { return audit_; }

 private:
  ARUncertainty unc_;
  PerturbationMode mode_;
  std::vector<double> history_;
  CounterRng rng_;
  DrawnParams last_draw_;
  bool keep_audit_;
  std::vector<DrawnParams> audit_;
};

}  // namespace qstab
