#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qstab/limits.hpp"
#include "qstab/loop.hpp"

namespace qstab {

enum class Verdict { mss_evidence, divergence_evidence, inconclusive };
const char* to_string(Verdict v);

struct ExperimentConfig {
  LoopConfig loop;
  double p_fail = 0.05;
  double q_recover = 0.9;
  int trials = 1000;
  int horizon = 200;
  std::uint64_t seed = 0;
  // Dead band on the fitted per-step rate of ln E[sigma^2]; verdicts inside
  // it are inconclusive rather than guessed.
  double rate_dead_band = 0.01;
  // The per-arrival rate is fitted over the first few arrivals only: the
  // sample mean of a product of heavy-tailed factors is unusable deep into
  // the series (its relative variance grows geometrically in j).
  int arrival_fit_count = 20;
  int threads = 0;  // 0 = QSTAB_THREADS env or hardware count

  void validate() const;
};

// Ensemble second moments are aggregated in log domain, so divergent runs
// cannot overflow the means.
struct EnsembleResult {
  std::vector<double> log_mean_sigma_sq;    // index k = 0..horizon
  std::vector<double> log_mean_sup_y_sq;    // index k = 0..horizon-1
  std::vector<double> log_mean_sigma_sq_at_arrival;  // index j = arrival count
  double fitted_step_rate = 0.0;     // d/dk ln E[sigma_k^2]
  double fitted_arrival_rate = 0.0;  // d/dj ln E[sigma_{t_j}^2]
  Verdict verdict = Verdict::inconclusive;
  int converged_trials = 0;  // trials stopped at the sigma underflow floor

  double mean_sigma_sq(int k) const { return std::exp(log_mean_sigma_sq.at(k)); }
};

EnsembleResult run_ensemble(const ExperimentConfig& cfg);

// "k,mean_sigma_sq,mean_supy_sq" rows, full precision.
void write_ensemble_csv(const EnsembleResult& r, std::ostream& os);
std::string ensemble_summary_json(const ExperimentConfig& cfg, const EnsembleResult& r);

// Sweep of the closed-form limits (optionally with Monte Carlo verdicts)
// over one or two axes of the scalar scenario.
struct SweepAxis {
  std::string name;  // eps | delta | p | q | n_cells
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;
  double at(int i) const { return steps > 1 ? lo + (hi - lo) * i / (steps - 1) : lo; }
};

struct SweepConfig {
  ScalarUncertainty base;
  double p_fail = 0.05;
  double q_recover = 0.9;
  int n_cells = 8;
  SweepAxis axis1;
  std::optional<SweepAxis> axis2;
  bool run_mc = false;
  int mc_trials = 1000;
  int mc_horizon = 200;
  std::uint64_t seed = 0;
  PerturbationMode policy = PerturbationMode::uniform_random;
};

struct SweepRow {
  double eps, delta, p, q;
  int n_cells;
  ScalarLimits limits;
  std::optional<Verdict> mc_verdict;
  std::optional<double> mc_rate;
};

std::vector<SweepRow> sweep(const SweepConfig& cfg);

// Plain grids print "eps,delta,R_nec,q_nec,delta_ok"; sweeps over channel or
// rate axes and MC runs append columns.
void write_sweep_csv(const SweepConfig& cfg, const std::vector<SweepRow>& rows, std::ostream& os);

}  // namespace qstab
