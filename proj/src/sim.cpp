#include "qstab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "qstab/errors.hpp"

namespace qstab {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::mss_evidence: return "mss-evidence";
    case Verdict::divergence_evidence: return "divergence-evidence";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  loop.validate();
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (horizon < loop.uncertainty.order())
    throw std::invalid_argument("experiment: horizon must be >= plant order");
}

namespace {

int default_thread_count() {
  if (const char* env = std::getenv("QSTAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 16u));
}

// ln of the mean of exp(x_t) across trials at one index.
double log_mean_exp(const std::vector<std::vector<double>>& rows, std::size_t index,
                    std::size_t count) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < count; ++t) m = std::max(m, rows[t][index]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t t = 0; t < count; ++t) s += std::exp(rows[t][index] - m);
  return m + std::log(s / static_cast<double>(count));
}

// Least-squares slope of y over [k0, k1).
double fit_slope(const std::vector<double>& y, std::size_t k0, std::size_t k1) {
  k1 = std::min(k1, y.size());
  if (k1 <= k0 + 1) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t k = k0; k < k1; ++k) {
    if (!std::isfinite(y[k])) continue;
    sx += static_cast<double>(k);
    sy += y[k];
    sxx += static_cast<double>(k) * k;
    sxy += static_cast<double>(k) * y[k];
    ++cnt;
  }
  if (cnt < 2) return 0.0;
  const double det = cnt * sxx - sx * sx;
  return det == 0.0 ? 0.0 : (cnt * sxy - sx * sy) / det;
}

double fit_tail_slope(const std::vector<double>& y) { return fit_slope(y, y.size() / 2, y.size()); }

}  // namespace

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  const int trials = cfg.trials;
  const int horizon = cfg.horizon;

  std::vector<std::vector<double>> log_sigma(trials), log_supy(trials), log_arrival(trials);
  std::atomic<int> converged_count{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&](int t_begin, int t_end) {
    for (int t = t_begin; t < t_end; ++t) {
      try {
        ClosedLoop loop(cfg.loop, cfg.p_fail, cfg.q_recover,
                        CounterRng::derive(cfg.seed, 2 * static_cast<std::uint64_t>(t)),
                        CounterRng::derive(cfg.seed, 2 * static_cast<std::uint64_t>(t) + 1));
        auto& lsig = log_sigma[t];
        auto& lsup = log_supy[t];
        auto& larr = log_arrival[t];
        lsig.resize(horizon + 1);
        lsup.resize(horizon);
        lsig[0] = std::log(loop.encoder().sigma());
        for (int k = 0; k < horizon; ++k) {
          const StepRecord r = loop.step();
          lsup[k] = std::log(sup_abs(r.estimate));
          lsig[k + 1] = std::log(loop.encoder().sigma());
          if (r.gamma == 1) larr.push_back(std::log(r.sigma));
        }
        if (loop.converged()) converged_count.fetch_add(1, std::memory_order_relaxed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          try {
            std::throw_with_nested(
                std::runtime_error("ensemble trial " + std::to_string(t) + " aborted"));
          } catch (...) {
            failure = std::current_exception();
          }
        }
        return;
      }
    }
  };

  const int nthreads =
      std::max(1, std::min(cfg.threads > 0 ? cfg.threads : default_thread_count(), trials));
  if (nthreads == 1) {
    worker(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (trials + nthreads - 1) / nthreads;
    for (int i = 0; i < nthreads; ++i)
      pool.emplace_back(worker, i * chunk, std::min(trials, (i + 1) * chunk));
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult out;
  out.converged_trials = converged_count.load();
  out.log_mean_sigma_sq.resize(horizon + 1);
  out.log_mean_sup_y_sq.resize(horizon);
  // Second moments: 2 ln x inside the mean.
  for (auto* series : {&log_sigma, &log_supy, &log_arrival})
    for (auto& row : *series)
      for (double& v : row) v *= 2.0;
  for (int k = 0; k <= horizon; ++k)
    out.log_mean_sigma_sq[k] = log_mean_exp(log_sigma, k, trials);
  for (int k = 0; k < horizon; ++k)
    out.log_mean_sup_y_sq[k] = log_mean_exp(log_supy, k, trials);

  std::size_t common_arrivals = log_arrival.empty() ? 0 : log_arrival[0].size();
  for (const auto& row : log_arrival) common_arrivals = std::min(common_arrivals, row.size());
  out.log_mean_sigma_sq_at_arrival.resize(common_arrivals);
  for (std::size_t j = 0; j < common_arrivals; ++j)
    out.log_mean_sigma_sq_at_arrival[j] = log_mean_exp(log_arrival, j, trials);

  out.fitted_step_rate = fit_tail_slope(out.log_mean_sigma_sq);
  out.fitted_arrival_rate =
      fit_slope(out.log_mean_sigma_sq_at_arrival, 0,
                static_cast<std::size_t>(std::max(2, cfg.arrival_fit_count)));
  out.verdict = out.fitted_step_rate <= -cfg.rate_dead_band  ? Verdict::mss_evidence
                : out.fitted_step_rate >= cfg.rate_dead_band ? Verdict::divergence_evidence
                                                             : Verdict::inconclusive;
  return out;
}

void write_ensemble_csv(const EnsembleResult& r, std::ostream& os) {
  os << "k,mean_sigma_sq,mean_supy_sq\n";
  char buf[128];
  for (std::size_t k = 0; k < r.log_mean_sup_y_sq.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, std::exp(r.log_mean_sigma_sq[k]),
                  std::exp(r.log_mean_sup_y_sq[k]));
    os << buf;
  }
}

std::string ensemble_summary_json(const ExperimentConfig& cfg, const EnsembleResult& r) {
  nlohmann::json j;
  j["trials"] = cfg.trials;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["verdict"] = to_string(r.verdict);
  j["fitted_step_rate"] = r.fitted_step_rate;
  j["fitted_arrival_rate"] = r.fitted_arrival_rate;
  j["converged_trials"] = r.converged_trials;
  j["final_log_mean_sigma_sq"] = r.log_mean_sigma_sq.back();
  return j.dump(2);
}

namespace {

void apply_axis(ScalarUncertainty& u, double& p, double& q, int& n_cells,
                const SweepAxis& axis, int i) {
  const double v = axis.at(i);
  if (axis.name == "eps") {
    u.eps = v;
  } else if (axis.name == "delta") {
    u.delta = v;
  } else if (axis.name == "p") {
    p = v;
  } else if (axis.name == "q") {
    q = v;
  } else if (axis.name == "n_cells") {
    n_cells = static_cast<int>(std::lround(v));
  } else {
    throw std::invalid_argument("sweep: unknown axis '" + axis.name + "'");
  }
}

}  // namespace

std::vector<SweepRow> sweep(const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  const int steps2 = cfg.axis2 ? cfg.axis2->steps : 1;
  for (int i = 0; i < cfg.axis1.steps; ++i) {
    for (int j = 0; j < steps2; ++j) {
      ScalarUncertainty u = cfg.base;
      double p = cfg.p_fail, q = cfg.q_recover;
      int n_cells = cfg.n_cells;
      apply_axis(u, p, q, n_cells, cfg.axis1, i);
      if (cfg.axis2) apply_axis(u, p, q, n_cells, *cfg.axis2, j);

      SweepRow row{u.eps, u.delta, p, q, n_cells, compute_limits(u, p, q), {}, {}};
      if (cfg.run_mc) {
        ExperimentConfig mc;
        mc.loop = LoopConfig::scalar(u, Quantizer::optimal(n_cells, u), cfg.policy);
        mc.p_fail = p;
        mc.q_recover = q;
        mc.trials = cfg.mc_trials;
        mc.horizon = cfg.mc_horizon;
        mc.seed = CounterRng::derive(cfg.seed, rows.size());
        const EnsembleResult r = run_ensemble(mc);
        row.mc_verdict = r.verdict;
        row.mc_rate = r.fitted_step_rate;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep_csv(const SweepConfig& cfg, const std::vector<SweepRow>& rows,
                     std::ostream& os) {
  const bool channel_axes =
      cfg.axis1.name == "p" || cfg.axis1.name == "q" || cfg.axis1.name == "n_cells" ||
      (cfg.axis2 && (cfg.axis2->name == "p" || cfg.axis2->name == "q" ||
                     cfg.axis2->name == "n_cells"));
  os << "eps,delta";
  if (channel_axes) os << ",p,q,n_cells";
  os << ",R_nec,q_nec,delta_ok";
  if (cfg.run_mc) os << ",mc_verdict,mc_rate";
  os << '\n';

  char buf[128];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.eps, r.delta);
    os << buf;
    if (channel_axes) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d", r.p, r.q, r.n_cells);
      os << buf;
    }
    auto put = [&](const LimitValue& v) {
      if (v.is_finite()) {
        std::snprintf(buf, sizeof buf, ",%.17g", v.value());
        os << buf;
      } else {
        os << ",inf";
      }
    };
    put(r.limits.r_nec);
    put(r.limits.q_nec);
    os << ',' << (r.limits.delta_ok ? 1 : 0);
    if (r.mc_verdict) {
      std::snprintf(buf, sizeof buf, ",%s,%.17g", to_string(*r.mc_verdict), *r.mc_rate);
      os << buf;
    } else if (cfg.run_mc) {
      os << ",,";
    }
    os << '\n';
  }
}

}  // namespace qstab
