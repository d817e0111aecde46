#include "qstab/loop.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "qstab/errors.hpp"

namespace qstab {

namespace {
constexpr double kSigmaFloor = 1e-300;  // below this a trial counts as converged
constexpr double kEdgeSlack = 1e-12;
}  // namespace

double expansion_rate_at(const Quantizer& q, const ScalarUncertainty& u, int l);

Interval predict(std::span<const Interval> estimates, const ARUncertainty& u) {
  if (estimates.size() != static_cast<std::size_t>(u.order()))
    throw std::invalid_argument("predict: need exactly n estimates");
  Interval sum{0.0, 0.0};
  for (int i = 1; i <= u.order(); ++i)
    sum = minkowski_sum(sum, mul(u.a_interval(i), estimates[i - 1]));
  return sum;
}

double scale_update(const Interval& prediction, const ARUncertainty& u) {
  return width(prediction) +
         2.0 * u.delta / std::abs(u.b_star) * std::abs(midpoint(prediction));
}

double control(const Interval& prediction, double b_star) {
  if (b_star == 0.0) throw std::invalid_argument("control: b_star must be nonzero");
  return -midpoint(prediction) / b_star;
}

double eta(int gamma, std::optional<int> cell, const Quantizer& q, const ScalarUncertainty& u) {
  if ((gamma == 1) != cell.has_value())
    throw std::invalid_argument("eta: cell must be present exactly when gamma = 1");
  if (gamma == 0) return u.growth();
  return expansion_rate_at(q, u, q.expansion_index(*cell));
}

Codec::Codec(ARUncertainty u, Quantizer q, std::span<const Interval> initial_estimates)
    : unc_(std::move(u)), quant_(std::move(q)) {
  unc_.validate();
  if (initial_estimates.size() != static_cast<std::size_t>(unc_.order()))
    throw std::invalid_argument("codec: need exactly n initial estimates");
  // Oldest-first input, newest-first storage.
  estimates_.assign(initial_estimates.rbegin(), initial_estimates.rend());
  for (const Interval& y : estimates_)
    if (!(width(y) > 0.0))
      throw std::invalid_argument("codec: initial intervals must have positive width");
  sigma_ = 2.0 * sup_abs(estimates_.front());
}

void Codec::absorb(int gamma, int cell) {
  if (gamma == 1) {
    const Interval c = quant_.cell_interval(cell);
    estimates_.front() = {c.lo * sigma_, c.hi * sigma_};
  } else {
    estimates_.front() = Interval::symmetric(0.5 * sigma_);
  }
}

double Codec::advance() {
  prediction_ = predict(estimates_, unc_);
  input_ = control(prediction_, unc_.b_star);
  sigma_ = scale_update(prediction_, unc_);
  for (std::size_t i = estimates_.size() - 1; i > 0; --i) estimates_[i] = estimates_[i - 1];
  estimates_.front() = Interval::symmetric(0.5 * sigma_);
  return input_;
}

LoopConfig LoopConfig::scalar(const ScalarUncertainty& u, Quantizer q, PerturbationMode policy,
                              Interval y0) {
  LoopConfig cfg;
  cfg.uncertainty = ARUncertainty::from_scalar(u);
  cfg.quantizer = std::move(q);
  cfg.policy = policy;
  cfg.initial_intervals = {y0};
  return cfg;
}

void LoopConfig::validate() const {
  uncertainty.validate();
  const auto n = static_cast<std::size_t>(uncertainty.order());
  if (initial_intervals.size() != n)
    throw std::invalid_argument("loop: need exactly n initial intervals");
  for (const Interval& y : initial_intervals)
    if (!(width(y) > 0.0) || !std::isfinite(width(y)))
      throw std::invalid_argument("loop: initial intervals must have positive finite width");
  if (!initial_outputs.empty()) {
    if (initial_outputs.size() != n)
      throw std::invalid_argument("loop: initial outputs must match plant order");
    for (std::size_t i = 0; i < n; ++i)
      if (!contains(initial_intervals[i], initial_outputs[i]))
        throw std::invalid_argument("loop: initial output outside its interval");
  }
}

namespace {

std::vector<double> initial_history(const LoopConfig& cfg) {
  // Newest first for the plant.
  std::vector<double> h;
  if (cfg.initial_outputs.empty()) {
    for (auto it = cfg.initial_intervals.rbegin(); it != cfg.initial_intervals.rend(); ++it)
      h.push_back(midpoint(*it));
  } else {
    h.assign(cfg.initial_outputs.rbegin(), cfg.initial_outputs.rend());
  }
  return h;
}

}  // namespace

ClosedLoop::ClosedLoop(LoopConfig cfg, double p_fail, double q_recover,
                       std::uint64_t channel_seed, std::uint64_t plant_seed)
    : cfg_(cfg),
      plant_(cfg.uncertainty, cfg.policy, initial_history(cfg), plant_seed),
      channel_(p_fail, q_recover, channel_seed),
      encoder_(cfg.uncertainty, cfg.quantizer, cfg.initial_intervals),
      decoder_(cfg.uncertainty, cfg.quantizer, cfg.initial_intervals) {
  cfg_.validate();
}

StepRecord ClosedLoop::step() {
  if (converged_) return last_;

  StepRecord r;
  r.k = k_;
  r.sigma = encoder_.sigma();
  r.y = plant_.output();
  r.cell = cfg_.quantizer.quantize(r.y / r.sigma);
  // gamma_0 is the channel's initial (good) state; transitions start at k=1.
  r.gamma = k_ == 0 ? channel_.state() : channel_.step();

  encoder_.absorb(r.gamma, r.cell);
  decoder_.absorb(r.gamma, r.gamma == 1 ? r.cell : 0);
  r.estimate = decoder_.newest_estimate();
  if (cfg_.uncertainty.order() == 1) {
    r.eta = eta(r.gamma, r.gamma == 1 ? std::optional<int>(r.cell) : std::nullopt,
                cfg_.quantizer, cfg_.uncertainty.scalar());
  }

  const double u_enc = encoder_.advance();
  r.u = decoder_.advance();
  assert(u_enc == r.u);
  (void)u_enc;

  const double y_next = plant_.step(r.u);
  if (std::abs(y_next) > encoder_.sigma() * (0.5 + kEdgeSlack))
    throw saturation_error("closed loop: |y_{k+1}| exceeds sigma_{k+1}/2");
  if (encoder_.sigma() < kSigmaFloor) converged_ = true;

  ++k_;
  last_ = r;
  return r;
}

void ClosedLoop::write_csv_header(std::ostream& os) {
  os << "k,gamma,sigma,y,u,cell_index,Y_lo,Y_hi\n";
}

void ClosedLoop::write_csv_row(std::ostream& os, const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%d,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", r.k, r.gamma,
                r.sigma, r.y, r.u, r.cell, r.estimate.lo, r.estimate.hi);
  os << buf;
}

}  // namespace qstab
