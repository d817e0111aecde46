#include "qstab/plant.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qstab {

Interval ARUncertainty::a_interval(int i) const {
  if (i < 1 || i > order()) throw std::out_of_range("a_interval: index out of range");
  return {a_star[i - 1] - eps[i - 1], a_star[i - 1] + eps[i - 1]};
}

ScalarUncertainty ARUncertainty::scalar() const {
  if (order() != 1) throw std::logic_error("scalar(): plant order is not 1");
  return {a_star[0], eps[0], b_star, delta};
}

ARUncertainty ARUncertainty::from_scalar(const ScalarUncertainty& u) {
  return {{u.a_star}, {u.eps}, u.b_star, u.delta};
}

void ARUncertainty::validate() const {
  if (order() < 1) throw std::invalid_argument("plant: order must be >= 1");
  if (eps.size() != a_star.size())
    throw std::invalid_argument("plant: a_star and eps must have equal length");
  for (double e : eps)
    if (!(e >= 0.0)) throw std::invalid_argument("plant: eps must be >= 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("plant: delta must be >= 0");
  if (!(std::abs(b_star) - delta > 0.0))
    throw std::invalid_argument("plant: need |b*| - delta > 0");
  if (order() == 1) scalar().validate();
}

PerturbationMode perturbation_mode_from_string(const std::string& name) {
  if (name == "nominal") return PerturbationMode::nominal;
  if (name == "uniform-random") return PerturbationMode::uniform_random;
  if (name == "endpoint-random") return PerturbationMode::endpoint_random;
  if (name == "greedy-adversarial") return PerturbationMode::greedy_adversarial;
  throw std::invalid_argument("unknown perturbation policy: " + name);
}

const char* to_string(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::nominal: return "nominal";
    case PerturbationMode::uniform_random: return "uniform-random";
    case PerturbationMode::endpoint_random: return "endpoint-random";
    case PerturbationMode::greedy_adversarial: return "greedy-adversarial";
  }
  return "?";
}

double step_plant(std::span<const double> history, double input, const DrawnParams& params) {
  if (history.size() != params.a.size())
    throw std::invalid_argument("step_plant: history length must equal plant order");
  double y = params.b * input;
  for (std::size_t i = 0; i < params.a.size(); ++i) y += params.a[i] * history[i];
  return y;
}

DrawnParams draw_params(PerturbationMode mode, const ARUncertainty& u,
                        std::span<const double> history, double input, CounterRng& rng) {
  const int n = u.order();
  DrawnParams out;
  out.a.resize(n);
  switch (mode) {
    case PerturbationMode::nominal:
      out.a = u.a_star;
      out.b = u.b_star;
      break;
    case PerturbationMode::uniform_random:
      for (int i = 0; i < n; ++i)
        out.a[i] = rng.next_range(u.a_star[i] - u.eps[i], u.a_star[i] + u.eps[i]);
      out.b = rng.next_range(u.b_star - u.delta, u.b_star + u.delta);
      break;
    case PerturbationMode::endpoint_random:
      for (int i = 0; i < n; ++i)
        out.a[i] = u.a_star[i] + (rng.bernoulli(0.5) ? u.eps[i] : -u.eps[i]);
      out.b = u.b_star + (rng.bernoulli(0.5) ? u.delta : -u.delta);
      break;
    case PerturbationMode::greedy_adversarial: {
      // Terms are independent, so the endpoint combination maximizing the
      // signed sum (and the one minimizing it) can be picked per term; the
      // adversary takes whichever extreme has larger magnitude.
      if (history.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("draw_params: history length must equal plant order");
      DrawnParams hi_combo, lo_combo;
      hi_combo.a.resize(n);
      lo_combo.a.resize(n);
      double hi_sum = 0.0, lo_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double up = u.a_star[i] + u.eps[i], down = u.a_star[i] - u.eps[i];
        hi_combo.a[i] = history[i] >= 0.0 ? up : down;
        lo_combo.a[i] = history[i] >= 0.0 ? down : up;
        hi_sum += hi_combo.a[i] * history[i];
        lo_sum += lo_combo.a[i] * history[i];
      }
      hi_combo.b = input >= 0.0 ? u.b_star + u.delta : u.b_star - u.delta;
      lo_combo.b = input >= 0.0 ? u.b_star - u.delta : u.b_star + u.delta;
      hi_sum += hi_combo.b * input;
      lo_sum += lo_combo.b * input;
      out = std::abs(hi_sum) >= std::abs(lo_sum) ? hi_combo : lo_combo;
      break;
    }
  }
  for (int i = 0; i < n; ++i)
    assert(contains(u.a_interval(i + 1), out.a[i]));
  assert(contains(u.b_interval(), out.b));
  return out;
}

Plant::Plant(ARUncertainty u, PerturbationMode mode, std::vector<double> initial_outputs,
             std::uint64_t seed, bool keep_audit)
    : unc_(std::move(u)),
      mode_(mode),
      history_(std::move(initial_outputs)),
      rng_(seed),
      keep_audit_(keep_audit) {
  unc_.validate();
  if (history_.size() != static_cast<std::size_t>(unc_.order()))
    throw std::invalid_argument("plant: need exactly n initial outputs");
}

double Plant::step(double input) {
  last_draw_ = draw_params(mode_, unc_, history_, input, rng_);
  if (keep_audit_) audit_.push_back(last_draw_);
  const double next = step_plant(history_, input, last_draw_);
  for (std::size_t i = history_.size() - 1; i > 0; --i) history_[i] = history_[i - 1];
  history_[0] = next;
  return next;
}

}  // namespace qstab
