#include "qstab/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace qstab {

GilbertElliott::GilbertElliott(double p_fail, double q_recover, std::uint64_t seed)
    : p_(p_fail), q_(q_recover), rng_(seed) {
  if (!(p_ >= 0.0 && p_ < 1.0))
    throw std::invalid_argument("channel: failure probability must be in [0, 1)");
  if (!(q_ > 0.0 && q_ <= 1.0))
    throw std::invalid_argument("channel: recovery probability must be in (0, 1]");
}

double GilbertElliott::sojourn_pmf(int i) const {
  if (i < 1) throw std::invalid_argument("sojourn_pmf: i must be >= 1");
  if (i == 1) return 1.0 - p_;
  return p_ * q_ * std::pow(1.0 - q_, i - 2);
}

void GilbertElliott::trace_csv(std::ostream& os, long steps) const {
  GilbertElliott ch = *this;
  os << "k,gamma\n";
  for (long k = 0; k < steps; ++k) os << k << ',' << ch.step() << '\n';
}

LimitValue nu(double p_fail, double q_recover, double growth) {
  if (!(growth > 1.0)) throw std::invalid_argument("nu: growth factor must exceed 1");
  if (!(p_fail >= 0.0 && p_fail < 1.0) || !(q_recover > 0.0 && q_recover <= 1.0))
    throw std::invalid_argument("nu: invalid channel probabilities");
  const double tail = (1.0 - q_recover) * growth * growth;
  if (tail >= 1.0) return LimitValue::divergent();
  const double nu_sq = 1.0 + p_fail * (growth * growth - 1.0) / (1.0 - tail);
  return LimitValue::finite(std::sqrt(nu_sq));
}

}  // namespace qstab
