#include "qstab/limits.hpp"

#include <cmath>
#include <stdexcept>

#include "qstab/channel.hpp"

namespace qstab {

namespace {
double log2d(double x) { return std::log2(x); }
}  // namespace

ScalarLimits compute_limits(const ScalarUncertainty& u, double p_fail, double q_recover) {
  u.validate();
  ScalarLimits out;
  out.r_a = u.ratio_a();
  out.r_b = u.ratio_b();
  out.delta_total = u.delta_total();
  out.delta_ok = out.delta_total < 1.0;
  out.nu = nu(p_fail, q_recover, u.growth());

  if (!out.nu.is_finite()) return out;  // everything else stays unattainable
  const double nu_val = out.nu.value();

  // Required recovery probability: the q that makes delta_total * nu hit 1.
  const double inv_g2 = 1.0 / (u.growth() * u.growth());
  if (out.delta_ok) {
    out.q_nec = LimitValue::finite(
        1.0 - inv_g2 +
        out.delta_total * out.delta_total * p_fail * (1.0 - inv_g2) /
            (1.0 - out.delta_total * out.delta_total));
  }

  const double margin = 1.0 - out.delta_total * nu_val;
  if (!(margin > 0.0)) return out;  // rate bounds infinite

  if (u.exact()) {
    const double n_even = std::abs(u.a_star) * nu_val;
    out.n_nec_even = LimitValue::finite(n_even);
    out.n_nec_odd = LimitValue::finite(n_even);
    out.r_nec = LimitValue::finite(log2d(std::abs(u.a_star)) + log2d(nu_val));
  } else {
    const double log_r = log2d(out.r_a * out.r_b);
    const double t = (1.0 + u.delta / std::abs(u.b_star)) / (1.0 - u.eps / std::abs(u.a_star));
    out.n_nec_even = LimitValue::finite(2.0 * log2d(margin) / log_r);
    out.n_nec_odd = LimitValue::finite(2.0 * (log2d(margin) - log2d(t)) / log_r - 1.0);
    out.r_nec = LimitValue::finite(log2d(out.n_nec_even.value()));
  }
  return out;
}

double n_nec(const ScalarUncertainty& u, double p_fail, double q_recover, bool odd_parity) {
  const ScalarLimits lim = compute_limits(u, p_fail, q_recover);
  const LimitValue& n = odd_parity ? lim.n_nec_odd : lim.n_nec_even;
  if (!n.is_finite())
    throw std::domain_error("n_nec: undefined regime (nu divergent or delta_total * nu >= 1)");
  return n.value();
}

int minimal_even_symbols(const ScalarLimits& limits) {
  if (!limits.n_nec_even.is_finite())
    throw std::domain_error("minimal_even_symbols: symbol bound is not finite");
  const double bound = limits.n_nec_even.value();
  int n = 2;
  while (!(n > bound)) n += 2;
  return n;
}

ComparisonBounds comparison_bounds(const ScalarUncertainty& u) {
  u.validate();
  if (u.delta != 0.0)
    throw std::invalid_argument("comparison_bounds: defined for delta = 0 only");
  const double a = std::abs(u.a_star);
  ComparisonBounds out{LimitValue::infinite(), LimitValue::infinite()};
  if (u.eps < 1.0) out.r_suf_prime = LimitValue::finite(log2d(a / (1.0 - u.eps)));
  const double den = 1.0 - u.eps * (2.0 * a + 2.0 * u.eps + 1.0);
  if (den > 0.0) out.r_suf = LimitValue::finite(log2d((a - u.eps * (a + u.eps)) / den));
  return out;
}

}  // namespace qstab
