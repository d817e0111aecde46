#include "qstab/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "qstab/errors.hpp"

namespace qstab {

namespace {

// Rounding slack for inputs sitting numerically on +-1/2.
constexpr double kEdgeSlack = 1e-12;

void check_cells(int n_cells) {
  if (n_cells < 2) throw std::invalid_argument("quantizer: need at least 2 cells");
}

}  // namespace

void ScalarUncertainty::validate() const {
  if (!(eps >= 0.0)) throw std::invalid_argument("uncertainty: eps must be >= 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("uncertainty: delta must be >= 0");
  if (!(std::abs(a_star) - eps > 1.0))
    throw std::invalid_argument("uncertainty: need |a*| - eps > 1 (always-unstable plant)");
  if (!(std::abs(b_star) - delta > 0.0))
    throw std::invalid_argument("uncertainty: need |b*| - delta > 0 (sign-definite input)");
}

Quantizer::Quantizer(int n_cells, std::vector<double> boundaries)
    : n_cells_(n_cells), h_(std::move(boundaries)) {
  check_cells(n_cells);
  const int m = (n_cells + 1) / 2;
  if (static_cast<int>(h_.size()) != m + 1)
    throw std::invalid_argument("quantizer: expected ceil(N/2)+1 boundary points");
  if (h_.front() != 0.0) throw std::invalid_argument("quantizer: h_0 must be 0");
  if (std::abs(h_.back() - 0.5) > kEdgeSlack)
    throw std::invalid_argument("quantizer: h_m must be 1/2");
  h_.back() = 0.5;
  for (std::size_t i = 1; i < h_.size(); ++i)
    if (!(h_[i] > h_[i - 1]))
      throw std::invalid_argument("quantizer: boundaries must be strictly increasing");
}

Quantizer Quantizer::uniform(int n_cells) {
  check_cells(n_cells);
  const int m = (n_cells + 1) / 2;
  std::vector<double> h(m + 1);
  h[0] = 0.0;
  for (int l = 1; l <= m; ++l) {
    // Equal cell widths 1/N; odd N centers a cell on the origin.
    h[l] = n_cells % 2 == 0 ? static_cast<double>(l) / n_cells
                            : static_cast<double>(2 * l - 1) / (2 * n_cells);
  }
  h[m] = 0.5;
  return Quantizer(n_cells, std::move(h));
}

Quantizer Quantizer::optimal(int n_cells, const ScalarUncertainty& u) {
  check_cells(n_cells);
  u.validate();
  const int m = (n_cells + 1) / 2;
  const bool odd = n_cells % 2 != 0;
  std::vector<double> h(m + 1);
  h[0] = 0.0;
  if (u.exact()) {
    const double t_prime = odd ? 0.5 : 0.0;
    for (int l = 1; l < m; ++l) h[l] = 0.5 * (l - t_prime) / (m - t_prime);
  } else {
    const double r = u.ratio_a() * u.ratio_b();
    const double t = odd ? (1.0 + u.delta / std::abs(u.b_star)) / (1.0 - u.eps / std::abs(u.a_star))
                         : 1.0;
    const double denom = 1.0 - t * std::pow(r, m);
    double r_pow = 1.0;
    for (int l = 1; l < m; ++l) {
      r_pow *= r;
      h[l] = 0.5 * (1.0 - t * r_pow) / denom;
    }
  }
  h[m] = 0.5;
  return Quantizer(n_cells, std::move(h));
}

int Quantizer::quantize(double y_scaled) const {
  if (std::abs(y_scaled) > 0.5 + kEdgeSlack)
    throw saturation_error("quantizer input outside [-1/2, 1/2]: scaling invariant violated");
  if (y_scaled < 0.0) return -quantize(-y_scaled);
  const double y = std::min(y_scaled, 0.5);
  const int m = half_count();
  // j = largest boundary index with h_j <= y; a boundary point belongs to the
  // outward cell.
  int j = static_cast<int>(std::upper_bound(h_.begin(), h_.end(), y) - h_.begin()) - 1;
  if (odd()) {
    if (j <= 0) return 0;
    return std::min(j, m - 1);
  }
  return std::min(j + 1, m);
}

Interval Quantizer::cell_interval(int index) const {
  const int m = half_count();
  if (index == 0) {
    if (!odd()) throw std::out_of_range("quantizer: no center cell for even N");
    return {-h_[1], h_[1]};
  }
  const int l = std::abs(index);
  Interval cell;
  if (odd()) {
    if (l > m - 1) throw std::out_of_range("quantizer: cell index out of range");
    cell = {h_[l], h_[l + 1]};
  } else {
    if (l > m) throw std::out_of_range("quantizer: cell index out of range");
    cell = {h_[l - 1], h_[l]};
  }
  return index > 0 ? cell : Interval{-cell.hi, -cell.lo};
}

int Quantizer::expansion_index(int cell_index) const {
  cell_interval(cell_index);  // validates
  if (cell_index == 0) return 0;
  return odd() ? std::abs(cell_index) : std::abs(cell_index) - 1;
}

double expansion_rate_at(const Quantizer& q, const ScalarUncertainty& u, int l) {
  if (l < 0 || l >= q.half_count())
    throw std::out_of_range("expansion_rate_at: need 0 <= l < ceil(N/2)");
  const auto& h = q.boundaries();
  if (q.odd() && l == 0) return 2.0 * u.growth() * h[1];
  const double hi = u.growth() * (1.0 + u.delta / std::abs(u.b_star));
  const double lo = (std::abs(u.a_star) - u.eps) * (1.0 - u.delta / std::abs(u.b_star));
  return hi * h[l + 1] - lo * h[l];
}

std::vector<double> expansion_rates(const Quantizer& q, const ScalarUncertainty& u) {
  std::vector<double> w(q.half_count());
  for (int l = 0; l < q.half_count(); ++l) w[l] = expansion_rate_at(q, u, l);
  return w;
}

double worst_case_rate(const Quantizer& q, const ScalarUncertainty& u) {
  const auto w = expansion_rates(q, u);
  return *std::max_element(w.begin(), w.end());
}

double w_star(int n_cells, const ScalarUncertainty& u, int m, double h_m) {
  check_cells(n_cells);
  const int m_max = (n_cells + 1) / 2;
  if (m < 1 || m > m_max) throw std::invalid_argument("w_star: need 1 <= m <= ceil(N/2)");
  const bool odd = n_cells % 2 != 0;
  if (u.exact()) {
    const double t_prime = odd ? 0.5 : 0.0;
    return h_m * std::abs(u.a_star) / (m - t_prime);
  }
  const double r = u.ratio_a() * u.ratio_b();
  const double t =
      odd ? (1.0 + u.delta / std::abs(u.b_star)) / (1.0 - u.eps / std::abs(u.a_star)) : 1.0;
  return h_m * u.growth() * (1.0 + u.delta / std::abs(u.b_star)) * (1.0 - r) /
         (1.0 - t * std::pow(r, m));
}

double band_lower_bound(const Quantizer& q, const ScalarUncertainty& u, int m_lo, int m_hi) {
  if (!(1 <= m_lo && m_lo < m_hi && m_hi <= q.half_count()))
    throw std::invalid_argument("band_lower_bound: need 1 <= m_lo < m_hi <= ceil(N/2)");
  const auto& h = q.boundaries();
  if (u.exact()) return (h[m_hi] - h[m_lo]) * std::abs(u.a_star) / (m_hi - m_lo);
  const double r = u.ratio_a() * u.ratio_b();
  const double r_gap = std::pow(r, m_hi - m_lo);
  return (h[m_hi] - r_gap * h[m_lo]) * u.growth() * (1.0 + u.delta / std::abs(u.b_star)) *
         (1.0 - r) / (1.0 - r_gap);
}

std::string Quantizer::to_json() const {
  nlohmann::json j;
  j["n_cells"] = n_cells_;
  j["boundaries"] = h_;
  return j.dump();
}

Quantizer Quantizer::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  return Quantizer(j.at("n_cells").get<int>(), j.at("boundaries").get<std::vector<double>>());
}

}  // namespace qstab
