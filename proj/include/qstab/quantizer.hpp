#pragma once

#include <string>
#include <vector>

#include "qstab/interval.hpp"

namespace qstab {

// Interval uncertainty of the scalar plant y_{k+1} = a_k y_k + b_k u_k with
// a_k in [a_star - eps, a_star + eps] and b_k in [b_star - delta, b_star + delta].
// Valid instances are strictly unstable (|a*| - eps > 1) with a sign-definite
// input coefficient (|b*| - delta > 0).
struct ScalarUncertainty {
  double a_star = 2.0;
  double eps = 0.0;
  double b_star = 1.0;
  double delta = 0.0;

  // |a*| + eps, the worst-case one-step growth factor.
  double growth() const { return std::abs(a_star) + eps; }
  // Contraction ratios r_a = (|a*|-eps)/(|a*|+eps), r_b = (|b*|-delta)/(|b*|+delta).
  double ratio_a() const { return (std::abs(a_star) - eps) / (std::abs(a_star) + eps); }
  double ratio_b() const { return (std::abs(b_star) - delta) / (std::abs(b_star) + delta); }
  // Combined uncertainty magnitude eps + delta |a*|/|b*|.
  double delta_total() const { return eps + delta * std::abs(a_star) / std::abs(b_star); }
  bool exact() const { return eps == 0.0 && delta == 0.0; }

  Interval a_interval() const { return {a_star - eps, a_star + eps}; }
  Interval b_interval() const { return {b_star - delta, b_star + delta}; }

  void validate() const;  // throws std::invalid_argument
};

// Symmetric N-cell quantizer of [-1/2, 1/2], stored as the nonnegative
// boundary points h_0 = 0 < h_1 < ... < h_m = 1/2 with m = ceil(N/2).
//
// Signed cell indices (stable; they cross the codec wire format):
//   even N: +-l,  l = 1..m,   cell +l = [h_{l-1}, h_l]
//   odd N:  0 and +-l, l = 1..m-1, cell 0 = [-h_1, h_1], cell +l = [h_l, h_{l+1}]
// Negative indices mirror the positive cells about the origin.
class Quantizer {
 public:
  Quantizer() : Quantizer(2, {0.0, 0.5}) {}  // 1-bit uniform
  Quantizer(int n_cells, std::vector<double> boundaries);

  static Quantizer uniform(int n_cells);
  // Boundary points equalizing the per-cell expansion rates for the given
  // uncertainty; reduces to uniform() when eps = delta = 0.
  static Quantizer optimal(int n_cells, const ScalarUncertainty& u);

  int n_cells() const { return n_cells_; }
  bool odd() const { return n_cells_ % 2 != 0; }
  int half_count() const { return static_cast<int>(h_.size()) - 1; }  // m
  const std::vector<double>& boundaries() const { return h_; }

  int min_index() const { return odd() ? -(half_count() - 1) : -half_count(); }
  int max_index() const { return odd() ? half_count() - 1 : half_count(); }

  // Cell index of a scaled input. A point exactly on a boundary goes to the
  // cell further from the origin. Inputs outside [-1/2, 1/2] beyond a small
  // rounding slack raise saturation_error.
  int quantize(double y_scaled) const;

  Interval cell_interval(int index) const;

  // Index l of the cell's inner boundary h_l (the expansion-rate index):
  // inf over the cell of |y| equals h_l.
  int expansion_index(int cell_index) const;

  std::string to_json() const;
  static Quantizer from_json(const std::string& text);

  friend bool operator==(const Quantizer& a, const Quantizer& b) {
    return a.n_cells_ == b.n_cells_ && a.h_ == b.h_;
  }

 private:
  int n_cells_;
  std::vector<double> h_;
};

// One-step expansion rates w_l of the cells with inner boundary h_l,
// l = 0..m-1, under worst-case parameter draws and the midpoint-cancelling
// input.
std::vector<double> expansion_rates(const Quantizer& q, const ScalarUncertainty& u);
double expansion_rate_at(const Quantizer& q, const ScalarUncertainty& u, int l);

double worst_case_rate(const Quantizer& q, const ScalarUncertainty& u);

// Tight lower bound on the worst-case expansion rate of any quantizer whose
// m cells per side cover [-h_m, h_m]; attained by the optimal boundaries.
// Parity of n_cells picks the constants (odd N reserves a center cell).
double w_star(int n_cells, const ScalarUncertainty& u, int m, double h_m = 0.5);

// Lower bound on max w_l over the cells inside the band [h_mlo, h_mhi],
// 1 <= m_lo < m_hi <= m.
double band_lower_bound(const Quantizer& q, const ScalarUncertainty& u, int m_lo, int m_hi);

}  // namespace qstab
