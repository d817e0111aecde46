#include "qstab/mjls.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "qstab/errors.hpp"
#include "qstab/rng.hpp"

namespace qstab {

double w_bar(int i, const Quantizer& q, const ARUncertainty& u) {
  if (i < 1 || i > u.order()) throw std::out_of_range("w_bar: coefficient index out of range");
  const double a = std::abs(u.a_star[i - 1]);
  const double e = u.eps[i - 1];
  const double b = std::abs(u.b_star);
  const bool a_spans_zero = a <= e;
  const auto& h = q.boundaries();
  const int m = q.half_count();

  const double center_term = e + u.delta * a / b;
  const double w0 = 2.0 * (a + e) * h[1];
  // Max over non-center cells of the growth the coefficient applies to a
  // scaled cell [h_l, h_{l+1}], input-parameter slack included.
  double w1 = 0.0;
  const double hi = (a + e) * (1.0 + u.delta / b);
  const double lo = (a - e) * (1.0 - u.delta / b);
  for (int l = 0; l < m; ++l) w1 = std::max(w1, hi * h[l + 1] - lo * h[l]);

  if (q.odd()) return a_spans_zero ? std::max(center_term, w0) : std::max(w0, w1);
  return a_spans_zero ? center_term : w1;
}

namespace {

Eigen::MatrixXd companion(const std::vector<double>& theta) {
  const int n = static_cast<int>(theta.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r + 1 < n; ++r) h(r, r + 1) = 1.0;
  // Last row is (theta_n, ..., theta_1).
  for (int c = 0; c < n; ++c) h(n - 1, c) = theta[n - 1 - c];
  return h;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

MjlsModel build_model(const ARUncertainty& u, const Quantizer& q, double p_fail,
                      double q_recover, int order_cap) {
  u.validate();
  const int n = u.order();
  if (n > order_cap)
    throw std::invalid_argument("build_model: order exceeds cap (dim(F) = 2^n n^2)");
  if (!(p_fail >= 0.0 && p_fail < 1.0) || !(q_recover > 0.0 && q_recover <= 1.0))
    throw std::invalid_argument("build_model: invalid channel probabilities");

  MjlsModel model;
  model.order = n;
  model.p_fail = p_fail;
  model.q_recover = q_recover;
  for (int i = 1; i <= n; ++i) {
    model.theta_loss.push_back(std::abs(u.a_star[i - 1]) + u.eps[i - 1]);
    model.theta_hit.push_back(w_bar(i, q, u));
  }

  const int modes = 1 << n;
  model.modes.reserve(modes);
  std::vector<double> theta(n);
  for (int idx = 0; idx < modes; ++idx) {
    // gamma_{k-i+1} sits at bit i-1 of the mode index.
    for (int i = 1; i <= n; ++i) {
      const bool hit = (idx >> (i - 1)) & 1;
      theta[i - 1] = hit ? model.theta_hit[i - 1] : model.theta_loss[i - 1];
    }
    model.modes.push_back(companion(theta));
  }

  // Row i: shift the bit window left and append the new gamma, whose law
  // depends only on the current gamma (bit 0 of i).
  model.transition = Eigen::MatrixXd::Zero(modes, modes);
  for (int idx = 0; idx < modes; ++idx) {
    const bool good = idx & 1;
    const double p_next_good = good ? 1.0 - p_fail : q_recover;
    model.transition(idx, advance_mode_index(idx, 1, n)) += p_next_good;
    model.transition(idx, advance_mode_index(idx, 0, n)) += 1.0 - p_next_good;
  }

  const int nn = n * n;
  model.lifted = Eigen::MatrixXd::Zero(modes * nn, modes * nn);
  for (int i = 0; i < modes; ++i) {
    const Eigen::MatrixXd hh = kron(model.modes[i], model.modes[i]);
    for (int j = 0; j < modes; ++j) {
      const double pij = model.transition(i, j);
      if (pij != 0.0) model.lifted.block(j * nn, i * nn, nn, nn) = pij * hh;
    }
  }
  return model;
}

namespace {

double dense_spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw convergence_error("spectral_radius: dense eigensolver failed", 0.0, 0.0);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix not square");
  if (m.rows() == 0) return 0.0;
  if (!m.allFinite()) throw std::invalid_argument("spectral_radius: non-finite entries");
  const int n = static_cast<int>(m.rows());

  constexpr double kTol = 1e-11;
  constexpr int kRestarts = 5;
  constexpr int kItersPerRound = 20000;

  double best_lambda = 0.0;
  double best_residual = std::numeric_limits<double>::infinity();
  CounterRng rng(0x51ab5eedULL);

  for (int round = 0; round < kRestarts; ++round) {
    Eigen::VectorXd v(n);
    if (round == 0) {
      v.setOnes();
    } else {
      for (int i = 0; i < n; ++i) v[i] = 0.05 + rng.next_unit();
    }
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < kItersPerRound; ++it) {
      Eigen::VectorXd w = m * v;
      const double norm = w.norm();
      if (norm == 0.0) {
        // v lies in the kernel; for the all-ones start on a nonnegative
        // matrix this means the matrix is zero.
        if (round == 0 && it == 0 && m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
        break;
      }
      lambda = v.dot(w);
      v = w / norm;
      const double residual = (m * v - lambda * v).norm() / std::max(1.0, std::abs(lambda));
      if (residual < best_residual) {
        best_residual = residual;
        best_lambda = std::abs(lambda);
      }
      if (residual < kTol) return std::abs(lambda);
    }
  }

  if (n <= 256) return dense_spectral_radius(m);
  throw convergence_error("spectral_radius: power iteration did not converge", best_lambda,
                          best_residual);
}

MssVerdict is_mss(const MjlsModel& model) {
  // Strictness margin: knife-edge instances are not certified.
  const double rho = spectral_radius(model.lifted);
  return {rho < 1.0 - 1e-12, rho};
}

ScalarMssDiagnostics scalar_diagnostics(const MjlsModel& model) {
  if (model.order != 1) throw std::logic_error("scalar_diagnostics: model order is not 1");
  const double alpha = model.theta_loss[0];
  const double wbar = model.theta_hit[0];
  const LimitValue nu_val = nu(model.p_fail, model.q_recover, alpha);
  ScalarMssDiagnostics d{};
  d.nu_wbar = nu_val.is_finite() ? nu_val.value() * wbar
                                 : std::numeric_limits<double>::infinity();
  d.trace_half = 0.5 * ((1.0 - model.q_recover) * alpha * alpha +
                        (1.0 - model.p_fail) * wbar * wbar);
  d.inequalities_hold = d.nu_wbar < 1.0 && d.trace_half <= 1.0;
  d.agree_with_rho = d.inequalities_hold == (spectral_radius(model.lifted) < 1.0);
  return d;
}

std::vector<Eigen::VectorXd> mjls_trajectory(const MjlsModel& model, const Eigen::VectorXd& z0,
                                             std::span<const int> gamma_path) {
  if (z0.size() != model.order) throw std::invalid_argument("mjls_trajectory: bad z0 dimension");
  std::vector<Eigen::VectorXd> z;
  z.reserve(gamma_path.size() + 1);
  z.push_back(z0);
  int idx = 0;  // bits before the path start count as losses
  for (int gamma : gamma_path) {
    idx = advance_mode_index(idx, gamma, model.order);
    z.push_back(model.modes[idx] * z.back());
  }
  return z;
}

std::vector<Eigen::VectorXd> mjls_trajectory(const MjlsModel& model, const Eigen::VectorXd& z0,
                                             GilbertElliott& channel, int horizon) {
  // Same convention as the closed loop: the first sample is the channel's
  // current state, transitions follow.
  std::vector<int> gammas(horizon);
  for (int k = 0; k < horizon; ++k) gammas[k] = k == 0 ? channel.state() : channel.step();
  return mjls_trajectory(model, z0, gammas);
}

}  // namespace qstab
