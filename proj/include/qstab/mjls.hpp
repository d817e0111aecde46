#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qstab/channel.hpp"
#include "qstab/plant.hpp"
#include "qstab/quantizer.hpp"

namespace qstab {

// Upper bound on the one-step expansion factor that coefficient a_{i,k}
// applies to a received quantization cell, maximized over cells. Case split
// on the parity of N and on whether A_i contains zero.
double w_bar(int i, const Quantizer& q, const ARUncertainty& u);

// Markov jump model z_{k+1} = H_{Gamma_k} z_k dominating the sigma recursion.
// Gamma_k = [gamma_{k-n+1} ... gamma_k] packs into a mode index with gamma_k
// as the least significant bit; that encoding makes `transition` equal to
// [I;I] (x) Q exactly.
struct MjlsModel {
  int order = 0;
  double p_fail = 0.0;
  double q_recover = 0.0;
  std::vector<double> theta_loss;        // |a_i*| + eps_i
  std::vector<double> theta_hit;         // w_bar_i
  std::vector<Eigen::MatrixXd> modes;    // H_Gamma, companion form, index = packed bits
  Eigen::MatrixXd transition;            // P, 2^n x 2^n, row i -> next-mode law
  Eigen::MatrixXd lifted;                // F = (P^T (x) I_{n^2}) blockdiag(H (x) H)

  int mode_count() const { return static_cast<int>(modes.size()); }
};

// Next mode index after observing gamma (drops the oldest bit).
inline int advance_mode_index(int index, int gamma, int order) {
  return ((index << 1) | (gamma & 1)) & ((1 << order) - 1);
}

// Builds theta tables, the 2^n mode matrices, P, and the lifted matrix F.
// dim(F) = 2^n n^2 grows fast; orders above `order_cap` are rejected.
MjlsModel build_model(const ARUncertainty& u, const Quantizer& q, double p_fail,
                      double q_recover, int order_cap = 12);

// Spectral radius to ~1e-10 relative: power iteration with periodic random
// restarts, dense eigensolver fallback for dimension <= 256. Throws
// convergence_error (carrying the best estimate and residual) otherwise.
double spectral_radius(const Eigen::MatrixXd& m);

// The verdict certifies sufficiency only: stable means rho(F) < 1 with a
// strictness margin; not-stable means not certified, not proven unstable.
struct MssVerdict {
  bool stable = false;
  double rho = 0.0;
};
MssVerdict is_mss(const MjlsModel& model);

// The two scalar-case inequalities quoted alongside the spectral test,
// reported as diagnostics; rho(F) stays the authoritative decision.
struct ScalarMssDiagnostics {
  double nu_wbar;       // nu * w_bar_1 (infinity when nu diverges)
  double trace_half;    // ((1-q)(|a*|+eps)^2 + (1-p) w_bar_1^2) / 2
  bool inequalities_hold;
  bool agree_with_rho;  // inequalities_hold == (rho < 1)
};
ScalarMssDiagnostics scalar_diagnostics(const MjlsModel& model);

// z_{k+1} = H_{Gamma_k} z_k along a channel-driven (or given) gamma path;
// returns z_0..z_horizon. Mode bits before the path start are treated as
// losses.
std::vector<Eigen::VectorXd> mjls_trajectory(const MjlsModel& model, const Eigen::VectorXd& z0,
                                             GilbertElliott& channel, int horizon);
std::vector<Eigen::VectorXd> mjls_trajectory(const MjlsModel& model, const Eigen::VectorXd& z0,
                                             std::span<const int> gamma_path);

}  // namespace qstab
