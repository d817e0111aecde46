#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "qstab/errors.hpp"
#include "qstab/limits.hpp"
#include "qstab/loop.hpp"
#include "qstab/mjls.hpp"
#include "test_helpers.hpp"

using namespace qstab;
using test::close;
using test::FailureLog;

namespace {

const ARUncertainty kOrder2{{1.5, 0.2}, {0.05, 0.02}, 1.0, 0.05};

Eigen::MatrixXd kron_ref(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double dense_rho(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

// 2x2 closed-form spectral radius.
double rho_2x2(const Eigen::MatrixXd& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) return std::sqrt(det);
  const double root = std::sqrt(disc);
  return std::max(std::abs(0.5 * (tr + root)), std::abs(0.5 * (tr - root)));
}

}  // namespace

TEST_CASE("w_bar case split") {
  // Even N, coefficient interval containing zero: eps + delta |a*| / |b*|.
  const ARUncertainty u{{1.5, 0.05}, {0.05, 0.1}, 1.0, 0.2};
  CHECK(close(w_bar(2, Quantizer::uniform(8), u), 0.1 + 0.2 * 0.05));

  // Scalar case: w_bar equals the worst-case cell expansion rate, with and
  // without input uncertainty.
  const ScalarUncertainty s1{3.0, 0.5, 1.0, 0.0};
  const ScalarUncertainty s2{2.0, 0.2, 1.0, 0.3};
  for (const ScalarUncertainty& s : {s1, s2}) {
    const ARUncertainty ar = ARUncertainty::from_scalar(s);
    for (int n : {4, 6, 8, 7}) {
      const Quantizer opt = Quantizer::optimal(n, s);
      CHECK(close(w_bar(1, opt, ar), worst_case_rate(opt, s)));
      const Quantizer uni = Quantizer::uniform(n);
      CHECK(close(w_bar(1, uni, ar), worst_case_rate(uni, s)));
    }
  }

  // Odd N with a sign-definite interval: max of center and off-center rates.
  const Quantizer q5 = Quantizer::uniform(5);
  const ARUncertainty u5{{1.8}, {0.1}, 1.0, 0.1};
  const double w0 = 2.0 * 1.9 * 0.1;
  double w1 = 0.0;
  const auto& h = q5.boundaries();
  for (int l = 0; l < 3; ++l)
    w1 = std::max(w1, 1.9 * 1.1 * h[l + 1] - 1.7 * 0.9 * h[l]);
  CHECK(close(w_bar(1, q5, u5), std::max(w0, w1)));

  CHECK_THROWS_AS(w_bar(3, q5, u5), std::out_of_range);
}

TEST_CASE("transition matrix structure") {
  // n = 1: the two-state chain itself, loss mode first.
  const MjlsModel m1 = build_model(ARUncertainty::from_scalar({2.0, 0.1, 1.0, 0.0}),
                                   Quantizer::uniform(4), 0.05, 0.9);
  Eigen::MatrixXd p1(2, 2);
  p1 << 0.95, 0.05, 0.1, 0.9;  // rows: from loss, from hit
  CHECK((m1.transition - p1).cwiseAbs().maxCoeff() == 0.0);

  // n = 2: P = [I;I] (x) Q with Q the 2x4 one-step block.
  const MjlsModel m2 = build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9);
  Eigen::MatrixXd q_block(2, 4);
  q_block << 1 - 0.9, 0.9, 0, 0, 0, 0, 0.05, 1 - 0.05;
  Eigen::MatrixXd stack(2, 1);
  stack << 1, 1;
  const Eigen::MatrixXd p2 = kron_ref(stack, q_block);
  CHECK((m2.transition - p2).cwiseAbs().maxCoeff() < 1e-15);
  for (int i = 0; i < 4; ++i) CHECK(close(m2.transition.row(i).sum(), 1.0));

  // n = 3 rows still sum to one.
  const ARUncertainty u3{{1.2, 0.1, 0.05}, {0.02, 0.0, 0.0}, 1.0, 0.0};
  const MjlsModel m3 = build_model(u3, Quantizer::uniform(8), 0.1, 0.8);
  for (int i = 0; i < 8; ++i) CHECK(close(m3.transition.row(i).sum(), 1.0));

  CHECK_THROWS_AS(build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9, 1),
                  std::invalid_argument);
}

TEST_CASE("mode matrices are companion-form with the right thetas") {
  const Quantizer q = Quantizer::uniform(8);
  const MjlsModel m = build_model(kOrder2, q, 0.05, 0.9);
  REQUIRE(m.mode_count() == 4);
  CHECK(m.theta_loss[0] == 1.55);
  CHECK(m.theta_loss[1] == doctest::Approx(0.22));
  CHECK(close(m.theta_hit[0], w_bar(1, q, kOrder2)));
  CHECK(close(m.theta_hit[1], w_bar(2, q, kOrder2)));

  // Mode index 1 = [gamma_{k-1}=0, gamma_k=1]: theta_1 from hit, theta_2 from loss.
  const Eigen::MatrixXd& h1 = m.modes[1];
  CHECK(h1(0, 0) == 0.0);
  CHECK(h1(0, 1) == 1.0);
  CHECK(close(h1(1, 0), m.theta_loss[1]));  // theta_2
  CHECK(close(h1(1, 1), m.theta_hit[0]));   // theta_1
  // Mode 2 = [1, 0]: the complement.
  const Eigen::MatrixXd& h2 = m.modes[2];
  CHECK(close(h2(1, 0), m.theta_hit[1]));
  CHECK(close(h2(1, 1), m.theta_loss[0]));
}

TEST_CASE("empirical mode transition frequencies match P") {
  const MjlsModel m = build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9);
  GilbertElliott ch(0.05, 0.9, 314);
  std::vector<std::vector<long>> counts(4, std::vector<long>(4, 0));
  int idx = advance_mode_index(0, ch.state(), 2);
  for (long k = 0; k < 1000000; ++k) {
    const int next = advance_mode_index(idx, ch.step(), 2);
    ++counts[idx][next];
    idx = next;
  }
  for (int i = 0; i < 4; ++i) {
    const double total = std::max<long>(1, counts[i][0] + counts[i][1] + counts[i][2] +
                                               counts[i][3]);
    double tv = 0.0;
    for (int j = 0; j < 4; ++j) tv += std::abs(counts[i][j] / total - m.transition(i, j));
    CHECK(tv / 2.0 < 0.01);
  }
}

TEST_CASE("lifted matrix: n = 1 closed form") {
  const ScalarUncertainty s{2.0, 0.1, 1.0, 0.05};
  const Quantizer q = Quantizer::optimal(6, s);
  const MjlsModel m = build_model(ARUncertainty::from_scalar(s), q, 0.05, 0.9);
  REQUIRE(m.lifted.rows() == 2);
  const double a2 = m.theta_loss[0] * m.theta_loss[0];
  const double w2 = m.theta_hit[0] * m.theta_hit[0];
  Eigen::MatrixXd f(2, 2);
  f << 0.1 * a2, 0.05 * w2, 0.9 * a2, 0.95 * w2;
  CHECK((m.lifted - f).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(close(spectral_radius(m.lifted), rho_2x2(f)));
}

TEST_CASE("lifted matrix equals (P^T kron I) blockdiag(H kron H)") {
  const MjlsModel m = build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9);
  Eigen::MatrixXd f1 = kron_ref(m.transition.transpose(), Eigen::MatrixXd::Identity(4, 4));
  Eigen::MatrixXd f2 = Eigen::MatrixXd::Zero(16, 16);
  for (int i = 0; i < 4; ++i)
    f2.block(4 * i, 4 * i, 4, 4) = kron_ref(m.modes[i], m.modes[i]);
  CHECK((m.lifted - f1 * f2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("spectral radius") {
  CHECK(spectral_radius(Eigen::MatrixXd::Identity(5, 5)) == doctest::Approx(1.0));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = 0.9;
  CHECK(close(spectral_radius(d), 0.9, 1e-10));
  CHECK(spectral_radius(Eigen::MatrixXd::Zero(3, 3)) == 0.0);

  // Imprimitive case where plain power iteration cycles.
  Eigen::MatrixXd c(2, 2);
  c << 0.0, 2.0, 0.5, 0.0;
  CHECK(close(spectral_radius(c), 1.0, 1e-8));

  Eigen::MatrixXd rect(2, 3);
  CHECK_THROWS_AS(spectral_radius(rect), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(spectral_radius(bad), std::invalid_argument);

  // Dual-method cross-check on random nonnegative matrices.
  CounterRng rng(8);
  FailureLog log;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd m(20, 20);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        m(i, j) = rng.bernoulli(0.3) ? rng.next_range(0.0, 1.0) : 0.0;
    const double via_impl = spectral_radius(m);
    const double via_dense = dense_rho(m);
    log.expect(std::abs(via_impl - via_dense) <= 1e-8 * std::max(1.0, via_dense),
               "power iteration vs dense eigensolver");
  }
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("scalar stability bridge: minimal even N certifies, below fails") {
  CounterRng rng(2024);
  FailureLog log;
  int certified = 0, rejected = 0;
  for (int trial = 0; trial < 2000 && (certified < 50 || rejected < 50); ++trial) {
    const ScalarUncertainty u = test::random_uncertainty(rng);
    const double p = rng.next_range(0.01, 0.4);
    const double q = rng.next_range(0.5, 0.99);
    const ScalarLimits lim = compute_limits(u, p, q);
    if (!lim.n_nec_even.is_finite() || lim.n_nec_even.value() >= 40.0) continue;
    const int n_ok = minimal_even_symbols(lim);
    const ARUncertainty ar = ARUncertainty::from_scalar(u);

    const MjlsModel good = build_model(ar, Quantizer::optimal(n_ok, u), p, q);
    const MssVerdict v = is_mss(good);
    log.expect(v.stable, "minimal even N above the bound must certify");
    const ScalarMssDiagnostics diag = scalar_diagnostics(good);
    log.expect(diag.nu_wbar < 1.0, "nu w_bar < 1 above the bound");
    log.expect(diag.agree_with_rho, "scalar inequalities must agree with rho(F)");
    ++certified;

    if (n_ok - 2 >= 2 && n_ok - 2 < lim.n_nec_even.value()) {
      const MjlsModel bad = build_model(ar, Quantizer::optimal(n_ok - 2, u), p, q);
      const ScalarMssDiagnostics d2 = scalar_diagnostics(bad);
      log.expect(d2.nu_wbar >= 1.0, "below the bound nu w_bar must reach 1");
      log.expect(!is_mss(bad).stable, "below the bound must not certify");
      log.expect(d2.agree_with_rho, "scalar inequalities must agree with rho(F)");
      ++rejected;
    }
  }
  CHECK(certified >= 50);
  CHECK(rejected >= 50);
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("deterministic contraction certifies") {
  // eps = delta = 0, lossless, N > |a*|.
  const MjlsModel m = build_model(ARUncertainty::from_scalar({2.0, 0.0, 1.0, 0.0}),
                                  Quantizer::uniform(4), 0.0, 1.0);
  const MssVerdict v = is_mss(m);
  CHECK(v.stable);
  CHECK(close(v.rho, 0.25));  // (|a*|/N)^2
}

TEST_CASE("rho monotonicity in uncertainty and channel quality") {
  const Quantizer q = Quantizer::uniform(8);
  auto rho_of = [&](double e1, double d, double p, double qr) {
    ARUncertainty u = kOrder2;
    u.eps[0] = e1;
    u.delta = d;
    return is_mss(build_model(u, q, p, qr)).rho;
  };
  double prev = 0.0;
  for (double e = 0.0; e <= 0.2; e += 0.04) {
    const double r = rho_of(e, 0.05, 0.05, 0.9);
    CHECK(r >= prev - 1e-12);
    prev = r;
  }
  prev = 0.0;
  for (double d = 0.0; d <= 0.3; d += 0.06) {
    const double r = rho_of(0.05, d, 0.05, 0.9);
    CHECK(r >= prev - 1e-12);
    prev = r;
  }
  prev = 0.0;
  for (double p = 0.01; p <= 0.4; p += 0.08) {
    const double r = rho_of(0.05, 0.05, p, 0.9);
    CHECK(r >= prev - 1e-12);
    prev = r;
  }
  prev = 2.0;
  for (double qr = 0.5; qr <= 0.99; qr += 0.1) {
    const double r = rho_of(0.05, 0.05, 0.05, qr);
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("mjls trajectories") {
  const MjlsModel m = build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9);

  // Zero start stays zero.
  GilbertElliott ch(0.05, 0.9, 1);
  const auto zero = mjls_trajectory(m, Eigen::VectorXd::Zero(2), ch, 50);
  for (const auto& z : zero) CHECK(z.norm() == 0.0);

  CHECK_THROWS_AS(mjls_trajectory(m, Eigen::VectorXd::Zero(3), ch, 5), std::invalid_argument);

  // Ensemble mean of ||z||^2 decays no slower than rho predicts (stable case).
  const double rho = is_mss(m).rho;
  REQUIRE(rho < 1.0);
  const int horizon = 60, trials = 20000;
  std::vector<double> mean_sq(horizon + 1, 0.0);
  Eigen::VectorXd z0(2);
  z0 << 1.0, 1.0;
  for (int t = 0; t < trials; ++t) {
    GilbertElliott c(0.05, 0.9, CounterRng::derive(99, t));
    const auto traj = mjls_trajectory(m, z0, c, horizon);
    for (int k = 0; k <= horizon; ++k) mean_sq[k] += traj[k].squaredNorm() / trials;
  }
  // Fit the tail decay factor of E||z_k||^2 per step.
  const int k0 = horizon / 2;
  double num = 0.0, den = 0.0, kbar = 0.0, ybar = 0.0, cnt = 0.0;
  for (int k = k0; k <= horizon; ++k) {
    kbar += k;
    ybar += std::log(mean_sq[k]);
    cnt += 1.0;
  }
  kbar /= cnt;
  ybar /= cnt;
  for (int k = k0; k <= horizon; ++k) {
    num += (k - kbar) * (std::log(mean_sq[k]) - ybar);
    den += (k - kbar) * (k - kbar);
  }
  const double fitted = std::exp(num / den);
  CHECK(fitted <= rho + 0.05);
  CHECK(fitted >= rho - 0.1);  // not collapsing much faster than the spectral rate

  // Divergent model: growth tracks rho as well.
  const MjlsModel bad = build_model(ARUncertainty::from_scalar({2.0, 0.3, 1.0, 0.0}),
                                    Quantizer::optimal(2, {2.0, 0.3, 1.0, 0.0}), 0.05, 0.98);
  const double rho_bad = is_mss(bad).rho;
  REQUIRE(rho_bad > 1.0);
  double log_mean_final = 0.0;
  const int h2 = 40, t2 = 20000;
  std::vector<double> acc(h2 + 1, 0.0);
  Eigen::VectorXd z1(1);
  z1 << 1.0;
  for (int t = 0; t < t2; ++t) {
    GilbertElliott c(0.05, 0.98, CounterRng::derive(7, t));
    const auto traj = mjls_trajectory(bad, z1, c, h2);
    for (int k = 0; k <= h2; ++k) acc[k] += traj[k].squaredNorm() / t2;
  }
  log_mean_final = std::log(acc[h2] / acc[h2 / 2]) / (h2 - h2 / 2);
  CHECK(std::abs(std::exp(log_mean_final) - rho_bad) < 0.12);
}

TEST_CASE("sigma domination along matched closed-loop trajectories") {
  CounterRng rng(555);
  FailureLog log;
  for (int trial = 0; trial < 300; ++trial) {
    const bool second_order = trial % 2 == 0;
    LoopConfig cfg;
    if (second_order) {
      cfg.uncertainty = kOrder2;
      cfg.quantizer = Quantizer::uniform(8);
      cfg.initial_intervals = {test::random_interval(rng, -1.0, 1.0),
                               test::random_interval(rng, -1.0, 1.0)};
      for (auto& iv : cfg.initial_intervals)
        if (!(width(iv) > 1e-3)) iv = {-0.5, 0.5};
    } else {
      const ScalarUncertainty u = test::random_uncertainty(rng);
      cfg = LoopConfig::scalar(u, rng.bernoulli(0.5) ? Quantizer::optimal(8, u)
                                                     : test::random_quantizer(rng, 8));
    }
    cfg.policy = static_cast<PerturbationMode>(rng.next_u64() % 4);
    const double p = rng.next_range(0.01, 0.4);
    const double q = rng.next_range(0.4, 0.99);

    ClosedLoop loop(cfg, p, q, rng.next_u64(), rng.next_u64());
    const int n = cfg.uncertainty.order();
    Eigen::VectorXd z0(n);
    for (int i = 0; i < n; ++i) z0[i] = 2.0 * sup_abs(cfg.initial_intervals[i]);

    std::vector<int> gammas;
    std::vector<double> sigmas{loop.encoder().sigma()};
    for (int k = 0; k < 60 && !loop.converged(); ++k) {
      const StepRecord r = loop.step();
      gammas.push_back(r.gamma);
      sigmas.push_back(loop.encoder().sigma());
      if (sigmas.back() > 1e80) break;
    }
    const MjlsModel model = build_model(cfg.uncertainty, cfg.quantizer, p, q);
    const auto z = mjls_trajectory(model, z0, gammas);
    for (std::size_t k = 0; k < sigmas.size(); ++k)
      log.expect(sigmas[k] <= z[k][n - 1] * (1.0 + 1e-9),
                 "sigma_k <= (z_k)_n at k=" + std::to_string(k));
  }
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("second-moment recursion matches the lifted matrix") {
  const MjlsModel m = build_model(kOrder2, Quantizer::uniform(8), 0.05, 0.9);
  const int n = 2, modes = 4, horizon = 20, trials = 100000;

  Eigen::VectorXd z0(n);
  z0 << 0.7, 1.0;

  // Prediction: V(k+1) = F V(k), blocks indexed by the mode at time k.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(modes * n * n);
  const Eigen::MatrixXd zz = z0 * z0.transpose();
  const int idx0 = 1;  // Gamma_0 = [0, gamma_0 = 1]
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) v[idx0 * n * n + c * n + r] = zz(r, c);
  for (int k = 0; k < horizon; ++k) v = m.lifted * v;
  Eigen::MatrixXd predicted = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < modes; ++i)
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) predicted(r, c) += v[i * n * n + c * n + r];

  // Monte Carlo second moment at the same step.
  Eigen::MatrixXd empirical = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < trials; ++t) {
    GilbertElliott ch(0.05, 0.9, CounterRng::derive(1234, t));
    const auto traj = mjls_trajectory(m, z0, ch, horizon);
    empirical += traj.back() * traj.back().transpose() / trials;
  }
  CHECK((empirical - predicted).norm() / predicted.norm() < 0.03);
}
