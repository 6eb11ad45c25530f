#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "brwp/gaussian_analytic.hpp"
#include "brwp/harness.hpp"
#include "oracles.hpp"

using namespace brwp;

namespace {

// Population-limit smoothing of a 1D Gaussian under the kernel formula with
// per-point normalizer:
//   q(y) = exp(-V(y)/(2b)) Int G(y - x) rho(x) / Z(x) dx,
//   Z(x) = Int G(x - z) exp(-V(z)/(2b)) dz,
// with G the N(0, 2 b T) density. Everything runs on a wide trapezoid grid
// and shares no code with the closed forms under test. The per-point
// normalizers are tabulated once so the double integral stays cheap.
class SmoothingQuadrature {
 public:
  SmoothingQuadrature(double a, double horizon, double beta, double mean, double var)
      : a_(a), horizon_(horizon), beta_(beta), mean_(mean), var_(var) {
    grid_.resize(n_ + 1);
    weighted_.resize(n_ + 1);
    const double h = (hi_ - lo_) / n_;
    for (int j = 0; j <= n_; ++j) {
      const double x = lo_ + j * h;
      grid_[j] = x;
      const double z = oracle::trapezoid(
          [&](double u) { return kernel(x - u) * potential_weight(u); }, lo_, hi_, n_);
      weighted_[j] = rho(x) / z;
    }
  }

  double q_unnormalized(double y) const {
    double inner = 0.0;
    for (int j = 0; j <= n_; ++j) {
      const double term = kernel(y - grid_[j]) * weighted_[j];
      inner += (j == 0 || j == n_) ? 0.5 * term : term;
    }
    return potential_weight(y) * inner;
  }

  // Weighted interaction mean: the population limit of the kernel average
  // that the particle score subtracts.
  double xbar(double y) const {
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= n_; ++j) {
      const double scale = (j == 0 || j == n_) ? 0.5 : 1.0;
      const double term = scale * kernel(y - grid_[j]) * weighted_[j];
      num += term * grid_[j];
      den += term;
    }
    return num / den;
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int n() const { return n_; }

 private:
  double kernel(double u) const {
    const double s2 = 2.0 * beta_ * horizon_;
    return std::exp(-u * u / (2.0 * s2)) / std::sqrt(2.0 * M_PI * s2);
  }
  double potential_weight(double z) const { return std::exp(-a_ * z * z / (4.0 * beta_)); }
  double rho(double x) const {
    return std::exp(-(x - mean_) * (x - mean_) / (2.0 * var_)) / std::sqrt(2.0 * M_PI * var_);
  }

  double a_, horizon_, beta_, mean_, var_;
  double lo_ = -18.0, hi_ = 18.0;
  int n_ = 1200;
  std::vector<double> grid_;
  std::vector<double> weighted_;
};

}  // namespace

TEST_CASE("1d smoothing closed form matches the kernel quadrature") {
  const SmoothingQuadrature quad(0.8, 0.5, 1.2, 0.7, 1.3);
  const Gaussian1D smoothed = rwp_gaussian_1d({0.7, 1.3}, 0.8, 0.5, 1.2);
  const oracle::GridMoments m = oracle::grid_moments(
      [&](double y) { return quad.q_unnormalized(y); }, quad.lo(), quad.hi(), quad.n());
  REQUIRE(smoothed.mean == Catch::Approx(m.mean).margin(2e-6));
  REQUIRE(smoothed.var == Catch::Approx(m.var).margin(2e-6));
}

TEST_CASE("a = 0 reduces the smoothing to the heat kernel") {
  const Gaussian1D g{0.4, 2.0};
  const Gaussian1D smoothed = rwp_gaussian_1d(g, 0.0, 0.3, 1.5);
  REQUIRE(smoothed.mean == g.mean);
  REQUIRE(smoothed.var == Catch::Approx(g.var + 2.0 * 1.5 * 0.3).margin(1e-15));

  const SmoothingQuadrature quad(0.0, 0.3, 1.5, 0.4, 2.0);
  const oracle::GridMoments m = oracle::grid_moments(
      [&](double y) { return quad.q_unnormalized(y); }, quad.lo(), quad.hi(), quad.n());
  REQUIRE(smoothed.mean == Catch::Approx(m.mean).margin(2e-6));
  REQUIRE(smoothed.var == Catch::Approx(m.var).margin(2e-6));
}

TEST_CASE("1d one-step recurrence matches the quadrature interaction mean") {
  const double a = 1.1, horizon = 0.4, beta = 0.9, eta = 0.2;
  const Gaussian1D g{1.0, 1.7};
  const SmoothingQuadrature quad(a, horizon, beta, g.mean, g.var);

  // The interaction mean is affine in the evaluation point for a Gaussian
  // law; recover slope and offset from two quadrature evaluations.
  const double y1 = 0.3, y2 = 1.2;
  const double x1 = quad.xbar(y1), x2 = quad.xbar(y2);
  const double slope = (x2 - x1) / (y2 - y1);
  const double offset = x1 - slope * y1;

  // One particle step is x' = x - eta a x + (eta/2)(a x + (x - xbar(x))/T),
  // an affine map, so mean and variance transform through its coefficients.
  const double lin = 1.0 - eta * a + 0.5 * eta * (a + (1.0 - slope) / horizon);
  const double shift = -0.5 * eta * offset / horizon;
  const double mean_expected = lin * g.mean + shift;
  const double var_expected = lin * lin * g.var;

  const Gaussian1D next = brwp_recurrence_1d(g, a, horizon, beta, eta);
  REQUIRE(next.mean == Catch::Approx(mean_expected).margin(5e-6));
  REQUIRE(next.var == Catch::Approx(var_expected).margin(5e-6));
}

TEST_CASE("1d recurrence fixed point and stationary variance") {
  const double a = 1.0, horizon = 0.5, beta = 1.0, eta = 0.25;
  const double stat = brwp_stationary_var_1d(a, horizon, beta);
  REQUIRE(stat == Catch::Approx(0.75).margin(1e-15));

  const auto track = iterate_brwp_1d({0.0, 4.0}, a, horizon, beta, eta, 400);
  REQUIRE(track.size() == 401);
  REQUIRE(std::abs(track.back().var - stat) < 1e-12);
  const Gaussian1D fixed = brwp_recurrence_1d({0.0, stat}, a, horizon, beta, eta);
  REQUIRE(fixed.var == Catch::Approx(stat).margin(1e-14));

  REQUIRE(degenerate_horizon(1.0, 1.0));
  REQUIRE_FALSE(degenerate_horizon(1.0, 0.99));
  REQUIRE(brwp_stationary_var_1d(1.0, 1.5, 1.0) == 0.0);
}

TEST_CASE("ula closed form agrees with direct iteration of the affine map") {
  const double a = 1.0, beta = 1.0, eta = 0.25;
  const Gaussian1D g0{1.5, 4.0};
  const auto track = ula_recurrence_1d(g0, a, beta, eta, 100);
  double mean = g0.mean, var = g0.var;
  const double r = 1.0 - a * eta;
  for (std::size_t k = 1; k < track.size(); ++k) {
    mean = r * mean;
    var = r * r * var + 2.0 * beta * eta;
    REQUIRE(track[k].mean == Catch::Approx(mean).margin(1e-12));
    REQUIRE(track[k].var == Catch::Approx(var).margin(1e-12));
  }
  REQUIRE(std::abs(track.back().var - ula_stationary_var_1d(a, beta, eta)) < 1e-10);
  REQUIRE_THROWS_AS(ula_recurrence_1d(g0, 2.0, beta, 0.5, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(ula_stationary_var_1d(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("nd maps reduce to the 1d closed forms") {
  Eigen::MatrixXd sigma(1, 1);
  sigma << 1.0 / 0.8;  // target curvature a = 0.8
  const ProximalParams params(sigma, 0.5, 1.1);
  const GaussianNd g{Eigen::VectorXd::Constant(1, 0.9), Eigen::MatrixXd::Constant(1, 1, 2.3)};

  const GaussianNd smoothed = rwp_gaussian_nd(g, params);
  const Gaussian1D smoothed1 = rwp_gaussian_1d({0.9, 2.3}, 0.8, 0.5, 1.1);
  REQUIRE(smoothed.mean[0] == Catch::Approx(smoothed1.mean).margin(1e-13));
  REQUIRE(smoothed.cov(0, 0) == Catch::Approx(smoothed1.var).margin(1e-13));

  const GaussianNd next = brwp_covariance_step_nd(g, params, 0.2);
  const Gaussian1D next1 = brwp_recurrence_1d({0.9, 2.3}, 0.8, 0.5, 1.1, 0.2);
  REQUIRE(next.mean[0] == Catch::Approx(next1.mean).margin(1e-13));
  REQUIRE(next.cov(0, 0) == Catch::Approx(next1.var).margin(1e-13));
}

TEST_CASE("diagonal nd step decouples into modes") {
  Eigen::VectorXd xs(3);
  xs << 5.0, 2.0, 0.7;
  const double horizon = 0.3, beta = 1.4, eta = 0.15;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  Eigen::VectorXd v0(3);
  v0 << 4.0, 1.0, 0.5;
  const GaussianNd g{Eigen::VectorXd::Zero(3), Eigen::MatrixXd(v0.asDiagonal())};

  const GaussianNd next = brwp_covariance_step_nd(g, params, eta);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const Gaussian1D next1 = brwp_recurrence_1d({0.0, v0[i]}, 1.0 / xs[i], horizon, beta, eta);
    REQUIRE(next.cov(i, i) == Catch::Approx(next1.var).margin(1e-12));
    const double tau = eigenvalue_recurrence(v0[i], xs[i], horizon, beta, eta);
    REQUIRE(next.cov(i, i) == Catch::Approx(tau).margin(1e-12));
  }
  REQUIRE(next.cov(0, 1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("covariance step is rotation equivariant") {
  Eigen::VectorXd xs(3);
  xs << 3.0, 1.5, 1.0;
  const Eigen::MatrixXd rot = random_rotation(3, 77);
  const double horizon = 0.25, beta = 1.0, eta = 0.2;

  const ProximalParams diag_params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  const ProximalParams rot_params(detail::symmetrize(rot * xs.asDiagonal() * rot.transpose()),
                                  horizon, beta);

  Eigen::VectorXd v0(3);
  v0 << 2.0, 1.2, 0.8;
  const GaussianNd g_diag{Eigen::VectorXd::Zero(3), Eigen::MatrixXd(v0.asDiagonal())};
  const GaussianNd g_rot{Eigen::VectorXd::Zero(3),
                         detail::symmetrize(rot * v0.asDiagonal() * rot.transpose())};

  const GaussianNd next_diag = brwp_covariance_step_nd(g_diag, diag_params, eta);
  const GaussianNd next_rot = brwp_covariance_step_nd(g_rot, rot_params, eta);
  const Eigen::MatrixXd conjugated = rot * next_diag.cov * rot.transpose();
  REQUIRE((next_rot.cov - conjugated).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("stationary covariances") {
  Eigen::VectorXd xs(2);
  xs << 4.0, 1.0;
  const double horizon = 0.4, beta = 1.3;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);

  const Eigen::MatrixXd stat = stationary_covariance_nd(params);
  for (Eigen::Index i = 0; i < 2; ++i)
    REQUIRE(stat(i, i) ==
            Catch::Approx(beta * (xs[i] - horizon * horizon / xs[i])).margin(1e-13));

  const GaussianNd fixed =
      brwp_covariance_step_nd({Eigen::VectorXd::Zero(2), stat}, params, 0.3);
  REQUIRE((fixed.cov - stat).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE((stationary_smoothed_covariance_nd(params) - beta * Eigen::MatrixXd(xs.asDiagonal()))
              .cwiseAbs()
              .maxCoeff() < 1e-13);

  // A horizon past the smallest target eigenvalue has no Gaussian stationary
  // law in this family.
  const ProximalParams bad(Eigen::MatrixXd(xs.asDiagonal()), 1.5, beta);
  REQUIRE_THROWS_AS(stationary_covariance_nd(bad), std::invalid_argument);
}

TEST_CASE("tv bound and kl on gaussian pairs") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd two = Eigen::MatrixXd::Constant(1, 1, 2.0);
  REQUIRE(tv_bound(one, two) == Catch::Approx(1.5).margin(1e-14));
  REQUIRE(tv_bound(two, one) == Catch::Approx(0.75).margin(1e-14));

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  REQUIRE(tv_bound(eye, 1.01 * eye) ==
          Catch::Approx(1.5 * std::sqrt(3.0 * 1e-4)).margin(1e-12));
  REQUIRE(tv_bound(eye, eye) == 0.0);

  REQUIRE(kl_gaussians(one, two) ==
          Catch::Approx(0.5 * (std::log(2.0) - 1.0 + 0.5)).margin(1e-12));
  REQUIRE(kl_gaussians(two, two) == Catch::Approx(0.0).margin(1e-14));

  // The bound is invariant under a joint rotation of both covariances.
  const Eigen::MatrixXd rot = random_rotation(3, 5);
  const Eigen::MatrixXd s1 = detail::symmetrize(rot * eye * rot.transpose());
  const Eigen::MatrixXd s2 = detail::symmetrize(rot * (1.01 * eye) * rot.transpose());
  REQUIRE(tv_bound(s1, s2) == Catch::Approx(tv_bound(eye, 1.01 * eye)).margin(1e-10));
}

TEST_CASE("omega curve and the step cap") {
  const double horizon = 1.0 / 3.0, beta = 1.0;
  for (double xi : {1.0, 3.25, 10.0}) {
    REQUIRE(omega(0.0, xi, horizon, beta) ==
            Catch::Approx(2.0 * (xi - horizon) / (xi + horizon)).margin(1e-13));
    const double cap = delta_cap(xi, horizon);
    // The supremum over the whole domain gamma > -s, including the interior
    // maximum at negative gamma.
    const double s = std::sqrt(beta * (xi - horizon));
    const double sup = oracle::grid_max(
        [&](double g) { return omega(g, xi, horizon, beta); }, -s + 1e-9 * (1.0 + s), 60.0, 4000);
    REQUIRE(sup <= cap + 1e-9);
    REQUIRE(sup == Catch::Approx(cap).margin(1e-6));
  }
  REQUIRE_THROWS_AS(omega(0.0, 0.2, 1.0 / 3.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(delta_cap(0.2, 1.0 / 3.0), std::invalid_argument);

  Eigen::VectorXd xs(2);
  xs << 10.0, 1.0;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  const double cap = theorem_step_cap(params);
  REQUIRE(cap == Catch::Approx(std::min(10.0 / delta_cap(10.0, horizon),
                                        1.0 / delta_cap(1.0, horizon)))
                     .margin(1e-13));
}

TEST_CASE("mixing certificate bounds the iterated tv distance") {
  Eigen::VectorXd xs(5);
  xs << 10.0, 7.75, 5.5, 3.25, 1.0;
  const double horizon = 1.0 / 3.0, beta = 1.0;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  const double eta = theorem_step_cap(params);

  Eigen::VectorXd v0(5);
  for (Eigen::Index i = 0; i < 5; ++i) v0[i] = 1.25 * beta * (xs[i] - horizon * horizon / xs[i]);
  const Eigen::MatrixXd cov0 = v0.asDiagonal();
  const MixingBound bound = mixing_time_bound(cov0, params, eta, 0.01);

  REQUIRE(bound.step_cap == Catch::Approx(eta).margin(1e-13));
  for (Eigen::Index i = 0; i < 5; ++i) {
    REQUIRE(bound.mode_contraction[i] > 0.0);
    REQUIRE(bound.mode_contraction[i] < 1.0);
  }
  REQUIRE(bound.contraction == Catch::Approx(bound.mode_contraction.maxCoeff()).margin(1e-13));

  const double start = bound.constant_rms * std::sqrt(5.0);
  const long direct = static_cast<long>(
      std::ceil(std::log(0.01 / start) / std::log(bound.contraction)));
  REQUIRE(bound.t_mix == direct);

  const Eigen::MatrixXd stat = stationary_covariance_nd(params);
  GaussianNd law{Eigen::VectorXd::Zero(5), cov0};
  double envelope = 1.5 * start;
  for (long k = 0; k <= 100; ++k) {
    REQUIRE(tv_bound(law.cov, stat) <= envelope + 1e-12);
    law = brwp_covariance_step_nd(law, params, eta);
    envelope *= bound.contraction;
  }

  // Guard rails: the certificate needs commuting data and a step below cap.
  Eigen::MatrixXd skew = cov0;
  skew(0, 1) = skew(1, 0) = 0.5;
  REQUIRE_THROWS_AS(mixing_time_bound(skew, params, eta, 0.01), std::invalid_argument);
  REQUIRE_THROWS_AS(mixing_time_bound(cov0, params, 1.01 * eta, 0.01), std::invalid_argument);
}

TEST_CASE("asymptotic mode contraction matches the linearized rate") {
  // The variance recurrence linearized at its fixed point contracts with
  // factor 1 - (eta/xi) 2 (xi - T)/(xi + T). The ratio of successive offsets
  // is measured once they are small enough for the linearization to hold to
  // well below the discrimination threshold against the same expression
  // without the leading factor of two.
  Eigen::VectorXd xs(5);
  xs << 10.0, 7.75, 5.5, 3.25, 1.0;
  const double horizon = 1.0 / 3.0, beta = 1.0;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  const double eta = theorem_step_cap(params);

  for (Eigen::Index mode = 0; mode < 5; ++mode) {
    const double xi = xs[mode];
    const double tau_inf = beta * xi * (1.0 - horizon * horizon / (xi * xi));
    double tau = 1.25 * tau_inf;
    double prev_offset = tau - tau_inf;
    double measured = 0.0;
    for (int k = 0; k < 4000 && measured == 0.0; ++k) {
      tau = eigenvalue_recurrence(tau, xi, horizon, beta, eta);
      const double offset = tau - tau_inf;
      if (std::abs(prev_offset) <= 1e-7 * tau_inf) measured = offset / prev_offset;
      prev_offset = offset;
    }
    const double with_factor_2 = 1.0 - (eta / xi) * 2.0 * (xi - horizon) / (xi + horizon);
    const double without_factor_2 = 1.0 - (eta / xi) * (xi - horizon) / (xi + horizon);
    REQUIRE(measured == Catch::Approx(with_factor_2).margin(1e-6));
    REQUIRE(std::abs(measured - without_factor_2) > 1e-3);
  }
}

TEST_CASE("exact normalizer matches the potential closed form and quadrature") {
  Eigen::VectorXd xs(2);
  xs << 2.0, 0.9;
  const double horizon = 0.35, beta = 1.1;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);
  const PotentialSpec pot = quadratic_potential(xs);

  Eigen::VectorXd y1(2), y2(2);
  y1 << 0.6, -1.1;
  y2 << -0.4, 0.9;
  REQUIRE(exact_log_normalizer(y1, params) ==
          Catch::Approx(pot.smoothing_log_z(y1, horizon, beta)).margin(1e-13));
  REQUIRE(exact_log_normalizer(y2, params) ==
          Catch::Approx(pot.smoothing_log_z(y2, horizon, beta)).margin(1e-13));

  // Product structure over modes: the normalizer difference between two
  // points is a sum of 1D quadratures. Both sides carry the same
  // y-independent constant, so only differences are comparable.
  const auto log_z_mode = [&](double y, double xi) {
    return std::log(oracle::trapezoid(
        [&](double z) {
          return std::exp(-(z * z / (2.0 * xi) + (z - y) * (z - y) / (2.0 * horizon)) /
                          (2.0 * beta));
        },
        -40.0, 40.0, 120000));
  };
  const double quad_diff = log_z_mode(y1[0], xs[0]) + log_z_mode(y1[1], xs[1]) -
                           log_z_mode(y2[0], xs[0]) - log_z_mode(y2[1], xs[1]);
  const double closed_diff = exact_log_normalizer(y1, params) - exact_log_normalizer(y2, params);
  REQUIRE(closed_diff == Catch::Approx(quad_diff).margin(1e-8));
}

TEST_CASE("commuting covariance flow matches a scalar rk4 reference") {
  Eigen::VectorXd xs(2);
  xs << 3.0, 1.2;
  const double horizon = 0.4, beta = 1.0;
  const ProximalParams params(Eigen::MatrixXd(xs.asDiagonal()), horizon, beta);

  Eigen::VectorXd s0(2);
  s0 << 2.0, 2.5;  // smoothed variances, inside the admissible region
  const Eigen::MatrixXd state0 = s0.asDiagonal();
  REQUIRE(spectral_half_plane_check(state0, params));

  const OdeTrajectory traj = noncommuting_ode_integrate(state0, params, 1e-3, 1.0, 100);
  REQUIRE(traj.times.size() == 1001);
  REQUIRE(traj.lyapunov.size() == traj.times.size());
  REQUIRE(traj.state_times.size() == 11);
  REQUIRE(traj.state_times.back() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(traj.states.size() == traj.state_times.size());

  // On a diagonal target the flow decouples into scalar equations
  //   d sv/dt = -2 beta (1/(beta xi) - 1/sv)(sv - 2 beta T / k),  k = 1 + T/xi,
  // integrated here with RK4 at a tenth of the Euler step.
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double xi = xs[i];
    const double k = 1.0 + horizon / xi;
    const double reference = oracle::rk4_integrate(
        [&](double, double sv) {
          return -2.0 * beta * (1.0 / (beta * xi) - 1.0 / sv) * (sv - 2.0 * beta * horizon / k);
        },
        s0[i], 0.0, 1.0, 1e-4);
    REQUIRE(traj.states.back()(i, i) == Catch::Approx(reference).epsilon(5e-3));
  }

  for (std::size_t k = 1; k < traj.lyapunov.size(); ++k)
    REQUIRE(traj.lyapunov[k] < traj.lyapunov[k - 1]);

  const Eigen::MatrixXd stat_smoothed = stationary_smoothed_covariance_nd(params);
  REQUIRE(frobenius_lyapunov(stat_smoothed, stat_smoothed) == 0.0);
  REQUIRE(traj.lyapunov.front() ==
          Catch::Approx(frobenius_lyapunov(state0, stat_smoothed)).margin(1e-12));

  // A smoothed covariance at or below 2 beta T K^{-1} sits outside the
  // admissible region.
  const Eigen::MatrixXd outside = beta * horizon * params.k_inverse();
  REQUIRE_FALSE(spectral_half_plane_check(detail::symmetrize(outside), params));
}
