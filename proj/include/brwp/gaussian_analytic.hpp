#pragma once

// Closed-form evolution of Gaussian laws under the kernel-smoothed proximal
// sampler and under the unadjusted Langevin discretization, together with the
// spectral objects (contraction rates, mixing-time bound, matrix flow) that
// describe convergence for quadratic targets. Everything here is exact
// arithmetic on means and covariances; the particle samplers are checked
// against these maps in the tests.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwp/common.hpp"

namespace brwp {

struct Gaussian1D {
  double mean = 0.0;
  double var = 1.0;
};

// One application of the width-T Gaussian smoothing to N(mean, var) under the
// quadratic potential a x^2 / 2 at temperature beta:
//   mean -> mean / (1 + aT),  var -> var / (1 + aT)^2 + 2 beta T / (1 + aT).
// a = 0 is allowed and gives pure heat smoothing (mean, var + 2 beta T).
inline Gaussian1D rwp_gaussian_1d(const Gaussian1D& g, double a, double horizon, double beta) {
  if (a < 0.0 || horizon <= 0.0 || beta <= 0.0 || g.var <= 0.0)
    throw std::invalid_argument("rwp_gaussian_1d: requires a >= 0 and horizon, beta, var > 0");
  const double k = 1.0 + a * horizon;
  return {g.mean / k, g.var / (k * k) + 2.0 * beta * horizon / k};
}

// One step of the deterministic mean/variance recurrence for the interacting
// update x <- x - eta a x - eta beta score, with the score taken at the
// smoothed law:
//   mean_{k+1} = (1 - a eta + eta beta a T (1+aT) / (var_k + 2 beta T (1+aT))) mean_k
//   var_{k+1}  = (1 - a eta + eta beta (1+aT)^2 / (var_k + 2 beta T (1+aT)))^2 var_k.
inline Gaussian1D brwp_recurrence_1d(const Gaussian1D& g, double a, double horizon, double beta,
                                     double eta) {
  if (a < 0.0 || horizon <= 0.0 || beta <= 0.0 || eta <= 0.0 || g.var <= 0.0)
    throw std::invalid_argument(
        "brwp_recurrence_1d: requires a >= 0 and horizon, beta, eta, var > 0");
  const double k = 1.0 + a * horizon;
  const double denom = g.var + 2.0 * beta * horizon * k;
  const double mean_factor = 1.0 - a * eta + eta * beta * a * horizon * k / denom;
  const double sd_factor = 1.0 - a * eta + eta * beta * k * k / denom;
  return {mean_factor * g.mean, sd_factor * sd_factor * g.var};
}

inline std::vector<Gaussian1D> iterate_brwp_1d(const Gaussian1D& g0, double a, double horizon,
                                               double beta, double eta, long steps) {
  std::vector<Gaussian1D> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(g0);
  for (long i = 0; i < steps; ++i) out.push_back(brwp_recurrence_1d(out.back(), a, horizon, beta, eta));
  return out;
}

// aT >= 1 collapses the stationary law to a point mass.
inline bool degenerate_horizon(double a, double horizon) { return a * horizon >= 1.0; }

inline double brwp_stationary_var_1d(double a, double horizon, double beta) {
  if (a <= 0.0 || horizon <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("brwp_stationary_var_1d: parameters must be positive");
  if (degenerate_horizon(a, horizon)) return 0.0;
  return beta / a * (1.0 - a * a * horizon * horizon);
}

// Exact mean/variance of the unadjusted Langevin chain on the 1D quadratic
// target, in closed form at every step:
//   mean_k = r^k mean_0,  var_k = r^{2k} var_0 + 2 beta eta (1 - r^{2k}) / (1 - r^2),
// with r = 1 - a eta.
inline std::vector<Gaussian1D> ula_recurrence_1d(const Gaussian1D& g0, double a, double beta,
                                                 double eta, long steps) {
  if (a <= 0.0 || beta <= 0.0 || eta <= 0.0 || g0.var < 0.0)
    throw std::invalid_argument("ula_recurrence_1d: parameters must be positive");
  if (a * eta >= 1.0)
    throw std::invalid_argument("ula_recurrence_1d: requires a eta < 1");
  const double r = 1.0 - a * eta;
  const double r2 = r * r;
  std::vector<Gaussian1D> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  double rk = 1.0, r2k = 1.0;
  for (long k = 0; k <= steps; ++k) {
    out.push_back({rk * g0.mean, r2k * g0.var + 2.0 * beta * eta * (1.0 - r2k) / (1.0 - r2)});
    rk *= r;
    r2k *= r2;
  }
  return out;
}

inline double ula_stationary_var_1d(double a, double beta, double eta) {
  if (a <= 0.0 || beta <= 0.0 || eta <= 0.0 || eta * a >= 2.0)
    throw std::invalid_argument("ula_stationary_var_1d: requires 0 < a eta < 2");
  return 2.0 * beta / ((2.0 - a * eta) * a);
}

struct GaussianNd {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Quadratic target x' Sigma^{-1} x / 2 together with the smoothing horizon T
// and temperature beta; caches the spectral decomposition and the commuting
// factor K = I + T Sigma^{-1} used by every map below.
class ProximalParams {
 public:
  ProximalParams(Eigen::MatrixXd sigma, double horizon, double beta)
      : sigma_(std::move(sigma)), horizon_(horizon), beta_(beta) {
    if (sigma_.rows() != sigma_.cols() || sigma_.rows() < 1)
      throw std::invalid_argument("ProximalParams: sigma must be square");
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + sigma_.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("ProximalParams: sigma must be symmetric");
    if (horizon_ <= 0.0 || beta_ <= 0.0)
      throw std::invalid_argument("ProximalParams: horizon and beta must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_);
    xi_ = es.eigenvalues();
    q_ = es.eigenvectors();
    if (xi_.minCoeff() <= 0.0)
      throw std::invalid_argument("ProximalParams: sigma must be positive definite");
    const Eigen::ArrayXd kd = 1.0 + horizon_ / xi_.array();
    k_ = q_ * kd.matrix().asDiagonal() * q_.transpose();
    k_inv_ = q_ * kd.inverse().matrix().asDiagonal() * q_.transpose();
    sigma_inv_ = q_ * xi_.cwiseInverse().asDiagonal() * q_.transpose();
  }

  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double horizon() const { return horizon_; }
  double beta() const { return beta_; }
  Eigen::Index dim() const { return sigma_.rows(); }
  const Eigen::VectorXd& eigenvalues() const { return xi_; }
  const Eigen::MatrixXd& eigenvectors() const { return q_; }
  const Eigen::MatrixXd& k() const { return k_; }
  const Eigen::MatrixXd& k_inverse() const { return k_inv_; }
  const Eigen::MatrixXd& sigma_inverse() const { return sigma_inv_; }

 private:
  Eigen::MatrixXd sigma_;
  double horizon_;
  double beta_;
  Eigen::VectorXd xi_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd k_;
  Eigen::MatrixXd k_inv_;
  Eigen::MatrixXd sigma_inv_;
};

namespace detail {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw numeric_error(std::string(who) + ": matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

inline double log_det_spd(const Eigen::MatrixXd& m, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(who) + ": matrix is not positive definite");
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace detail

// Smoothing map on Gaussian laws: mean -> K^{-1} mean,
// cov -> K^{-1} cov K^{-1} + 2 beta T K^{-1}.
inline GaussianNd rwp_gaussian_nd(const GaussianNd& g, const ProximalParams& p) {
  if (g.mean.size() != p.dim() || g.cov.rows() != p.dim() || g.cov.cols() != p.dim())
    throw std::invalid_argument("rwp_gaussian_nd: dimension mismatch");
  GaussianNd out;
  out.mean = p.k_inverse() * g.mean;
  out.cov = detail::symmetrize(p.k_inverse() * g.cov * p.k_inverse() +
                               2.0 * p.beta() * p.horizon() * p.k_inverse());
  return out;
}

// One step of the deterministic law evolution: with the smoothed law
// (mu~, Sigma~) and M = I - eta Sigma^{-1} + eta beta Sigma~^{-1},
//   mean <- (I - eta Sigma^{-1}) mean + eta beta Sigma~^{-1} (mean - mu~)
//   cov  <- M cov M'.
inline GaussianNd brwp_covariance_step_nd(const GaussianNd& g, const ProximalParams& p,
                                          double eta) {
  if (eta <= 0.0) throw std::invalid_argument("brwp_covariance_step_nd: eta must be positive");
  const GaussianNd smoothed = rwp_gaussian_nd(g, p);
  const Eigen::MatrixXd smoothed_inv =
      detail::spd_inverse(smoothed.cov, "brwp_covariance_step_nd (smoothed covariance)");
  const Eigen::Index d = p.dim();
  const Eigen::MatrixXd drift = Eigen::MatrixXd::Identity(d, d) - eta * p.sigma_inverse();
  const Eigen::MatrixXd m = drift + eta * p.beta() * smoothed_inv;
  GaussianNd out;
  out.mean = drift * g.mean + eta * p.beta() * (smoothed_inv * (g.mean - smoothed.mean));
  out.cov = detail::symmetrize(m * g.cov * m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw numeric_error("brwp_covariance_step_nd: step too large, updated covariance has min "
                        "eigenvalue " +
                        g17(es.eigenvalues().minCoeff()));
  return out;
}

inline std::vector<GaussianNd> iterate_brwp_nd(const GaussianNd& g0, const ProximalParams& p,
                                               double eta, long steps) {
  std::vector<GaussianNd> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(g0);
  for (long i = 0; i < steps; ++i) out.push_back(brwp_covariance_step_nd(out.back(), p, eta));
  return out;
}

// Stationary covariance of the discrete law evolution:
//   Sigma_inf = beta (I - T Sigma^{-1}) Sigma (I + T Sigma^{-1}) = beta (Sigma - T^2 Sigma^{-1}).
// Requires T <= min eigenvalue of Sigma; equality gives a singular (degenerate)
// stationary law.
inline Eigen::MatrixXd stationary_covariance_nd(const ProximalParams& p) {
  if (p.horizon() > p.eigenvalues().minCoeff())
    throw std::invalid_argument("stationary_covariance_nd: horizon exceeds the smallest target "
                                "eigenvalue, stationary covariance would be indefinite");
  const Eigen::ArrayXd vals =
      p.beta() * p.eigenvalues().array() *
      (1.0 - (p.horizon() * p.horizon()) / (p.eigenvalues().array() * p.eigenvalues().array()));
  return p.eigenvectors() * vals.matrix().asDiagonal() * p.eigenvectors().transpose();
}

// The smoothed law at stationarity is exactly the tempered target.
inline Eigen::MatrixXd stationary_smoothed_covariance_nd(const ProximalParams& p) {
  return p.beta() * p.sigma();
}

// Total-variation upper bound between centered Gaussians:
//   (3/2) min(1, sqrt(sum lambda_i^2)),
// lambda_i the eigenvalues of Sigma1^{-1} Sigma2 - I, evaluated through the
// symmetric similar matrix Sigma1^{-1/2} Sigma2 Sigma1^{-1/2} - I.
inline double tv_bound(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2) {
  if (sigma1.rows() != sigma1.cols() || sigma2.rows() != sigma2.cols() ||
      sigma1.rows() != sigma2.rows())
    throw std::invalid_argument("tv_bound: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(detail::symmetrize(sigma1));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("tv_bound: first covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd half = l.triangularView<Eigen::Lower>().solve(detail::symmetrize(sigma2));
  const Eigen::MatrixXd similar =
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(half.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrize(similar));
  const Eigen::ArrayXd lambda = es.eigenvalues().array() - 1.0;
  return 1.5 * std::min(1.0, std::sqrt(lambda.square().sum()));
}

// KL divergence between equal-mean Gaussians N(m, Sigma1) and N(m, Sigma2):
//   (1/2) (log det Sigma2 - log det Sigma1 - d + tr(Sigma2^{-1} Sigma1)).
inline double kl_gaussians(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2) {
  if (sigma1.rows() != sigma1.cols() || sigma2.rows() != sigma2.cols() ||
      sigma1.rows() != sigma2.rows())
    throw std::invalid_argument("kl_gaussians: dimension mismatch");
  const double d = static_cast<double>(sigma1.rows());
  const double logdet1 = detail::log_det_spd(sigma1, "kl_gaussians");
  const double logdet2 = detail::log_det_spd(sigma2, "kl_gaussians");
  Eigen::LLT<Eigen::MatrixXd> llt2(detail::symmetrize(sigma2));
  const double trace_term = llt2.solve(sigma1).trace();
  return 0.5 * (logdet2 - logdet1 - d + trace_term);
}

// Per-mode contraction strength at offset gamma from the stationary point,
// for a mode with target eigenvalue xi:
//   omega(gamma) = (2 s + gamma)(s + gamma) / ((s + gamma)^2 + 2 beta T),
// with s = sqrt(beta xi (1 - T/xi)). omega(0) = 2 (xi - T) / (xi + T) and
// omega -> 1 as gamma -> infinity.
inline double omega(double gamma, double xi, double horizon, double beta) {
  if (xi <= horizon)
    throw std::invalid_argument("omega: requires horizon < xi");
  if (beta <= 0.0 || horizon <= 0.0)
    throw std::invalid_argument("omega: horizon and beta must be positive");
  const double s = std::sqrt(beta * xi * (1.0 - horizon / xi));
  if (gamma <= -s) throw std::invalid_argument("omega: gamma out of domain");
  const double sg = s + gamma;
  return (2.0 * s + gamma) * sg / (sg * sg + 2.0 * beta * horizon);
}

// Supremum of omega over its domain,
//   Delta = (sqrt((xi + T) / (2T)) + 1) / 2,
// independent of beta. eta <= xi / Delta keeps every mode contraction factor
// in (0, 1).
inline double delta_cap(double xi, double horizon) {
  if (xi <= horizon || horizon <= 0.0)
    throw std::invalid_argument("delta_cap: requires 0 < horizon < xi");
  return 0.5 * (std::sqrt((xi + horizon) / (2.0 * horizon)) + 1.0);
}

// Variance recurrence of a single spectral mode (target eigenvalue xi):
//   tau <- (1 - eta/xi + eta beta (1 + T/xi)^2 / (tau + 2 beta T (1 + T/xi)))^2 tau.
inline double eigenvalue_recurrence(double tau, double xi, double horizon, double beta,
                                    double eta) {
  if (tau <= 0.0 || xi <= 0.0)
    throw std::invalid_argument("eigenvalue_recurrence: tau and xi must be positive");
  const double k = 1.0 + horizon / xi;
  const double factor = 1.0 - eta / xi + eta * beta * k * k / (tau + 2.0 * beta * horizon * k);
  return factor * factor * tau;
}

// Largest step size admitted by the contraction analysis: min_i xi_i / Delta_i.
inline double theorem_step_cap(const ProximalParams& p) {
  double cap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.dim(); ++i)
    cap = std::min(cap, p.eigenvalues()[i] / delta_cap(p.eigenvalues()[i], p.horizon()));
  return cap;
}

// Mixing-time certificate for a commuting Gaussian initialization.
//
// Per mode i: tau_inf = beta xi (1 - T^2/xi^2), the square-root offset
// gamma0 = (sqrt(tau0) - sqrt(tau_inf)) / sqrt(1 + T/xi), and the certified
// per-step factor c_i = 1 - (eta/xi) min(omega(gamma0), 2 (xi-T)/(xi+T)).
// Two prefactor conventions are exposed: the root-mean-square of the initial
// relative spectral gaps (used for t_mix) and 3/2 times their maximum.
struct MixingBound {
  Eigen::VectorXd tau0;
  Eigen::VectorXd tau_inf;
  Eigen::VectorXd gamma0;
  Eigen::VectorXd mode_contraction;
  double constant_rms = 0.0;
  double constant_max = 0.0;
  double contraction = 0.0;
  double step_cap = 0.0;
  long t_mix = 0;
};

inline MixingBound mixing_time_bound(const Eigen::MatrixXd& cov0, const ProximalParams& p,
                                     double eta, double delta) {
  const Eigen::Index d = p.dim();
  if (cov0.rows() != d || cov0.cols() != d)
    throw std::invalid_argument("mixing_time_bound: dimension mismatch");
  if (delta <= 0.0) throw std::invalid_argument("mixing_time_bound: delta must be positive");
  if (p.horizon() >= p.eigenvalues().minCoeff())
    throw std::invalid_argument("mixing_time_bound: requires horizon < min eigenvalue");
  const double comm_scale = cov0.cwiseAbs().maxCoeff() * p.sigma().cwiseAbs().maxCoeff();
  if ((cov0 * p.sigma() - p.sigma() * cov0).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + comm_scale))
    throw std::invalid_argument("mixing_time_bound: initialization must commute with the target");

  MixingBound out;
  out.step_cap = theorem_step_cap(p);
  if (eta <= 0.0 || eta > out.step_cap * (1.0 + 1e-12))
    throw std::invalid_argument("mixing_time_bound: eta must lie in (0, " + g17(out.step_cap) +
                                "]");

  const Eigen::MatrixXd cov0_modes = p.eigenvectors().transpose() * cov0 * p.eigenvectors();
  out.tau0 = cov0_modes.diagonal();
  if (out.tau0.minCoeff() <= 0.0)
    throw std::invalid_argument("mixing_time_bound: initialization must be positive definite");

  out.tau_inf.resize(d);
  out.gamma0.resize(d);
  out.mode_contraction.resize(d);
  double sum_sq = 0.0, max_abs = 0.0, worst = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double xi = p.eigenvalues()[i];
    out.tau_inf[i] = p.beta() * xi * (1.0 - p.horizon() * p.horizon() / (xi * xi));
    out.gamma0[i] = (std::sqrt(out.tau0[i]) - std::sqrt(out.tau_inf[i])) /
                    std::sqrt(1.0 + p.horizon() / xi);
    const double omega0 = 2.0 * (xi - p.horizon()) / (xi + p.horizon());
    const double strength = std::min(omega(out.gamma0[i], xi, p.horizon(), p.beta()), omega0);
    out.mode_contraction[i] = 1.0 - eta / xi * strength;
    worst = std::max(worst, out.mode_contraction[i]);
    const double lambda0 = out.tau0[i] / out.tau_inf[i] - 1.0;
    sum_sq += lambda0 * lambda0;
    max_abs = std::max(max_abs, std::abs(lambda0));
  }
  out.contraction = worst;
  out.constant_rms = std::sqrt(sum_sq / static_cast<double>(d));
  out.constant_max = 1.5 * max_abs;

  const double start = out.constant_rms * std::sqrt(static_cast<double>(d));
  if (start <= delta) {
    out.t_mix = 0;
  } else {
    out.t_mix = static_cast<long>(std::ceil(std::log(delta / start) / std::log(out.contraction)));
  }
  return out;
}

// Log of the Gaussian-smoothing normalizer at y, up to a y-independent
// constant: (1/(2 beta)) y' ((2T (I + T Sigma^{-1}))^{-1} - I/(2T)) y.
inline double exact_log_normalizer(const Eigen::VectorXd& y, const ProximalParams& p) {
  if (y.size() != p.dim()) throw std::invalid_argument("exact_log_normalizer: dimension mismatch");
  const Eigen::VectorXd w = p.eigenvectors().transpose() * y;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.dim(); ++i) {
    const double k = 1.0 + p.horizon() / p.eigenvalues()[i];
    acc += (1.0 / k - 1.0) / (2.0 * p.horizon()) * w[i] * w[i];
  }
  return acc / (2.0 * p.beta());
}

// Squared Frobenius distance of inverse smoothed covariances; the Lyapunov
// function of the continuous-time matrix flow below.
inline double frobenius_lyapunov(const Eigen::MatrixXd& smoothed_cov,
                                 const Eigen::MatrixXd& stationary_smoothed_cov) {
  const Eigen::MatrixXd target_inv =
      detail::spd_inverse(stationary_smoothed_cov, "frobenius_lyapunov (stationary)");
  const Eigen::MatrixXd state_inv = detail::spd_inverse(smoothed_cov, "frobenius_lyapunov");
  return (target_inv - state_inv).squaredNorm();
}

// The admissible region of the flow: smoothed covariance strictly above
// 2 beta T K^{-1}. Inside it the linearization factor I - 4 beta T
// (smoothed)^{-1} K^{-1} has spectral radius below one, which is verified
// numerically on every call that returns true.
inline bool spectral_half_plane_check(const Eigen::MatrixXd& smoothed_cov,
                                      const ProximalParams& p) {
  const Eigen::MatrixXd gap =
      detail::symmetrize(smoothed_cov - 2.0 * p.beta() * p.horizon() * p.k_inverse());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap);
  if (es.eigenvalues().minCoeff() <= 0.0) return false;
  const Eigen::MatrixXd state_inv = detail::spd_inverse(smoothed_cov, "spectral_half_plane_check");
  const Eigen::MatrixXd factor =
      Eigen::MatrixXd::Identity(p.dim(), p.dim()) -
      4.0 * p.beta() * p.horizon() * state_inv * p.k_inverse();
  const double rho = Eigen::EigenSolver<Eigen::MatrixXd>(factor).eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0)
    throw numeric_error("spectral_half_plane_check: spectral radius " + g17(rho) +
                        " contradicts the half-plane condition");
  return true;
}

// Explicit-Euler integration of the smoothed-covariance flow
//   d S / dt = -beta K^{-1} ((S_inf^{-1} - S^{-1}) C + C (S_inf^{-1} - S^{-1})) K^{-1},
//   C = K S K - 2 beta T K,  S_inf = beta Sigma,
// with symmetrization after every step. The Lyapunov value is recorded at
// every step; states are stored every state_stride steps (and at the end).
struct OdeTrajectory {
  std::vector<double> times;            // one entry per step, including t = 0
  std::vector<double> lyapunov;         // aligned with times
  std::vector<double> state_times;      // subsampled
  std::vector<Eigen::MatrixXd> states;  // aligned with state_times
};

inline OdeTrajectory noncommuting_ode_integrate(const Eigen::MatrixXd& smoothed_cov0,
                                                const ProximalParams& p, double dt, double t_end,
                                                long state_stride = 1) {
  if (dt <= 0.0 || t_end <= 0.0)
    throw std::invalid_argument("noncommuting_ode_integrate: dt and t_end must be positive");
  if (state_stride < 1)
    throw std::invalid_argument("noncommuting_ode_integrate: state_stride must be >= 1");
  if (smoothed_cov0.rows() != p.dim() || smoothed_cov0.cols() != p.dim())
    throw std::invalid_argument("noncommuting_ode_integrate: dimension mismatch");

  const Eigen::MatrixXd target_inv =
      detail::spd_inverse(p.beta() * p.sigma(), "noncommuting_ode_integrate (stationary)");
  const double two_bt = 2.0 * p.beta() * p.horizon();
  const long steps = std::lround(t_end / dt);

  OdeTrajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.lyapunov.reserve(static_cast<std::size_t>(steps) + 1);

  Eigen::MatrixXd state = detail::symmetrize(smoothed_cov0);
  {
    Eigen::LLT<Eigen::MatrixXd> llt(state);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "noncommuting_ode_integrate: initialization must be positive definite");
  }
  for (long step = 0; step <= steps; ++step) {
    const double t = step * dt;
    Eigen::LLT<Eigen::MatrixXd> llt(state);
    if (llt.info() != Eigen::Success)
      throw numeric_error("noncommuting_ode_integrate: state lost positive definiteness at t = " +
                          g17(t) + "; reduce dt");
    const Eigen::MatrixXd state_inv =
        llt.solve(Eigen::MatrixXd::Identity(p.dim(), p.dim()));
    traj.times.push_back(t);
    traj.lyapunov.push_back((target_inv - state_inv).squaredNorm());
    if (step % state_stride == 0 || step == steps) {
      traj.state_times.push_back(t);
      traj.states.push_back(state);
    }
    if (step == steps) break;
    const Eigen::MatrixXd cov_t = p.k() * state * p.k() - two_bt * p.k();
    const Eigen::MatrixXd diff = target_inv - state_inv;
    const Eigen::MatrixXd deriv =
        -p.beta() * p.k_inverse() * (diff * cov_t + cov_t * diff) * p.k_inverse();
    state = detail::symmetrize(state + dt * deriv);
  }
  return traj;
}

}  // namespace brwp
