#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "brwp/common.hpp"

namespace brwp {

// A target distribution presented through its potential V (density
// proportional to exp(-V)). Batch forms evaluate a whole ensemble (one row
// per point) and default to looping the scalar forms; built-in targets
// override them with matrix expressions since they dominate sampler cost.
//
// strong_convexity (m) and gradient_lipschitz (L) are metadata used for
// initialization scales and step-size warnings; zero means unknown.
// smoothing_log_z, when present, returns the log of the Gaussian-smoothing
// normalizer at y, up to a y-independent constant: log of the integral of
// exp(-(V(z) + |z - y|^2 / (2 T)) / (2 beta)) dz. Only quadratic targets
// provide it in closed form.
struct PotentialSpec {
  int dim = 0;
  std::string name;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> value_batch;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> gradient_batch;
  double strong_convexity = 0.0;
  double gradient_lipschitz = 0.0;
  std::function<double(const Eigen::VectorXd&, double, double)> smoothing_log_z;
};

namespace detail {

inline void install_default_batch(PotentialSpec& p) {
  if (!p.value_batch) {
    p.value_batch = [value = p.value](const Eigen::MatrixXd& pts) {
      Eigen::VectorXd out(pts.rows());
      for (Eigen::Index i = 0; i < pts.rows(); ++i) out[i] = value(pts.row(i).transpose());
      return out;
    };
  }
  if (!p.gradient_batch) {
    p.gradient_batch = [gradient = p.gradient](const Eigen::MatrixXd& pts) {
      Eigen::MatrixXd out(pts.rows(), pts.cols());
      for (Eigen::Index i = 0; i < pts.rows(); ++i)
        out.row(i) = gradient(pts.row(i).transpose()).transpose();
      return out;
    };
  }
}

// log(1 + exp(u)) without overflow for large |u|.
inline double log1pexp(double u) {
  return (u > 0.0) ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace detail

// Centered Gaussian target: V(x) = x' Sigma^{-1} x / 2 with Sigma SPD.
// m = 1 / max eigenvalue, L = 1 / min eigenvalue.
inline PotentialSpec quadratic_potential(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw std::invalid_argument("quadratic_potential: covariance must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + sigma.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("quadratic_potential: covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd xi = es.eigenvalues();
  if (xi.minCoeff() <= 0.0)
    throw std::invalid_argument("quadratic_potential: covariance must be positive definite");
  const Eigen::MatrixXd q = es.eigenvectors();
  const Eigen::MatrixXd sigma_inv =
      q * xi.cwiseInverse().asDiagonal() * q.transpose();

  PotentialSpec p;
  p.dim = static_cast<int>(sigma.rows());
  p.name = "quadratic";
  p.value = [sigma_inv](const Eigen::VectorXd& x) { return 0.5 * x.dot(sigma_inv * x); };
  p.gradient = [sigma_inv](const Eigen::VectorXd& x) -> Eigen::VectorXd { return sigma_inv * x; };
  p.value_batch = [sigma_inv](const Eigen::MatrixXd& pts) -> Eigen::VectorXd {
    return 0.5 * (pts * sigma_inv).cwiseProduct(pts).rowwise().sum();
  };
  p.gradient_batch = [sigma_inv](const Eigen::MatrixXd& pts) -> Eigen::MatrixXd {
    return pts * sigma_inv;
  };
  p.strong_convexity = 1.0 / xi.maxCoeff();
  p.gradient_lipschitz = 1.0 / xi.minCoeff();
  // Smoothing the Gaussian target by a width-T heat kernel has a Gaussian
  // normalizer whose log is a quadratic form; per eigendirection with target
  // variance s the coefficient is (1/(2T)) (1/(1 + T/s) - 1).
  p.smoothing_log_z = [q, xi](const Eigen::VectorXd& y, double horizon, double beta) {
    if (horizon <= 0.0 || beta <= 0.0)
      throw std::invalid_argument("smoothing_log_z: horizon and beta must be positive");
    const Eigen::VectorXd w = q.transpose() * y;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
      const double coeff = (1.0 / (1.0 + horizon / xi[i]) - 1.0) / (2.0 * horizon);
      acc += coeff * w[i] * w[i];
    }
    return acc / (2.0 * beta);
  };
  return p;
}

inline PotentialSpec quadratic_potential(const Eigen::VectorXd& eigenvalues) {
  return quadratic_potential(Eigen::MatrixXd(eigenvalues.asDiagonal()));
}

// Covariance R diag(eigenvalues) R' for an orthogonal R.
inline PotentialSpec quadratic_potential(const Eigen::VectorXd& eigenvalues,
                                         const Eigen::MatrixXd& rotation) {
  if (rotation.rows() != eigenvalues.size() || rotation.cols() != eigenvalues.size())
    throw std::invalid_argument("quadratic_potential: rotation shape mismatch");
  const Eigen::MatrixXd gram = rotation.transpose() * rotation;
  if ((gram - Eigen::MatrixXd::Identity(rotation.rows(), rotation.cols())).cwiseAbs().maxCoeff() >
      1e-10)
    throw std::invalid_argument("quadratic_potential: rotation is not orthogonal");
  return quadratic_potential(
      Eigen::MatrixXd(rotation * eigenvalues.asDiagonal() * rotation.transpose()));
}

// Symmetric two-component Gaussian mixture with unit covariances and modes
// at +-a: V(x) = |x - a|^2 / 2 - log(1 + exp(-2 x . a)), the exact potential
// of the mixture density up to a constant. m = 1 - |a|^2 when positive, L = 1.
inline PotentialSpec gaussian_mixture_potential(const Eigen::VectorXd& center) {
  if (center.size() < 1) throw std::invalid_argument("gaussian_mixture_potential: empty center");
  const Eigen::VectorXd a = center;
  PotentialSpec p;
  p.dim = static_cast<int>(a.size());
  p.name = "gaussian_mixture";
  p.value = [a](const Eigen::VectorXd& x) {
    return 0.5 * (x - a).squaredNorm() - detail::log1pexp(-2.0 * x.dot(a));
  };
  p.gradient = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x - a + 2.0 * detail::sigmoid(-2.0 * x.dot(a)) * a;
  };
  p.value_batch = [a](const Eigen::MatrixXd& pts) -> Eigen::VectorXd {
    const Eigen::ArrayXd u = -2.0 * (pts * a).array();
    const Eigen::ArrayXd softplus = u.max(0.0) + (-u.abs()).exp().log1p();
    const Eigen::ArrayXd sq = 0.5 * (pts.rowwise() - a.transpose()).rowwise().squaredNorm().array();
    return (sq - softplus).matrix();
  };
  p.gradient_batch = [a](const Eigen::MatrixXd& pts) -> Eigen::MatrixXd {
    const Eigen::ArrayXd w = 2.0 / (1.0 + (2.0 * (pts * a).array()).exp());
    return (pts.rowwise() - a.transpose()) + w.matrix() * a.transpose();
  };
  p.strong_convexity = std::max(0.0, 1.0 - a.squaredNorm());
  p.gradient_lipschitz = 1.0;
  return p;
}

// Planar ring-and-two-wells target, the negative log of
//   p(x) proportional to exp(-2 (|x| - 3)^2) (exp(-2 (x1 - 3)^2) + exp(-2 (x1 + 3)^2)):
//   V(x) = 2 (|x| - 3)^2 - log(exp(-2 (x1 - 3)^2) + exp(-2 (x1 + 3)^2)).
// Nonconvex; m and L are left unset. The radial direction is clamped near the
// origin so the gradient stays finite.
inline PotentialSpec bimodal_potential() {
  static constexpr double kRadius = 3.0;
  static constexpr double kWell = 3.0;
  static constexpr double kNormFloor = 1e-8;
  PotentialSpec p;
  p.dim = 2;
  p.name = "bimodal";
  p.value = [](const Eigen::VectorXd& x) {
    const double r = x.norm();
    const double qm = -2.0 * (x[0] - kWell) * (x[0] - kWell);
    const double qp = -2.0 * (x[0] + kWell) * (x[0] + kWell);
    const double hi = std::max(qm, qp);
    const double lse = hi + std::log1p(std::exp(std::min(qm, qp) - hi));
    return 2.0 * (r - kRadius) * (r - kRadius) - lse;
  };
  p.gradient = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double r = x.norm();
    Eigen::VectorXd g = (4.0 * (r - kRadius) / std::max(r, kNormFloor)) * x;
    // Softmax weight of the well at +3 along x1; the two quadratic exponents
    // differ by 24 x1.
    const double wp = detail::sigmoid(-24.0 * x[0]);
    const double wm = 1.0 - wp;
    g[0] += 4.0 * (x[0] - kWell) * wm + 4.0 * (x[0] + kWell) * wp;
    return g;
  };
  detail::install_default_batch(p);
  return p;
}

// Bayesian logistic regression with Gaussian prior matched to the empirical
// covariate covariance:
//   V(theta) = -y' X theta + sum_i log(1 + exp(x_i . theta))
//            + alpha theta' Sigma_X theta,     Sigma_X = X' X / n.
// The prior term is quadratic, so its gradient carries the factor 2.
// m = alpha min eig(Sigma_X), L = (n/4 + alpha) max eig(Sigma_X).
inline PotentialSpec logistic_regression_potential(const Eigen::MatrixXd& x,
                                                   const Eigen::VectorXd& y, double alpha) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw std::invalid_argument("logistic_regression_potential: empty design matrix");
  if (y.size() != n)
    throw std::invalid_argument("logistic_regression_potential: label count mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("logistic_regression_potential: labels must be 0 or 1");
  if (alpha < 0.0) throw std::invalid_argument("logistic_regression_potential: alpha must be >= 0");

  const Eigen::MatrixXd sigma_x = x.transpose() * x / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_x);

  PotentialSpec p;
  p.dim = static_cast<int>(x.cols());
  p.name = "logistic_regression";
  p.value = [x, y, sigma_x, alpha](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd u = x * theta;
    double acc = -y.dot(u) + alpha * theta.dot(sigma_x * theta);
    for (Eigen::Index i = 0; i < u.size(); ++i) acc += detail::log1pexp(u[i]);
    return acc;
  };
  p.gradient = [x, y, sigma_x, alpha](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    const Eigen::ArrayXd u = (x * theta).array();
    const Eigen::VectorXd s = (1.0 / (1.0 + (-u).exp())).matrix();
    return x.transpose() * (s - y) + 2.0 * alpha * (sigma_x * theta);
  };
  p.value_batch = [x, y, sigma_x, alpha](const Eigen::MatrixXd& thetas) -> Eigen::VectorXd {
    const Eigen::MatrixXd u = x * thetas.transpose();  // n rows, one column per theta
    const Eigen::ArrayXXd softplus = u.array().max(0.0) + (-u.array().abs()).exp().log1p();
    return softplus.colwise().sum().matrix().transpose() - (y.transpose() * u).transpose() +
           alpha * (thetas * sigma_x).cwiseProduct(thetas).rowwise().sum();
  };
  p.gradient_batch = [x, y, sigma_x, alpha](const Eigen::MatrixXd& thetas) -> Eigen::MatrixXd {
    const Eigen::MatrixXd u = x * thetas.transpose();
    const Eigen::MatrixXd s = (1.0 / (1.0 + (-u.array()).exp())).matrix();
    return (s.colwise() - y).transpose() * x + 2.0 * alpha * (thetas * sigma_x);
  };
  p.strong_convexity = alpha * es.eigenvalues().minCoeff();
  p.gradient_lipschitz =
      (0.25 * static_cast<double>(n) + alpha) * es.eigenvalues().maxCoeff();
  return p;
}

}  // namespace brwp
