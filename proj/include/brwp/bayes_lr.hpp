#pragma once

// Synthetic Bayesian logistic regression: dataset generation under the
// logistic conditional model, MAP estimation by the fixed gradient-descent
// schedule, and the two ensemble error metrics reported against the MAP
// point.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "brwp/common.hpp"
#include "brwp/ensemble.hpp"
#include "brwp/potential.hpp"
#include "brwp/rng.hpp"

namespace brwp {

struct LogisticDataset {
  Eigen::MatrixXd features;   // n x d, rows i.i.d. standard normal
  Eigen::VectorXd labels;     // entries in {0, 1}
  Eigen::VectorXd theta_gen;  // parameter the labels were drawn under
  std::uint64_t seed = 0;
};

// Covariate row i uses draws (i, 0..d-1) of the covariate stream; label i is
// the Bernoulli draw P(y=1) = sigmoid(theta_gen . x_i) from the label stream.
inline LogisticDataset generate_dataset(Eigen::Index n, Eigen::Index d,
                                        const Eigen::VectorXd& theta_gen, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_dataset: n and d must be positive");
  if (theta_gen.size() != d)
    throw std::invalid_argument("generate_dataset: theta_gen dimension mismatch");
  const CounterRng rng{seed};
  LogisticDataset ds;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.theta_gen = theta_gen;
  ds.seed = seed;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      ds.features(i, j) = rng.normal(RngStream::covariates, 0, static_cast<std::uint64_t>(i),
                                     static_cast<std::uint64_t>(j));
    const double p = detail::sigmoid(ds.features.row(i).dot(theta_gen));
    const double u = rng.uniform(RngStream::labels, 0, static_cast<std::uint64_t>(i), 0);
    ds.labels[i] = (u < p) ? 1.0 : 0.0;
  }
  return ds;
}

struct MapEstimate {
  Eigen::VectorXd theta;
  double gradient_norm = 0.0;
  long iterations = 0;
};

// Gradient descent from theta = (1, ..., 1): 1000 iterations at step 1e-3,
// 1000 at 1e-4, then up to 1e5 more at 1e-4 until the gradient norm reaches
// 1e-6. The fixed leading schedule keeps the trajectory reproducible; the
// tail makes theta* a stable oracle.
inline MapEstimate map_estimate(const PotentialSpec& pot) {
  constexpr double kTolerance = 1e-6;
  constexpr long kExtraCap = 100000;
  MapEstimate est;
  est.theta = Eigen::VectorXd::Ones(pot.dim);
  const auto advance = [&](double step, long count, bool until_tolerance) {
    for (long k = 0; k < count; ++k) {
      const Eigen::VectorXd g = pot.gradient(est.theta);
      if (until_tolerance && g.norm() <= kTolerance) return;
      est.theta -= step * g;
      ++est.iterations;
      if (est.theta.norm() > 1e6)
        throw numeric_error("map_estimate: diverged after " + std::to_string(est.iterations) +
                            " iterations");
    }
  };
  advance(1e-3, 1000, false);
  advance(1e-4, 1000, false);
  advance(1e-4, kExtraCap, true);
  est.gradient_norm = pot.gradient(est.theta).norm();
  return est;
}

// eps1 = |mean(theta_i) - theta*|_1 / d;
// eps2 = mean_i |theta_i - theta*|_1 / d. eps1 <= eps2 always.
struct EpsilonMetrics {
  double eps1 = 0.0;
  double eps2 = 0.0;
};

inline EpsilonMetrics epsilon_metrics(const ParticleEnsemble& e, const Eigen::VectorXd& theta_map) {
  if (e.size() < 1) throw std::invalid_argument("epsilon_metrics: empty ensemble");
  if (e.dim() != theta_map.size())
    throw std::invalid_argument("epsilon_metrics: dimension mismatch");
  const double d = static_cast<double>(e.dim());
  const Eigen::VectorXd mean = e.positions.colwise().mean().transpose();
  EpsilonMetrics m;
  m.eps1 = (mean - theta_map).lpNorm<1>() / d;
  m.eps2 = (e.positions.rowwise() - theta_map.transpose()).cwiseAbs().sum() /
           (d * static_cast<double>(e.size()));
  return m;
}

}  // namespace brwp
