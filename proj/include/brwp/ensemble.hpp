#pragma once

// Particle state shared by every sampler. Each particle carries a stable id;
// all randomness and all order-sensitive reductions are keyed on ids rather
// than on storage order, so permuting the rows of an ensemble permutes the
// trajectory bit for bit.

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "brwp/rng.hpp"

namespace brwp {

struct ParticleEnsemble {
  Eigen::MatrixXd positions;      // N x d, row per particle
  std::vector<std::uint64_t> ids; // size N, unique
  long iteration = 0;

  Eigen::Index size() const { return positions.rows(); }
  Eigen::Index dim() const { return positions.cols(); }
};

// N particles drawn from N(mean, scale^2 I) using the initialization stream,
// ids 0..N-1. Draw d is the d-th coordinate of the particle.
inline ParticleEnsemble make_gaussian_ensemble(Eigen::Index count, const Eigen::VectorXd& mean,
                                               double scale, const CounterRng& rng) {
  if (count < 1) throw std::invalid_argument("make_gaussian_ensemble: count must be positive");
  if (scale < 0.0) throw std::invalid_argument("make_gaussian_ensemble: scale must be nonnegative");
  ParticleEnsemble e;
  e.positions.resize(count, mean.size());
  e.ids.resize(static_cast<std::size_t>(count));
  std::iota(e.ids.begin(), e.ids.end(), std::uint64_t{0});
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index d = 0; d < mean.size(); ++d)
      e.positions(i, d) =
          mean[d] + scale * rng.normal(RngStream::init, 0, e.ids[static_cast<std::size_t>(i)],
                                       static_cast<std::uint64_t>(d));
  return e;
}

}  // namespace brwp
