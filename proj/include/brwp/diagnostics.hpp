#pragma once

// Ensemble statistics and the bridges from particle runs to the analytic
// engine: sample moments, distances to a Gaussian oracle, and the
// displacement-based stationarity measure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "brwp/ensemble.hpp"
#include "brwp/gaussian_analytic.hpp"

namespace brwp {

struct EnsembleStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // 1/N normalization (empirical Dirac mixture)
  // Mean over particles of the step distance to the previous snapshot,
  // matched by particle id; NaN when no previous snapshot was given.
  double displacement = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Rows gathered in ascending id order so moments are bitwise independent of
// storage order.
inline Eigen::MatrixXd id_ordered_positions(const ParticleEnsemble& e,
                                            std::vector<std::size_t>* rank_of_row = nullptr) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(e.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return e.ids[static_cast<std::size_t>(a)] < e.ids[static_cast<std::size_t>(b)];
  });
  Eigen::MatrixXd out(e.size(), e.dim());
  if (rank_of_row) rank_of_row->resize(order.size());
  for (Eigen::Index r = 0; r < e.size(); ++r) {
    out.row(r) = e.positions.row(order[static_cast<std::size_t>(r)]);
    if (rank_of_row) (*rank_of_row)[static_cast<std::size_t>(order[r])] = static_cast<std::size_t>(r);
  }
  return out;
}

}  // namespace detail

inline EnsembleStats ensemble_stats(const ParticleEnsemble& e) {
  if (e.size() < 1) throw std::invalid_argument("ensemble_stats: empty ensemble");
  const Eigen::MatrixXd pos = detail::id_ordered_positions(e);
  EnsembleStats s;
  s.mean = pos.colwise().sum().transpose() / static_cast<double>(e.size());
  const Eigen::MatrixXd centered = pos.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(e.size());
  return s;
}

inline EnsembleStats ensemble_stats(const ParticleEnsemble& e, const ParticleEnsemble& prev) {
  EnsembleStats s = ensemble_stats(e);
  if (prev.size() != e.size() || prev.dim() != e.dim())
    throw std::invalid_argument("ensemble_stats: snapshot shape mismatch");
  const Eigen::MatrixXd now = detail::id_ordered_positions(e);
  const Eigen::MatrixXd before = detail::id_ordered_positions(prev);
  std::vector<std::uint64_t> ids_now = e.ids, ids_before = prev.ids;
  std::sort(ids_now.begin(), ids_now.end());
  std::sort(ids_before.begin(), ids_before.end());
  if (ids_now != ids_before)
    throw std::invalid_argument("ensemble_stats: snapshots hold different particle ids");
  s.displacement = (now - before).rowwise().norm().sum() / static_cast<double>(e.size());
  return s;
}

// Distances from sample moments to a Gaussian oracle. The TV component is the
// two-Gaussian bound on the pair (sample, oracle); it is NaN when either
// covariance is singular (degenerate stationary laws, collapsed ensembles).
struct OracleDivergence {
  double mean_error = 0.0;  // euclidean
  double cov_error = 0.0;   // Frobenius
  double tv = std::numeric_limits<double>::quiet_NaN();
};

inline OracleDivergence oracle_divergence(const EnsembleStats& stats, const GaussianNd& oracle) {
  if (stats.mean.size() != oracle.mean.size() || stats.covariance.rows() != oracle.cov.rows())
    throw std::invalid_argument("oracle_divergence: dimension mismatch");
  OracleDivergence out;
  out.mean_error = (stats.mean - oracle.mean).norm();
  out.cov_error = (stats.covariance - oracle.cov).norm();
  try {
    out.tv = tv_bound(stats.covariance, oracle.cov);
  } catch (const std::invalid_argument&) {
    // singular covariance on either side: leave NaN
  }
  return out;
}

// Average displacement over the snapshots whose iteration lies in
// [first, last]. Entries must be finite: the window may not include the
// initial snapshot, which has no predecessor.
inline double stationarity_score(const std::vector<long>& iterations,
                                 const std::vector<double>& displacements, long first,
                                 long last) {
  if (iterations.size() != displacements.size())
    throw std::invalid_argument("stationarity_score: series length mismatch");
  double acc = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    if (iterations[i] < first || iterations[i] > last) continue;
    if (!std::isfinite(displacements[i]))
      throw std::invalid_argument("stationarity_score: window covers a snapshot without a "
                                  "displacement (iteration " +
                                  std::to_string(iterations[i]) + ")");
    acc += displacements[i];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("stationarity_score: window is empty");
  return acc / static_cast<double>(count);
}

}  // namespace brwp
