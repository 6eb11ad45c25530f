#pragma once

// The three particle updates: unadjusted Langevin, Metropolis-adjusted
// Langevin, and the deterministic kernel-smoothed proximal update (BRWP).
// All randomness comes from counter streams keyed on particle ids and the
// iteration index, and every order-sensitive reduction runs in ascending id
// order, so trajectories are reproducible bit for bit across storage
// permutations and thread counts.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwp/common.hpp"
#include "brwp/ensemble.hpp"
#include "brwp/potential.hpp"
#include "brwp/rng.hpp"

namespace brwp {

enum class NormalizerMode { monte_carlo, exact };
enum class Method { ula, mala, brwp };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::ula: return "ula";
    case Method::mala: return "mala";
    case Method::brwp: return "brwp";
  }
  throw std::invalid_argument("method_name: unknown method");
}

inline Method parse_method(const std::string& name) {
  if (name == "ula") return Method::ula;
  if (name == "mala") return Method::mala;
  if (name == "brwp") return Method::brwp;
  throw std::invalid_argument("parse_method: unknown method '" + name + "'");
}

struct SamplerConfig {
  double eta = 0.1;                // step size
  double beta = 1.0;               // temperature
  double horizon = 0.1;            // smoothing horizon T (brwp only)
  int mc_samples = 10;             // draws per particle for the normalizer
  Eigen::Index subsample = 0;      // interaction set size; 0 = full ensemble
  std::uint64_t seed = 0;
  NormalizerMode normalizer = NormalizerMode::monte_carlo;
  int threads = 1;                 // 0 = hardware concurrency
};

namespace detail {

inline void check_common(const ParticleEnsemble& e, const PotentialSpec& pot,
                         const SamplerConfig& cfg, const char* who) {
  if (e.dim() != pot.dim)
    throw std::invalid_argument(std::string(who) + ": ensemble dimension " +
                                std::to_string(e.dim()) + " does not match potential dimension " +
                                std::to_string(pot.dim));
  if (e.size() < 1) throw std::invalid_argument(std::string(who) + ": empty ensemble");
  if (static_cast<Eigen::Index>(e.ids.size()) != e.size())
    throw std::invalid_argument(std::string(who) + ": id count does not match particle count");
  if (cfg.eta <= 0.0 || cfg.beta <= 0.0)
    throw std::invalid_argument(std::string(who) + ": eta and beta must be positive");
}

// Standard-normal matrix aligned with ensemble storage, keyed by particle id
// so the draw does not depend on row order. Column d is draw index d.
inline Eigen::MatrixXd id_keyed_normals(const ParticleEnsemble& e, const CounterRng& rng,
                                        RngStream stream, int threads) {
  Eigen::MatrixXd z(e.size(), e.dim());
  const std::uint64_t iter = static_cast<std::uint64_t>(e.iteration);
  parallel_for(e.size(), threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i)
      for (Eigen::Index d = 0; d < e.dim(); ++d)
        z(i, d) = rng.normal(stream, iter, e.ids[static_cast<std::size_t>(i)],
                             static_cast<std::uint64_t>(d));
  });
  return z;
}

inline void require_finite_rows(const ParticleEnsemble& e, const char* who) {
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (!e.positions.row(i).allFinite())
      throw numeric_error(std::string(who) + ": non-finite position for particle " +
                          std::to_string(e.ids[static_cast<std::size_t>(i)]) + " at iteration " +
                          std::to_string(e.iteration));
}

}  // namespace detail

// X <- X - eta grad V(X) + sqrt(2 beta eta) Z.
inline void ula_step(ParticleEnsemble& e, const PotentialSpec& pot, const SamplerConfig& cfg) {
  detail::check_common(e, pot, cfg, "ula_step");
  const CounterRng rng{cfg.seed};
  const Eigen::MatrixXd grad = pot.gradient_batch(e.positions);
  const Eigen::MatrixXd z = detail::id_keyed_normals(e, rng, RngStream::ula_noise, cfg.threads);
  e.positions.noalias() -= cfg.eta * grad;
  e.positions.noalias() += std::sqrt(2.0 * cfg.beta * cfg.eta) * z;
  detail::require_finite_rows(e, "ula_step");
  ++e.iteration;
}

// Log acceptance ratio for the Langevin proposal x -> proposal at temperature
// beta:
//   [-V(y)/beta - |x - y + eta grad V(y)|^2 / (4 beta eta)]
// - [-V(x)/beta - |y - x + eta grad V(x)|^2 / (4 beta eta)].
inline double mala_log_accept(const Eigen::VectorXd& x, const Eigen::VectorXd& proposal,
                              const PotentialSpec& pot, double eta, double beta) {
  if (eta <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("mala_log_accept: eta and beta must be positive");
  const double vx = pot.value(x);
  const double vy = pot.value(proposal);
  const Eigen::VectorXd gx = pot.gradient(x);
  const Eigen::VectorXd gy = pot.gradient(proposal);
  const double fwd = (proposal - x + eta * gx).squaredNorm();
  const double rev = (x - proposal + eta * gy).squaredNorm();
  return (vx - vy) / beta + (fwd - rev) / (4.0 * beta * eta);
}

// Langevin proposal with Metropolis correction; returns the number of
// accepted moves. A proposal with non-finite log ratio is rejected.
inline long mala_step(ParticleEnsemble& e, const PotentialSpec& pot, const SamplerConfig& cfg) {
  detail::check_common(e, pot, cfg, "mala_step");
  const CounterRng rng{cfg.seed};
  const std::uint64_t iter = static_cast<std::uint64_t>(e.iteration);
  const Eigen::MatrixXd gx = pot.gradient_batch(e.positions);
  const Eigen::VectorXd vx = pot.value_batch(e.positions);
  const Eigen::MatrixXd z = detail::id_keyed_normals(e, rng, RngStream::mala_noise, cfg.threads);
  const Eigen::MatrixXd proposal =
      e.positions - cfg.eta * gx + std::sqrt(2.0 * cfg.beta * cfg.eta) * z;
  const Eigen::MatrixXd gy = pot.gradient_batch(proposal);
  const Eigen::VectorXd vy = pot.value_batch(proposal);
  const Eigen::VectorXd fwd =
      (proposal - e.positions + cfg.eta * gx).rowwise().squaredNorm();
  const Eigen::VectorXd rev =
      (e.positions - proposal + cfg.eta * gy).rowwise().squaredNorm();
  const Eigen::ArrayXd log_alpha =
      (vx - vy).array() / cfg.beta + (fwd - rev).array() / (4.0 * cfg.beta * cfg.eta);
  long accepted = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double u =
        rng.uniform(RngStream::mala_accept, iter, e.ids[static_cast<std::size_t>(i)], 0);
    if (std::log(u) < log_alpha[i]) {
      e.positions.row(i) = proposal.row(i);
      ++accepted;
    }
  }
  detail::require_finite_rows(e, "mala_step");
  ++e.iteration;
  return accepted;
}

// The interaction set for one BRWP step: particle ids in ascending order,
// their positions, and the log normalizer attached to each.
struct BrwpSelection {
  std::vector<std::uint64_t> ids;
  Eigen::MatrixXd positions;
  Eigen::VectorXd log_z;
};

// Selects the interaction set (all particles, or a without-replacement draw of
// cfg.subsample of them keyed on the iteration) and computes per-particle log
// normalizers. Monte Carlo mode draws cfg.mc_samples points z ~ N(x_j, 2 beta
// T I) per particle and averages exp(-V(z) / (2 beta)) in the log domain;
// exact mode evaluates the potential's closed-form normalizer.
inline BrwpSelection brwp_normalizers(const ParticleEnsemble& e, const PotentialSpec& pot,
                                      const SamplerConfig& cfg) {
  detail::check_common(e, pot, cfg, "brwp_normalizers");
  if (cfg.horizon <= 0.0)
    throw std::invalid_argument("brwp_normalizers: horizon must be positive");
  if (cfg.subsample < 0 || cfg.subsample > e.size())
    throw std::invalid_argument("brwp_normalizers: subsample must lie in [0, N]");
  const CounterRng rng{cfg.seed};
  const std::uint64_t iter = static_cast<std::uint64_t>(e.iteration);

  // Row lookup in ascending id order; the trajectory must not depend on how
  // rows happen to be stored.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(e.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return e.ids[static_cast<std::size_t>(a)] < e.ids[static_cast<std::size_t>(b)];
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (e.ids[static_cast<std::size_t>(order[i - 1])] ==
        e.ids[static_cast<std::size_t>(order[i])])
      throw std::invalid_argument("brwp_normalizers: particle ids must be unique");

  if (cfg.subsample > 0 && cfg.subsample < e.size()) {
    // Fisher-Yates over the id-sorted list, keyed on the iteration; the
    // chosen id set is a function of (seed, iteration, id set) only.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::uint64_t j = rng.index(static_cast<std::uint64_t>(i) + 1, RngStream::subsample,
                                        iter, 0, static_cast<std::uint64_t>(i));
      std::swap(order[i], order[static_cast<std::size_t>(j)]);
    }
    order.resize(static_cast<std::size_t>(cfg.subsample));
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return e.ids[static_cast<std::size_t>(a)] < e.ids[static_cast<std::size_t>(b)];
    });
  }

  BrwpSelection sel;
  const Eigen::Index m = static_cast<Eigen::Index>(order.size());
  sel.ids.resize(static_cast<std::size_t>(m));
  sel.positions.resize(m, e.dim());
  for (Eigen::Index j = 0; j < m; ++j) {
    sel.ids[static_cast<std::size_t>(j)] = e.ids[static_cast<std::size_t>(order[j])];
    sel.positions.row(j) = e.positions.row(order[static_cast<std::size_t>(j)]);
  }

  sel.log_z.resize(m);
  if (cfg.normalizer == NormalizerMode::exact) {
    if (!pot.smoothing_log_z)
      throw std::invalid_argument(
          "brwp_normalizers: potential has no closed-form normalizer; use monte_carlo");
    for (Eigen::Index j = 0; j < m; ++j)
      sel.log_z[j] = pot.smoothing_log_z(sel.positions.row(j).transpose(), cfg.horizon, cfg.beta);
  } else {
    if (cfg.mc_samples < 1)
      throw std::invalid_argument("brwp_normalizers: mc_samples must be positive");
    const Eigen::Index p = cfg.mc_samples;
    const double scale = std::sqrt(2.0 * cfg.beta * cfg.horizon);
    Eigen::MatrixXd draws(m * p, e.dim());
    parallel_for(m, cfg.threads, [&](Eigen::Index begin, Eigen::Index end) {
      for (Eigen::Index j = begin; j < end; ++j) {
        const std::uint64_t id = sel.ids[static_cast<std::size_t>(j)];
        for (Eigen::Index s = 0; s < p; ++s)
          for (Eigen::Index d = 0; d < e.dim(); ++d)
            draws(j * p + s, d) =
                sel.positions(j, d) +
                scale * rng.normal(RngStream::normalizer, iter, id,
                                   static_cast<std::uint64_t>(s * e.dim() + d));
      }
    });
    const Eigen::VectorXd values = pot.value_batch(draws);
    const double log_p = std::log(static_cast<double>(p));
    parallel_for(m, cfg.threads, [&](Eigen::Index begin, Eigen::Index end) {
      for (Eigen::Index j = begin; j < end; ++j) {
        const Eigen::ArrayXd terms = -values.segment(j * p, p).array() / (2.0 * cfg.beta);
        const double peak = terms.maxCoeff();
        sel.log_z[j] = std::isfinite(peak)
                           ? peak + std::log((terms - peak).exp().sum()) - log_p
                           : peak;
      }
    });
  }
  for (Eigen::Index j = 0; j < m; ++j)
    if (!std::isfinite(sel.log_z[j]))
      throw numeric_error("brwp_normalizers: normalizer for particle " +
                          std::to_string(sel.ids[static_cast<std::size_t>(j)]) +
                          " degenerated at iteration " + std::to_string(e.iteration));
  return sel;
}

// Kernel score at every particle. Row i is
//   -(1 / (2 beta)) (grad V(x_i) + (x_i - xbar_i) / T),
// where xbar_i is the mean of the interaction set weighted by
// exp(-|x_i - x_j|^2 / (4 beta T) - log Z_j); factors constant across j cancel
// in the ratio. grad must be pot.gradient_batch(e.positions).
inline Eigen::MatrixXd brwp_score(const ParticleEnsemble& e, const Eigen::MatrixXd& grad,
                                  const BrwpSelection& sel, const SamplerConfig& cfg) {
  if (grad.rows() != e.size() || grad.cols() != e.dim())
    throw std::invalid_argument("brwp_score: gradient shape mismatch");
  if (sel.positions.cols() != e.dim() || sel.log_z.size() != sel.positions.rows())
    throw std::invalid_argument("brwp_score: selection shape mismatch");
  const Eigen::Index m = sel.positions.rows();
  const double inv_bandwidth = 1.0 / (4.0 * cfg.beta * cfg.horizon);
  Eigen::MatrixXd score(e.size(), e.dim());
  parallel_for(e.size(), cfg.threads, [&](Eigen::Index begin, Eigen::Index end) {
    Eigen::MatrixXd diff(m, e.dim());
    Eigen::ArrayXd log_w(m), w(m);
    for (Eigen::Index i = begin; i < end; ++i) {
      diff = sel.positions.rowwise() - e.positions.row(i);
      log_w = -diff.rowwise().squaredNorm().array() * inv_bandwidth - sel.log_z.array();
      const double peak = log_w.maxCoeff();
      w = (log_w - peak).exp();
      const double total = w.sum();
      if (!std::isfinite(total) || total <= 0.0)
        throw numeric_error("brwp_score: weights degenerated for particle " +
                            std::to_string(e.ids[static_cast<std::size_t>(i)]) +
                            " at iteration " + std::to_string(e.iteration));
      const Eigen::RowVectorXd xbar = (w.matrix().transpose() * sel.positions) / total;
      score.row(i) =
          -(grad.row(i) + (e.positions.row(i) - xbar) / cfg.horizon) / (2.0 * cfg.beta);
    }
  });
  return score;
}

// X <- X - eta grad V(X) - eta beta score(X).
inline void brwp_step(ParticleEnsemble& e, const PotentialSpec& pot, const SamplerConfig& cfg) {
  const BrwpSelection sel = brwp_normalizers(e, pot, cfg);
  const Eigen::MatrixXd grad = pot.gradient_batch(e.positions);
  const Eigen::MatrixXd score = brwp_score(e, grad, sel, cfg);
  e.positions.noalias() -= cfg.eta * grad;
  e.positions.noalias() -= cfg.eta * cfg.beta * score;
  detail::require_finite_rows(e, "brwp_step");
  ++e.iteration;
}

// Chain driving. Observers fire on the initial state, every stride-th
// iteration, the final iteration, and the iteration a divergence is detected.
struct ChainObserver {
  std::string name;
  long stride = 1;
  std::function<void(const ParticleEnsemble&)> fn;
};

struct ChainResult {
  ParticleEnsemble final_state;
  long iterations_run = 0;
  bool diverged = false;
  long divergence_iteration = -1;
  long mala_accepts = 0;
  long mala_proposals = 0;
  std::vector<std::string> warnings;
};

// A particle leaving the ball of radius kDivergenceNorm marks the chain as
// diverged; the chain stops there and reports rather than aborting.
inline constexpr double kDivergenceNorm = 1e8;

inline ChainResult run_chain(ParticleEnsemble initial, Method method, const PotentialSpec& pot,
                             const SamplerConfig& cfg, long iterations,
                             const std::vector<ChainObserver>& observers = {}) {
  if (iterations < 0) throw std::invalid_argument("run_chain: iterations must be nonnegative");
  ChainResult result;
  result.final_state = std::move(initial);
  ParticleEnsemble& e = result.final_state;

  if (pot.gradient_lipschitz > 0.0 && cfg.eta * pot.gradient_lipschitz > 2.0)
    result.warnings.push_back("step size " + g17(cfg.eta) +
                              " exceeds the stability threshold 2/L for gradient Lipschitz "
                              "constant " +
                              g17(pot.gradient_lipschitz));

  std::vector<long> last_fired(observers.size(), -1);
  const auto notify = [&](bool force) {
    for (std::size_t k = 0; k < observers.size(); ++k) {
      const ChainObserver& obs = observers[k];
      if (obs.stride < 1) throw std::invalid_argument("run_chain: observer stride must be >= 1");
      if (last_fired[k] == e.iteration) continue;
      if (!force && e.iteration % obs.stride != 0) continue;
      last_fired[k] = e.iteration;
      try {
        obs.fn(e);
      } catch (const std::exception& err) {
        throw numeric_error("observer '" + obs.name + "' failed at iteration " +
                            std::to_string(e.iteration) + ": " + err.what());
      }
    }
  };

  notify(false);
  const long target = e.iteration + iterations;
  while (e.iteration < target) {
    switch (method) {
      case Method::ula: ula_step(e, pot, cfg); break;
      case Method::mala:
        result.mala_accepts += mala_step(e, pot, cfg);
        result.mala_proposals += e.size();
        break;
      case Method::brwp: brwp_step(e, pot, cfg); break;
    }
    ++result.iterations_run;
    const double reach = e.positions.rowwise().norm().maxCoeff();
    if (!(reach <= kDivergenceNorm)) {
      result.diverged = true;
      result.divergence_iteration = e.iteration;
      notify(true);
      return result;
    }
    notify(e.iteration == target);
  }
  return result;
}

}  // namespace brwp
