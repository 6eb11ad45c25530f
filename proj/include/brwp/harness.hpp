#pragma once

// Experiment driver: builds targets from configs, runs sampler chains with a
// metrics observer (and the exact Gaussian law advanced in lockstep where one
// exists), runs the closed-form studies, aligns paired-method comparisons,
// and carries the preset table for the benchmark suite.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "brwp/bayes_lr.hpp"
#include "brwp/config.hpp"
#include "brwp/diagnostics.hpp"
#include "brwp/gaussian_analytic.hpp"
#include "brwp/report.hpp"
#include "brwp/samplers.hpp"

namespace brwp {

// Deterministic proper rotation: QR of a seeded standard-normal matrix with
// the R diagonal sign-fixed, so the result is a pure function of the seed; a
// final column flip moves the improper half of the draws onto SO(d) without
// touching any conjugated covariance R diag R^T.
inline Eigen::MatrixXd random_rotation(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("random_rotation: dimension must be positive");
  const CounterRng rng{seed};
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      g(i, j) = rng.normal(RngStream::covariates, 0, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(j));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(d - 1) = -q.col(d - 1);
  return q;
}

struct BuiltTarget {
  PotentialSpec pot;
  bool gaussian = false;
  Eigen::MatrixXd sigma;  // target covariance for gaussian targets
  bool logistic = false;
  LogisticDataset dataset;  // logistic targets only
};

inline BuiltTarget build_target(const PotentialConfig& cfg) {
  BuiltTarget out;
  if (cfg.kind == "quadratic") {
    const Eigen::Map<const Eigen::VectorXd> eig(cfg.eigenvalues.data(),
                                                static_cast<Eigen::Index>(cfg.eigenvalues.size()));
    if (cfg.rotation_seed) {
      const Eigen::MatrixXd rot = random_rotation(eig.size(), *cfg.rotation_seed);
      out.sigma = detail::symmetrize(rot * eig.asDiagonal() * rot.transpose());
    } else {
      out.sigma = eig.asDiagonal();
    }
    out.pot = quadratic_potential(out.sigma);
    out.gaussian = true;
  } else if (cfg.kind == "gaussian_mixture") {
    const Eigen::Map<const Eigen::VectorXd> center(cfg.center.data(),
                                                   static_cast<Eigen::Index>(cfg.center.size()));
    out.pot = gaussian_mixture_potential(center);
  } else if (cfg.kind == "bimodal") {
    if (cfg.dim != 2)
      throw std::invalid_argument("build_target: the bimodal potential is planar (dim must be 2)");
    out.pot = bimodal_potential();
  } else if (cfg.kind == "logistic_regression") {
    const Eigen::Map<const Eigen::VectorXd> theta(cfg.theta_gen.data(),
                                                  static_cast<Eigen::Index>(cfg.theta_gen.size()));
    out.dataset = generate_dataset(cfg.samples, cfg.dim, theta, cfg.data_seed);
    out.pot = logistic_regression_potential(out.dataset.features, out.dataset.labels, cfg.alpha);
    out.logistic = true;
  } else {
    throw std::invalid_argument("build_target: unknown potential kind '" + cfg.kind + "'");
  }
  return out;
}

namespace detail {

inline std::string snapshot_filename(const std::string& name, long iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_particles_%06ld.csv", iteration);
  return name + buf;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2)
    throw std::invalid_argument("fit_line: need at least two aligned points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (syy <= 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace detail

// Runs one configured chain. Every snapshot_stride iterations (plus the
// initial state, the final state, and a divergence iteration) a metrics row
// is recorded; for quadratic targets the exact Gaussian law of the method is
// advanced in lockstep and the distance to it recorded per row (for mala,
// whose chain is unbiased, the comparison law is the target itself). When
// out_dir is nonempty, particle snapshots, the metrics CSV and the JSON
// summary are written there.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads = 1,
                                       const std::string& out_dir = "") {
  const auto t_start = std::chrono::steady_clock::now();
  const BuiltTarget target = build_target(cfg.potential);
  const Eigen::Index d = static_cast<Eigen::Index>(target.pot.dim);

  std::filesystem::path dir;
  if (!out_dir.empty()) {
    dir = out_dir;
    std::filesystem::create_directories(dir);
  }

  ExperimentReport report;
  report.config = cfg;
  report.id = run_id(serialize_config(cfg));
  report.with_oracle = target.gaussian;
  report.with_epsilon = target.logistic;

  SamplerConfig scfg = cfg.sampler;
  scfg.threads = threads;

  if (target.logistic) {
    const MapEstimate map = map_estimate(target.pot);
    report.theta_map = map.theta;
    report.map_gradient_norm = map.gradient_norm;
    report.map_iterations = map.iterations;
  }

  const Eigen::Map<const Eigen::VectorXd> mean0(cfg.init.mean.data(),
                                                static_cast<Eigen::Index>(cfg.init.mean.size()));
  ParticleEnsemble start = make_gaussian_ensemble(cfg.particles, mean0,
                                                  std::sqrt(cfg.init.variance),
                                                  CounterRng{scfg.seed});

  GaussianNd law;
  std::optional<ProximalParams> prox;
  Eigen::MatrixXd ula_drift;
  bool law_broken = false;
  if (target.gaussian) {
    if (cfg.method == Method::mala) {
      law.mean = Eigen::VectorXd::Zero(d);
      law.cov = scfg.beta * target.sigma;
    } else {
      law.mean = mean0;
      law.cov = cfg.init.variance * Eigen::MatrixXd::Identity(d, d);
      if (cfg.method == Method::brwp)
        prox.emplace(target.sigma, scfg.horizon, scfg.beta);
      else
        ula_drift = Eigen::MatrixXd::Identity(d, d) -
                    scfg.eta * detail::spd_inverse(target.sigma, "run_experiment");
    }
  }
  const auto advance_law = [&]() {
    if (!target.gaussian || law_broken) return;
    switch (cfg.method) {
      case Method::brwp:
        try {
          law = brwp_covariance_step_nd(law, *prox, scfg.eta);
        } catch (const numeric_error&) {
          // The law left the admissible region (step too large for the
          // recurrence); subsequent oracle entries become NaN.
          law_broken = true;
        }
        break;
      case Method::ula:
        law.mean = ula_drift * law.mean;
        law.cov = detail::symmetrize(ula_drift * law.cov * ula_drift) +
                  2.0 * scfg.beta * scfg.eta * Eigen::MatrixXd::Identity(d, d);
        break;
      case Method::mala:
        break;
    }
  };

  std::vector<MetricsRow> rows;
  ParticleEnsemble prev;
  bool have_prev = false;
  long last_seen = -1;

  ChainObserver obs;
  obs.name = "metrics";
  obs.stride = 1;
  obs.fn = [&](const ParticleEnsemble& e) {
    if (e.iteration == last_seen) return;
    if (last_seen >= 0) advance_law();
    last_seen = e.iteration;
    const double reach = e.positions.rowwise().norm().maxCoeff();
    const bool blown = !(reach <= kDivergenceNorm);
    if (!blown && e.iteration % cfg.snapshot_stride != 0 && e.iteration != cfg.iterations)
      return;
    MetricsRow row;
    row.iteration = e.iteration;
    row.stats = have_prev ? ensemble_stats(e, prev) : ensemble_stats(e);
    if (report.with_oracle) {
      if (law_broken) {
        row.oracle.mean_error = std::numeric_limits<double>::quiet_NaN();
        row.oracle.cov_error = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.oracle = oracle_divergence(row.stats, law);
      }
    }
    if (report.with_epsilon) row.epsilon = epsilon_metrics(e, report.theta_map);
    rows.push_back(std::move(row));
    prev = e;
    have_prev = true;
    if (!out_dir.empty())
      write_text_file(dir / detail::snapshot_filename(cfg.name, e.iteration), positions_csv(e));
  };

  ChainResult res;
  try {
    res = run_chain(std::move(start), cfg.method, target.pot, scfg, cfg.iterations, {obs});
  } catch (const numeric_error& err) {
    throw numeric_error("experiment '" + cfg.name + "': " + err.what());
  }

  report.rows = std::move(rows);
  report.iterations_run = res.iterations_run;
  report.diverged = res.diverged;
  report.divergence_iteration = res.divergence_iteration;
  report.mala_accepts = res.mala_accepts;
  report.mala_proposals = res.mala_proposals;
  report.warnings = res.warnings;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (!out_dir.empty()) {
    write_text_file(dir / (cfg.name + "_metrics.csv"), metrics_csv(report));
    write_text_file(dir / (cfg.name + "_summary.json"), summary_json(report).dump(2) + "\n");
  }
  return report;
}

struct CompareReport {
  std::string name;
  std::vector<ExperimentReport> runs;
  std::string merged_csv;
};

// Paired execution of several configs that share everything except the
// method and its method-specific sampler fields: same potential, same
// initialization, same particle count, iteration budget, snapshot stride and
// seed, so every run starts from the identical ensemble. The merged table
// has one aligned column group per run; a run that stopped early (divergence)
// leaves its cells empty past its last row.
inline CompareReport compare_methods(const std::string& name,
                                     const std::vector<ExperimentConfig>& configs,
                                     int threads = 1, const std::string& out_dir = "") {
  if (configs.size() < 2)
    throw std::invalid_argument("compare_methods: need at least two configs");
  const ExperimentConfig& head = configs.front();
  const Json pot0 = to_json(head.potential);
  std::set<std::string> names;
  for (const ExperimentConfig& c : configs) {
    if (!names.insert(c.name).second)
      throw std::invalid_argument("compare_methods: duplicate run name '" + c.name + "'");
    if (to_json(c.potential) != pot0)
      throw std::invalid_argument("compare_methods: runs must share the potential");
    if (c.init.mean != head.init.mean || c.init.variance != head.init.variance)
      throw std::invalid_argument("compare_methods: runs must share the initialization");
    if (c.particles != head.particles || c.iterations != head.iterations ||
        c.snapshot_stride != head.snapshot_stride)
      throw std::invalid_argument(
          "compare_methods: runs must share particles, iterations and snapshot stride");
    if (c.sampler.seed != head.sampler.seed)
      throw std::invalid_argument("compare_methods: runs must share the seed so "
                                  "initializations are paired");
  }

  CompareReport out;
  out.name = name;
  out.runs.reserve(configs.size());
  for (const ExperimentConfig& c : configs)
    out.runs.push_back(run_experiment(c, threads, out_dir));

  std::set<long> iteration_set;
  for (const ExperimentReport& r : out.runs)
    for (const MetricsRow& row : r.rows) iteration_set.insert(row.iteration);

  std::string csv = "iteration";
  for (const ExperimentReport& r : out.runs) {
    const std::string& p = r.config.name;
    csv += "," + p + "_displacement";
    if (r.with_oracle)
      csv += "," + p + "_oracle_mean_err," + p + "_oracle_cov_err," + p + "_oracle_tv";
    if (r.with_epsilon) csv += "," + p + "_eps1," + p + "_eps2";
  }
  csv += "\n";

  std::vector<std::size_t> cursor(out.runs.size(), 0);
  for (long it : iteration_set) {
    csv += std::to_string(it);
    for (std::size_t k = 0; k < out.runs.size(); ++k) {
      const ExperimentReport& r = out.runs[k];
      while (cursor[k] < r.rows.size() && r.rows[cursor[k]].iteration < it) ++cursor[k];
      const bool present = cursor[k] < r.rows.size() && r.rows[cursor[k]].iteration == it;
      const MetricsRow* row = present ? &r.rows[cursor[k]] : nullptr;
      csv += row ? "," + g17(row->stats.displacement) : ",";
      if (r.with_oracle)
        csv += row ? "," + g17(row->oracle.mean_error) + "," + g17(row->oracle.cov_error) + "," +
                         g17(row->oracle.tv)
                   : ",,,";
      if (r.with_epsilon)
        csv += row ? "," + g17(row->epsilon.eps1) + "," + g17(row->epsilon.eps2) : ",,";
    }
    csv += "\n";
  }
  out.merged_csv = csv;

  if (!out_dir.empty())
    write_text_file(std::filesystem::path(out_dir) / (name + "_compare.csv"), out.merged_csv);
  return out;
}

struct AnalyticReport {
  AnalyticConfig config;
  std::string id;
  Json summary;
  // (file name, CSV text) pairs; written under out_dir when given.
  std::vector<std::pair<std::string, std::string>> tables;
  double wall_seconds = 0.0;
};

namespace detail {

inline AnalyticReport analytic_recurrence_1d(const AnalyticConfig& cfg) {
  AnalyticReport out;
  const double eta = *cfg.eta;
  const Gaussian1D g0{cfg.init_mean, cfg.init_variance};

  std::vector<std::vector<Gaussian1D>> tracks;
  Json horizon_summaries = Json::array();
  for (double horizon : cfg.horizons) {
    tracks.push_back(iterate_brwp_1d(g0, cfg.a, horizon, cfg.beta, eta, cfg.iterations));
    const bool degenerate = degenerate_horizon(cfg.a, horizon);
    const double stat_var =
        cfg.a > 0.0 ? brwp_stationary_var_1d(cfg.a, horizon, cfg.beta) : 0.0;
    long converged = -1;
    for (long k = 0; k <= cfg.iterations; ++k) {
      const Gaussian1D& g = tracks.back()[static_cast<std::size_t>(k)];
      if (std::abs(g.var - stat_var) <= 1e-10 && std::abs(g.mean) <= 1e-10) {
        converged = k;
        break;
      }
    }
    Json h;
    h["horizon"] = horizon;
    h["degenerate"] = degenerate;
    if (cfg.a > 0.0) h["stationary_var"] = stat_var;
    h["converged_iteration"] = converged;
    h["final_mean"] = tracks.back().back().mean;
    h["final_var"] = tracks.back().back().var;
    horizon_summaries.push_back(h);
  }

  const bool with_ula = cfg.a > 0.0 && cfg.a * eta < 1.0;
  std::vector<Gaussian1D> ula;
  if (with_ula) ula = ula_recurrence_1d(g0, cfg.a, cfg.beta, eta, cfg.iterations);

  std::string csv = "iteration";
  for (double horizon : cfg.horizons)
    csv += ",brwp_mean_T" + g17(horizon) + ",brwp_var_T" + g17(horizon);
  if (with_ula) csv += ",ula_mean,ula_var";
  csv += "\n";
  for (long k = 0; k <= cfg.iterations; ++k) {
    csv += std::to_string(k);
    for (const auto& track : tracks) {
      const Gaussian1D& g = track[static_cast<std::size_t>(k)];
      csv += "," + g17(g.mean) + "," + g17(g.var);
    }
    if (with_ula) {
      const Gaussian1D& g = ula[static_cast<std::size_t>(k)];
      csv += "," + g17(g.mean) + "," + g17(g.var);
    }
    csv += "\n";
  }
  out.tables.emplace_back(cfg.name + "_recurrence.csv", std::move(csv));

  out.summary["horizons"] = horizon_summaries;
  if (with_ula) {
    Json u;
    u["stationary_var"] = ula_stationary_var_1d(cfg.a, cfg.beta, eta);
    long converged = -1;
    const double stat = ula_stationary_var_1d(cfg.a, cfg.beta, eta);
    for (long k = 0; k <= cfg.iterations; ++k) {
      const Gaussian1D& g = ula[static_cast<std::size_t>(k)];
      if (std::abs(g.var - stat) <= 1e-10 && std::abs(g.mean) <= 1e-10) {
        converged = k;
        break;
      }
    }
    u["converged_iteration"] = converged;
    out.summary["ula"] = u;
  }
  return out;
}

inline AnalyticReport analytic_mixing(const AnalyticConfig& cfg) {
  AnalyticReport out;
  const Eigen::Index d = static_cast<Eigen::Index>(cfg.eigenvalues.size());
  const Eigen::Map<const Eigen::VectorXd> eig(cfg.eigenvalues.data(), d);
  const ProximalParams params(Eigen::MatrixXd(eig.asDiagonal()), cfg.horizon, cfg.beta);
  const double eta = cfg.eta ? *cfg.eta : theorem_step_cap(params);

  const Eigen::Map<const Eigen::VectorXd> init_vars(cfg.init_variances.data(), d);
  const Eigen::MatrixXd cov0 = init_vars.asDiagonal();
  const MixingBound bound = mixing_time_bound(cov0, params, eta, cfg.delta);
  const Eigen::MatrixXd cov_inf = stationary_covariance_nd(params);
  const double prefactor =
      1.5 * bound.constant_rms * std::sqrt(static_cast<double>(d));

  GaussianNd law{Eigen::VectorXd::Zero(d), cov0};
  std::string csv = "iteration,tv,bound";
  for (Eigen::Index i = 0; i < d; ++i) csv += ",tau_" + std::to_string(i);
  csv += "\n";
  double final_tv = 0.0;
  double decay = 1.0;
  for (long k = 0; k <= cfg.iterations; ++k) {
    final_tv = tv_bound(law.cov, cov_inf);
    csv += std::to_string(k) + "," + g17(final_tv) + "," + g17(prefactor * decay);
    const Eigen::VectorXd taus =
        (params.eigenvectors().transpose() * law.cov * params.eigenvectors()).diagonal();
    for (Eigen::Index i = 0; i < d; ++i) csv += "," + g17(taus[i]);
    csv += "\n";
    if (k < cfg.iterations) {
      law = brwp_covariance_step_nd(law, params, eta);
      decay *= bound.contraction;
    }
  }
  out.tables.emplace_back(cfg.name + "_mixing.csv", std::move(csv));

  const auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  out.summary["eta"] = eta;
  out.summary["step_cap"] = bound.step_cap;
  out.summary["delta"] = cfg.delta;
  out.summary["constant_rms"] = bound.constant_rms;
  out.summary["constant_max"] = bound.constant_max;
  out.summary["contraction"] = bound.contraction;
  out.summary["t_mix"] = bound.t_mix;
  // Mode order below is ascending target eigenvalue.
  out.summary["mode_eigenvalues"] = vec(params.eigenvalues());
  out.summary["tau0"] = vec(bound.tau0);
  out.summary["tau_inf"] = vec(bound.tau_inf);
  out.summary["gamma0"] = vec(bound.gamma0);
  out.summary["mode_contraction"] = vec(bound.mode_contraction);
  out.summary["final_tv"] = final_tv;
  return out;
}

inline AnalyticReport analytic_ode(const AnalyticConfig& cfg) {
  AnalyticReport out;
  const Eigen::Index d = static_cast<Eigen::Index>(cfg.eigenvalues.size());
  const Eigen::Map<const Eigen::VectorXd> eig(cfg.eigenvalues.data(), d);
  const Eigen::MatrixXd rot = random_rotation(d, cfg.rotation_seed);
  const Eigen::MatrixXd sigma = symmetrize(rot * eig.asDiagonal() * rot.transpose());
  const ProximalParams params(sigma, cfg.horizon, cfg.beta);
  const CounterRng rng{cfg.init_seed};

  std::string csv = "trajectory,t,lyapunov";
  for (Eigen::Index i = 0; i < d; ++i) csv += ",eig_" + std::to_string(i);
  csv += "\n";
  Json trajectories = Json::array();
  for (long j = 0; j < cfg.trajectories; ++j) {
    Eigen::VectorXd u(d);
    for (Eigen::Index i = 0; i < d; ++i)
      u[i] = cfg.init_eigen_min +
             (cfg.init_eigen_max - cfg.init_eigen_min) *
                 rng.uniform(RngStream::covariates, static_cast<std::uint64_t>(j),
                             static_cast<std::uint64_t>(i), 0);
    const Eigen::MatrixXd q =
        random_rotation(d, rng.bits(RngStream::labels, static_cast<std::uint64_t>(j), 0, 0));
    const Eigen::MatrixXd cov0 = symmetrize(q * u.asDiagonal() * q.transpose());
    // Start from the smoothed image of a Gaussian law, which is exactly the
    // reachable set of the flow.
    const Eigen::MatrixXd smoothed0 =
        rwp_gaussian_nd(GaussianNd{Eigen::VectorXd::Zero(d), cov0}, params).cov;
    const bool admissible = spectral_half_plane_check(smoothed0, params);

    const OdeTrajectory traj =
        noncommuting_ode_integrate(smoothed0, params, cfg.dt, cfg.t_end, cfg.output_stride);

    for (std::size_t s = 0; s < traj.state_times.size(); ++s) {
      const double t = traj.state_times[s];
      const long step = std::lround(t / cfg.dt);
      csv += std::to_string(j) + "," + g17(t) + "," +
             g17(traj.lyapunov[static_cast<std::size_t>(step)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(traj.states[s]);
      for (Eigen::Index i = 0; i < d; ++i) csv += "," + g17(es.eigenvalues()[i]);
      csv += "\n";
    }

    bool monotone = true;
    for (std::size_t s = 1; s < traj.lyapunov.size(); ++s)
      if (!(traj.lyapunov[s] < traj.lyapunov[s - 1])) {
        monotone = false;
        break;
      }
    std::vector<double> ts, logl;
    for (std::size_t s = traj.lyapunov.size() / 2; s < traj.lyapunov.size(); ++s) {
      ts.push_back(traj.times[s]);
      logl.push_back(std::log(traj.lyapunov[s]));
    }
    const LineFit fit = fit_line(ts, logl);

    Json t;
    t["trajectory"] = j;
    t["admissible_init"] = admissible;
    t["initial"] = traj.lyapunov.front();
    t["final"] = traj.lyapunov.back();
    t["ratio"] = traj.lyapunov.back() / traj.lyapunov.front();
    t["monotone"] = monotone;
    t["log_slope_last_half"] = fit.slope;
    t["log_r2_last_half"] = fit.r2;
    trajectories.push_back(t);
  }
  out.tables.emplace_back(cfg.name + "_lyapunov.csv", std::move(csv));
  out.summary["trajectories"] = trajectories;
  return out;
}

}  // namespace detail

// Closed-form study driver; emits one CSV per trajectory stream plus a JSON
// summary. Certificate preconditions (degenerate horizon, step-size cap) surface
// as invalid-argument errors naming the violated bound.
inline AnalyticReport run_analytic(const AnalyticConfig& cfg, const std::string& out_dir = "") {
  const auto t_start = std::chrono::steady_clock::now();
  AnalyticReport out;
  if (cfg.analysis == "recurrence_1d") out = detail::analytic_recurrence_1d(cfg);
  else if (cfg.analysis == "mixing") out = detail::analytic_mixing(cfg);
  else out = detail::analytic_ode(cfg);
  out.config = cfg;
  out.id = run_id(serialize_config(cfg));
  Json summary;
  summary["name"] = cfg.name;
  summary["run_id"] = out.id;
  summary["config"] = to_json(cfg);
  for (auto& [key, value] : out.summary.items()) summary[key] = value;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  summary["wall_seconds"] = out.wall_seconds;
  out.summary = summary;

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [file, text] : out.tables) write_text_file(dir / file, text);
    write_text_file(dir / (cfg.name + "_summary.json"), out.summary.dump(2) + "\n");
  }
  return out;
}

// A named bundle of runs: one experiment (plain run), several (paired
// comparison), or a closed-form study.
struct Preset {
  std::string name;
  std::string note;
  std::vector<ExperimentConfig> experiments;
  std::optional<AnalyticConfig> analytic;
};

namespace detail {

inline ExperimentConfig preset_run(std::string name, Method method, PotentialConfig pot,
                                   double eta, long particles, long iterations,
                                   double init_variance, long stride, double horizon = 0.0,
                                   int mc_samples = 0) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.method = method;
  const long dim = pot.dim;
  c.potential = std::move(pot);
  c.sampler.eta = eta;
  c.sampler.beta = 1.0;
  c.sampler.seed = 1;
  if (method == Method::brwp) {
    c.sampler.horizon = horizon;
    if (mc_samples > 0) {
      c.sampler.normalizer = NormalizerMode::monte_carlo;
      c.sampler.mc_samples = mc_samples;
    } else {
      c.sampler.normalizer = NormalizerMode::exact;
    }
    c.sampler.subsample = 0;
  }
  c.particles = particles;
  c.iterations = iterations;
  c.init.mean.assign(static_cast<std::size_t>(dim), 0.0);
  c.init.variance = init_variance;
  c.snapshot_stride = stride;
  return c;
}

inline std::vector<Preset> make_presets() {
  std::vector<Preset> out;

  {
    AnalyticConfig a;
    a.name = "analytic_1d";
    a.analysis = "recurrence_1d";
    a.a = 1.0;
    a.beta = 1.0;
    a.eta = 0.25;
    a.init_mean = 0.0;
    a.init_variance = 4.0;
    a.horizons = {0.25, 0.5, 1.0};
    a.iterations = 500;
    out.push_back({a.name,
                   "1D quadratic recurrences against the Langevin closed form; T = 1 "
                   "is the degenerate horizon",
                   {},
                   a});
  }
  {
    AnalyticConfig a;
    a.name = "analytic_mixing_5d";
    a.analysis = "mixing";
    a.eigenvalues = {10.0, 7.75, 5.5, 3.25, 1.0};
    a.beta = 1.0;
    a.horizon = 1.0 / 3.0;
    // eta omitted: run exactly at the certified step cap.
    a.delta = 0.01;
    a.iterations = 500;
    // Start each mode 25% above its stationary variance so the iterated tv
    // stays inside the certified envelope from the first step.
    a.init_variances.clear();
    for (double xi : a.eigenvalues)
      a.init_variances.push_back(1.25 * a.beta * (xi - a.horizon * a.horizon / xi));
    out.push_back({a.name, "commuting mixing-time certificate at the step-size cap", {}, a});
  }
  {
    AnalyticConfig a;
    a.name = "analytic_noncommuting_5d";
    a.analysis = "ode";
    a.eigenvalues = {2.0, 2.5, 3.0, 3.5, 4.0};
    a.rotation_seed = 7;
    a.beta = 1.0;
    a.horizon = 0.5;
    a.trajectories = 20;
    a.init_seed = 2026;
    a.init_eigen_min = 0.5;
    a.init_eigen_max = 4.0;
    a.dt = 1e-3;
    a.t_end = 20.0;
    a.output_stride = 100;
    out.push_back({a.name, "smoothed-covariance flow from random non-commuting starts", {}, a});
  }

  {
    PotentialConfig pot;
    pot.kind = "quadratic";
    pot.eigenvalues = {10.0, 1.0};
    pot.dim = 2;
    const std::string base = "ill_conditioned_gaussian_2d";
    std::vector<ExperimentConfig> runs;
    runs.push_back(preset_run(base + "_ula", Method::ula, pot, 0.1, 1000, 200, 1.0, 10));
    runs.push_back(preset_run(base + "_mala", Method::mala, pot, 0.1, 1000, 200, 1.0, 10));
    runs.push_back(
        preset_run(base + "_brwp_t0.05", Method::brwp, pot, 0.1, 1000, 200, 1.0, 10, 0.05, 10));
    runs.push_back(
        preset_run(base + "_brwp_t0.25", Method::brwp, pot, 0.1, 1000, 200, 1.0, 10, 0.25, 10));
    out.push_back({base, "condition number 10 Gaussian, paired methods", runs, {}});
  }
  {
    PotentialConfig pot;
    pot.kind = "gaussian_mixture";
    pot.center = {0.5, 0.5};
    pot.dim = 2;
    const std::string base = "mixture";
    std::vector<ExperimentConfig> runs;
    runs.push_back(preset_run(base + "_ula", Method::ula, pot, 0.1, 200, 500, 1.0, 10));
    runs.push_back(preset_run(base + "_mala", Method::mala, pot, 0.1, 200, 500, 1.0, 10));
    runs.push_back(
        preset_run(base + "_brwp_t0.01", Method::brwp, pot, 0.1, 200, 500, 1.0, 10, 0.01, 25));
    runs.push_back(
        preset_run(base + "_brwp_t0.1", Method::brwp, pot, 0.1, 200, 500, 1.0, 10, 0.1, 25));
    out.push_back({base, "symmetric two-mode Gaussian mixture", runs, {}});
  }
  {
    PotentialConfig pot;
    pot.kind = "bimodal";
    pot.dim = 2;
    const std::string base = "bimodal";
    std::vector<ExperimentConfig> runs;
    runs.push_back(preset_run(base + "_ula", Method::ula, pot, 0.01, 200, 2000, 1.0, 1));
    runs.push_back(preset_run(base + "_mala", Method::mala, pot, 0.01, 200, 2000, 1.0, 1));
    runs.push_back(
        preset_run(base + "_brwp_t0.01", Method::brwp, pot, 0.01, 200, 2000, 1.0, 1, 0.01, 25));
    runs.push_back(
        preset_run(base + "_brwp_t0.05", Method::brwp, pot, 0.01, 200, 2000, 1.0, 1, 0.05, 25));
    runs.push_back(
        preset_run(base + "_brwp_t0.1", Method::brwp, pot, 0.01, 200, 2000, 1.0, 1, 0.1, 25));
    out.push_back({base,
                   "ring-and-wells target; per-iteration snapshots expose the "
                   "late-time stationarity gap",
                   runs,
                   {}});
  }
  {
    PotentialConfig pot;
    pot.kind = "bimodal";
    pot.dim = 2;
    const std::string base = "bimodal_large_step";
    std::vector<ExperimentConfig> runs;
    runs.push_back(preset_run(base + "_ula", Method::ula, pot, 0.5, 200, 100, 1.0, 1));
    runs.push_back(preset_run(base + "_mala", Method::mala, pot, 0.5, 200, 100, 1.0, 1));
    runs.push_back(
        preset_run(base + "_brwp_t0.1", Method::brwp, pot, 0.5, 200, 100, 1.0, 1, 0.1, 25));
    runs.push_back(
        preset_run(base + "_brwp_t0.2", Method::brwp, pot, 0.5, 200, 100, 1.0, 1, 0.2, 25));
    out.push_back({base,
                   "step size past the Langevin stability threshold; the unadjusted "
                   "chain is expected to diverge",
                   runs,
                   {}});
  }
  {
    PotentialConfig pot;
    pot.kind = "logistic_regression";
    pot.samples = 50;
    pot.dim = 2;
    pot.alpha = 0.5;
    pot.data_seed = 11;
    pot.theta_gen = {1.0, 1.0};
    // Initialization variance 1/L, the inverse gradient Lipschitz constant of
    // the realized dataset's potential.
    const double lipschitz = build_target(pot).pot.gradient_lipschitz;
    const double init_variance = 1.0 / lipschitz;
    const std::string base = "bayes_lr";
    std::vector<ExperimentConfig> runs;
    runs.push_back(preset_run(base + "_ula", Method::ula, pot, 0.05, 1000, 5000,
                              init_variance, 10));
    runs.push_back(preset_run(base + "_mala", Method::mala, pot, 0.05, 1000, 5000,
                              init_variance, 10));
    for (double horizon : {0.025, 0.05, 0.1, 0.2}) {
      char tag[32];
      std::snprintf(tag, sizeof(tag), "%g", horizon);
      runs.push_back(preset_run(base + "_brwp_t" + tag, Method::brwp, pot, 0.05, 1000, 5000,
                                init_variance, 10, horizon, 10));
    }
    out.push_back({base, "posterior sampling for synthetic logistic regression", runs, {}});
  }
  return out;
}

}  // namespace detail

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = detail::make_presets();
  return table;
}

inline const Preset& find_preset(const std::string& name) {
  for (const Preset& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const Preset& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw std::invalid_argument("unknown preset '" + name + "'; available: " + known);
}

}  // namespace brwp
