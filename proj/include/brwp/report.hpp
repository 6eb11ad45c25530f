#pragma once

// Result containers and writers. Metric tables are CSV with full-precision
// (17 significant digit) floats and are byte-identical for a fixed config and
// seed regardless of thread count; wall-clock time appears only in the JSON
// summary and carries no determinism guarantee.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "brwp/bayes_lr.hpp"
#include "brwp/config.hpp"
#include "brwp/diagnostics.hpp"

namespace brwp {

struct MetricsRow {
  long iteration = 0;
  EnsembleStats stats;
  OracleDivergence oracle;  // meaningful only when the report carries an oracle
  EpsilonMetrics epsilon;   // meaningful only for logistic targets
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string id;  // hash of the canonical config text
  bool with_oracle = false;
  bool with_epsilon = false;
  std::vector<MetricsRow> rows;
  long iterations_run = 0;
  bool diverged = false;
  long divergence_iteration = -1;
  long mala_accepts = 0;
  long mala_proposals = 0;
  std::vector<std::string> warnings;
  Eigen::VectorXd theta_map;  // logistic targets only
  double map_gradient_norm = 0.0;
  long map_iterations = 0;
  double wall_seconds = 0.0;
};

// Average per-snapshot displacement of a report over the iteration window
// [first, last].
inline double stationarity_score(const ExperimentReport& report, long first, long last) {
  std::vector<long> iterations;
  std::vector<double> displacements;
  iterations.reserve(report.rows.size());
  displacements.reserve(report.rows.size());
  for (const MetricsRow& row : report.rows) {
    iterations.push_back(row.iteration);
    displacements.push_back(row.stats.displacement);
  }
  return stationarity_score(iterations, displacements, first, last);
}

inline std::string metrics_csv_header(Eigen::Index dim, bool with_oracle, bool with_epsilon) {
  std::string out = "iteration";
  for (Eigen::Index i = 0; i < dim; ++i) out += ",mean_" + std::to_string(i);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j)
      out += ",cov_" + std::to_string(i) + "_" + std::to_string(j);
  out += ",displacement";
  if (with_oracle) out += ",oracle_mean_err,oracle_cov_err,oracle_tv";
  if (with_epsilon) out += ",eps1,eps2";
  return out + "\n";
}

inline std::string metrics_csv(const ExperimentReport& report) {
  const Eigen::Index d = report.config.potential.dim;
  std::string out = metrics_csv_header(d, report.with_oracle, report.with_epsilon);
  for (const MetricsRow& row : report.rows) {
    out += std::to_string(row.iteration);
    for (Eigen::Index i = 0; i < d; ++i) out += "," + g17(row.stats.mean[i]);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) out += "," + g17(row.stats.covariance(i, j));
    out += "," + g17(row.stats.displacement);
    if (report.with_oracle)
      out += "," + g17(row.oracle.mean_error) + "," + g17(row.oracle.cov_error) + "," +
             g17(row.oracle.tv);
    if (report.with_epsilon)
      out += "," + g17(row.epsilon.eps1) + "," + g17(row.epsilon.eps2);
    out += "\n";
  }
  return out;
}

// Particle positions in ascending id order: id,x_0,...,x_{d-1}.
inline std::string positions_csv(const ParticleEnsemble& e) {
  std::string out = "id";
  for (Eigen::Index d = 0; d < e.dim(); ++d) out += ",x_" + std::to_string(d);
  out += "\n";
  const Eigen::MatrixXd pos = detail::id_ordered_positions(e);
  std::vector<std::uint64_t> ids = e.ids;
  std::sort(ids.begin(), ids.end());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    out += std::to_string(ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index d = 0; d < e.dim(); ++d) out += "," + g17(pos(i, d));
    out += "\n";
  }
  return out;
}

inline Json summary_json(const ExperimentReport& report) {
  Json j;
  j["name"] = report.config.name;
  j["run_id"] = report.id;
  j["config"] = to_json(report.config);
  j["iterations_run"] = report.iterations_run;
  j["diverged"] = report.diverged;
  if (report.diverged) j["divergence_iteration"] = report.divergence_iteration;
  if (report.config.method == Method::mala) {
    Json m;
    m["accepts"] = report.mala_accepts;
    m["proposals"] = report.mala_proposals;
    m["rate"] = report.mala_proposals > 0 ? static_cast<double>(report.mala_accepts) /
                                                static_cast<double>(report.mala_proposals)
                                          : 0.0;
    j["mala"] = m;
  }
  j["warnings"] = report.warnings;
  if (!report.rows.empty()) {
    const MetricsRow& last = report.rows.back();
    Json f;
    f["iteration"] = last.iteration;
    f["mean"] = std::vector<double>(last.stats.mean.data(),
                                    last.stats.mean.data() + last.stats.mean.size());
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < last.stats.covariance.rows(); ++i) {
      Json covrow = Json::array();
      for (Eigen::Index k = 0; k < last.stats.covariance.cols(); ++k)
        covrow.push_back(last.stats.covariance(i, k));
      cov.push_back(covrow);
    }
    f["covariance"] = cov;
    if (report.with_oracle) {
      f["oracle_mean_err"] = last.oracle.mean_error;
      f["oracle_cov_err"] = last.oracle.cov_error;
      f["oracle_tv"] = last.oracle.tv;
    }
    if (report.with_epsilon) {
      f["eps1"] = last.epsilon.eps1;
      f["eps2"] = last.epsilon.eps2;
    }
    j["final"] = f;
  }
  if (report.with_epsilon) {
    Json m;
    m["theta"] = std::vector<double>(report.theta_map.data(),
                                     report.theta_map.data() + report.theta_map.size());
    m["gradient_norm"] = report.map_gradient_norm;
    m["iterations"] = report.map_iterations;
    j["map"] = m;
  }
  j["wall_seconds"] = report.wall_seconds;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::invalid_argument("failed writing " + path.string());
}

}  // namespace brwp
