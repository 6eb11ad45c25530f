#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "brwp/diagnostics.hpp"

using namespace brwp;

namespace {

ParticleEnsemble two_points(double x0, double x1) {
  ParticleEnsemble e;
  e.positions.resize(2, 1);
  e.positions << x0, x1;
  e.ids = {0, 1};
  return e;
}

}  // namespace

TEST_CASE("moments of a two-particle ensemble are exact") {
  ParticleEnsemble e;
  e.positions.resize(2, 2);
  e.positions << 1.0, 0.0, -1.0, 0.0;
  e.ids = {0, 1};

  const EnsembleStats s = ensemble_stats(e);
  REQUIRE(s.mean[0] == 0.0);
  REQUIRE(s.mean[1] == 0.0);
  REQUIRE(s.covariance(0, 0) == 1.0);
  REQUIRE(s.covariance(0, 1) == 0.0);
  REQUIRE(s.covariance(1, 0) == 0.0);
  REQUIRE(s.covariance(1, 1) == 0.0);
  REQUIRE(std::isnan(s.displacement));
}

TEST_CASE("moments do not depend on storage order") {
  ParticleEnsemble a;
  a.positions.resize(3, 2);
  a.positions << 0.3, -1.2, 2.7, 0.4, -0.9, 1.1;
  a.ids = {0, 1, 2};

  ParticleEnsemble b;
  b.positions.resize(3, 2);
  b.positions << -0.9, 1.1, 0.3, -1.2, 2.7, 0.4;
  b.ids = {2, 0, 1};

  const EnsembleStats sa = ensemble_stats(a);
  const EnsembleStats sb = ensemble_stats(b);
  REQUIRE(sa.mean == sb.mean);
  REQUIRE(sa.covariance == sb.covariance);
}

TEST_CASE("displacement matches particles by id") {
  ParticleEnsemble prev;
  prev.positions.resize(2, 2);
  prev.positions << 0.0, 0.0, 1.0, 1.0;
  prev.ids = {0, 1};

  // Snapshot rows stored in the opposite order; particle 0 moved by (3, 4),
  // particle 1 by (0.3, 0.4).
  ParticleEnsemble now;
  now.positions.resize(2, 2);
  now.positions << 1.3, 1.4, 3.0, 4.0;
  now.ids = {1, 0};

  const EnsembleStats s = ensemble_stats(now, prev);
  REQUIRE(s.displacement == Catch::Approx(0.5 * (5.0 + 0.5)).margin(1e-14));
}

TEST_CASE("displacement requires matching id sets and shapes") {
  ParticleEnsemble prev = two_points(0.0, 1.0);
  ParticleEnsemble now = two_points(0.5, 1.5);
  now.ids = {0, 2};
  REQUIRE_THROWS_AS(ensemble_stats(now, prev), std::invalid_argument);

  ParticleEnsemble wide;
  wide.positions.resize(2, 2);
  wide.positions.setZero();
  wide.ids = {0, 1};
  REQUIRE_THROWS_AS(ensemble_stats(wide, prev), std::invalid_argument);

  ParticleEnsemble empty;
  REQUIRE_THROWS_AS(ensemble_stats(empty), std::invalid_argument);
}

TEST_CASE("oracle divergence components") {
  const ParticleEnsemble e = two_points(1.0, -1.0);  // mean 0, variance 1
  const EnsembleStats s = ensemble_stats(e);

  GaussianNd oracle;
  oracle.mean = Eigen::VectorXd::Constant(1, 0.5);
  oracle.cov = Eigen::MatrixXd::Constant(1, 1, 2.0);

  const OracleDivergence d = oracle_divergence(s, oracle);
  REQUIRE(d.mean_error == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(d.cov_error == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(d.tv == Catch::Approx(1.5).margin(1e-14));

  GaussianNd wrong_dim;
  wrong_dim.mean = Eigen::VectorXd::Zero(2);
  wrong_dim.cov = Eigen::MatrixXd::Identity(2, 2);
  REQUIRE_THROWS_AS(oracle_divergence(s, wrong_dim), std::invalid_argument);
}

TEST_CASE("oracle divergence leaves tv undefined for singular covariances") {
  // Both particles at the same point: the sample covariance is singular, the
  // moment errors stay meaningful.
  const ParticleEnsemble e = two_points(0.7, 0.7);
  const EnsembleStats s = ensemble_stats(e);

  GaussianNd oracle;
  oracle.mean = Eigen::VectorXd::Zero(1);
  oracle.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);

  const OracleDivergence d = oracle_divergence(s, oracle);
  REQUIRE(d.mean_error == Catch::Approx(0.7).margin(1e-15));
  REQUIRE(d.cov_error == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(std::isnan(d.tv));
}

TEST_CASE("stationarity score averages displacements inside the window") {
  const std::vector<long> iterations{0, 10, 20, 30};
  const std::vector<double> disp{std::numeric_limits<double>::quiet_NaN(), 1.0, 2.0, 4.0};

  REQUIRE(stationarity_score(iterations, disp, 10, 30) == Catch::Approx(7.0 / 3.0).margin(1e-15));
  REQUIRE(stationarity_score(iterations, disp, 15, 25) == 2.0);
  REQUIRE(stationarity_score(iterations, disp, 30, 30) == 4.0);

  // Empty windows and windows touching the initial snapshot are refused.
  REQUIRE_THROWS_AS(stationarity_score(iterations, disp, 40, 50), std::invalid_argument);
  REQUIRE_THROWS_AS(stationarity_score(iterations, disp, 0, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(stationarity_score(iterations, {1.0}, 0, 10), std::invalid_argument);
}
