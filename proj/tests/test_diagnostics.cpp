#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <Eigen/Dense>

#include "stein/diagnostics.hpp"
#include "stein/rng.hpp"
#include "support.hpp"

using namespace stein;
using Catch::Matchers::ContainsSubstring;

namespace {

ParticleEnsemble make_ensemble(const Eigen::MatrixXd& positions) {
  ParticleEnsemble ens;
  ens.positions = positions;
  return ens;
}

}  // namespace

TEST_CASE("summary of a two-point ensemble", "[diagnostics]") {
  Eigen::MatrixXd pos(2, 1);
  pos << -1.0, 1.0;
  const EnsembleSummary s = summarize(make_ensemble(pos));
  REQUIRE(s.mean(0) == 0.0);
  REQUIRE(s.covariance(0, 0) == 2.0);  // unbiased divisor n-1
  REQUIRE(s.cov_trace == 2.0);
  REQUIRE(s.mean_average == 0.0);
  REQUIRE(s.q50(0) == 0.0);
  REQUIRE(s.q05(0) == Catch::Approx(-0.9));  // type-7 interpolation
  REQUIRE(s.q95(0) == Catch::Approx(0.9));
}

TEST_CASE("summary of identical particles collapses", "[diagnostics]") {
  Eigen::MatrixXd pos(4, 2);
  pos << 1.5, -2.0, 1.5, -2.0, 1.5, -2.0, 1.5, -2.0;
  const EnsembleSummary s = summarize(make_ensemble(pos));
  REQUIRE(s.covariance.isZero(1e-15));
  REQUIRE(s.q05 == s.q95);
  REQUIRE(s.q50(0) == 1.5);
  REQUIRE(s.q50(1) == -2.0);
}

TEST_CASE("summary matches normal theory on a large sample", "[diagnostics]") {
  Rng rng(101);
  Eigen::MatrixXd pos(100000, 3);
  for (int i = 0; i < pos.rows(); ++i) {
    for (int j = 0; j < 3; ++j) pos(i, j) = rng.normal();
  }
  const EnsembleSummary s = summarize(make_ensemble(pos));
  REQUIRE(std::abs(s.mean_average) < 0.01);
  REQUIRE(std::abs(s.cov_trace - 3.0) < 0.06);
  for (int j = 0; j < 3; ++j) {
    REQUIRE(s.q05(j) == Catch::Approx(-1.6449).margin(0.02));
    REQUIRE(s.q95(j) == Catch::Approx(1.6449).margin(0.02));
    REQUIRE(s.q50(j) == Catch::Approx(0.0).margin(0.02));
  }
}

TEST_CASE("summary rejects single-particle ensembles", "[diagnostics]") {
  REQUIRE_THROWS_WITH(summarize(make_ensemble(Eigen::MatrixXd::Zero(1, 2))),
                      ContainsSubstring("at least two particles"));
}

TEST_CASE("summary is invariant under particle permutation", "[diagnostics]") {
  Rng rng(102);
  const Eigen::MatrixXd pos = test_support::random_matrix(rng, 20, 3);
  const EnsembleSummary a = summarize(make_ensemble(pos));
  const EnsembleSummary b = summarize(make_ensemble(pos.colwise().reverse()));
  REQUIRE(a.q05 == b.q05);  // sorting makes the quantiles exactly equal
  REQUIRE(a.q50 == b.q50);
  REQUIRE(a.q95 == b.q95);
  REQUIRE((a.mean - b.mean).norm() < 1e-13);
  REQUIRE((a.covariance - b.covariance).norm() < 1e-12);
}

TEST_CASE("empirical quantile interpolates order statistics", "[diagnostics]") {
  const std::vector<double> values = {3.0, 1.0, 4.0, 2.0};
  REQUIRE(empirical_quantile(values, 0.5) == 2.5);
  REQUIRE(empirical_quantile(values, 0.0) == 1.0);
  REQUIRE(empirical_quantile(values, 1.0) == 4.0);
  REQUIRE(empirical_quantile(values, 1.0 / 3.0) == Catch::Approx(2.0));
  REQUIRE(empirical_quantile({7.0}, 0.25) == 7.0);
  REQUIRE_THROWS_WITH(empirical_quantile({}, 0.5), ContainsSubstring("empty"));
  REQUIRE_THROWS_WITH(empirical_quantile({1.0}, 1.5), ContainsSubstring("outside [0, 1]"));
}

TEST_CASE("wider bands contain narrower ones", "[diagnostics]") {
  Rng rng(103);
  std::vector<double> values(500);
  for (double& v : values) v = rng.normal();
  REQUIRE(empirical_quantile(values, 0.01) <= empirical_quantile(values, 0.05));
  REQUIRE(empirical_quantile(values, 0.05) <= empirical_quantile(values, 0.95));
  REQUIRE(empirical_quantile(values, 0.95) <= empirical_quantile(values, 0.99));
}

TEST_CASE("posterior error vanishes on an exact match", "[diagnostics]") {
  Eigen::MatrixXd pos(2, 2);
  pos << 0.0, 1.0, 2.0, 3.0;
  const EnsembleSummary s = summarize(make_ensemble(pos));
  AnalyticPosterior exact;
  exact.mean = s.mean;
  exact.covariance = s.covariance;
  const PosteriorError e = posterior_error(s, exact);
  REQUIRE(e.mean_average_abs_err == 0.0);
  REQUIRE(e.trace_rel_err == 0.0);
  REQUIRE(e.mean_l2_rel_err == 0.0);
}

TEST_CASE("posterior error at pinned values", "[diagnostics]") {
  EnsembleSummary s;
  s.mean = Eigen::VectorXd::Zero(2);
  s.mean_average = 0.0;
  s.covariance = 0.0925 * Eigen::MatrixXd::Identity(2, 2);
  s.cov_trace = 0.185;
  AnalyticPosterior exact;
  exact.mean = Eigen::VectorXd::Zero(2);
  exact.covariance = 0.1295 * Eigen::MatrixXd::Identity(2, 2);
  const PosteriorError e = posterior_error(s, exact);
  // |0.185 - 0.259| / 0.259 = 0.037/0.1295 per-axis = 2/7
  REQUIRE(e.trace_rel_err == Catch::Approx(2.0 / 7.0).epsilon(1e-12));
  REQUIRE(e.mean_average_abs_err == 0.0);
}

TEST_CASE("posterior error rejects dimension mismatches", "[diagnostics]") {
  EnsembleSummary s;
  s.mean = Eigen::VectorXd::Zero(2);
  AnalyticPosterior exact;
  exact.mean = Eigen::VectorXd::Zero(3);
  REQUIRE_THROWS_WITH(posterior_error(s, exact), ContainsSubstring("dimension"));
}

TEST_CASE("mode split counts ties as below", "[diagnostics]") {
  Eigen::MatrixXd pos(5, 2);
  pos << -2.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0;
  const ModeSplit split = mode_split(make_ensemble(pos), 0, 0.0);
  REQUIRE(split.below == 0.6);
  REQUIRE(split.above == 0.4);
  REQUIRE(split.below + split.above == 1.0);

  const ModeSplit all = mode_split(make_ensemble(pos), 0, 10.0);
  REQUIRE(all.below == 1.0);
  REQUIRE_THROWS_WITH(mode_split(make_ensemble(pos), 5, 0.0),
                      ContainsSubstring("axis 5 out of range"));
}

TEST_CASE("band coverage hits the trivial extremes", "[diagnostics]") {
  Rng rng(104);
  ParticleEnsemble ens;
  ens.positions = test_support::random_matrix(rng, 50, 2);
  Eigen::VectorXd truth(3);
  truth << 0.0, 0.0, 0.0;

  // constant pushforward equal to the truth: bands are degenerate but inclusive
  const double full = band_coverage(
      ens, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(3); }, truth);
  REQUIRE(full == 1.0);

  Eigen::VectorXd far(3);
  far << 100.0, -100.0, 100.0;
  const double none = band_coverage(
      ens, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(3); }, far);
  REQUIRE(none == 0.0);
}

TEST_CASE("band coverage matches a hand count", "[diagnostics]") {
  // 100 particles with values 1..100 replicated at every truth index: each
  // band is [q05, q95] = [1 + 0.05*99, 1 + 0.95*99] = [5.95, 95.05], so
  // truths 3 and 99 fall outside and only 50 is covered.
  Eigen::MatrixXd pos(100, 1);
  for (int i = 0; i < 100; ++i) pos(i, 0) = i + 1.0;
  ParticleEnsemble ens = make_ensemble(pos);
  Eigen::VectorXd truth(3);
  truth << 3.0, 50.0, 99.0;
  const double got = band_coverage(
      ens, [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(3, x(0)); },
      truth);
  REQUIRE(got == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("band coverage validates the pushforward shape", "[diagnostics]") {
  Rng rng(105);
  ParticleEnsemble ens;
  ens.positions = test_support::random_matrix(rng, 10, 2);
  Eigen::VectorXd truth(2);
  truth << 0.0, 0.0;
  REQUIRE_THROWS_WITH(
      band_coverage(ens, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(5); },
                    truth),
      ContainsSubstring("returned 5 values, expected 2"));
}

TEST_CASE("moment discrepancy is symmetric and vanishes on equality", "[diagnostics]") {
  Rng rng(106);
  const Eigen::MatrixXd pos_a = test_support::random_matrix(rng, 30, 2);
  const Eigen::MatrixXd pos_b = test_support::random_matrix(rng, 30, 2);
  const EnsembleSummary a = summarize(make_ensemble(pos_a));
  const EnsembleSummary b = summarize(make_ensemble(pos_b));

  const MomentDiscrepancy same = moment_discrepancy(a, a);
  REQUIRE(same.mean_rel == 0.0);
  REQUIRE(same.trace_rel == 0.0);

  const MomentDiscrepancy ab = moment_discrepancy(a, b);
  const MomentDiscrepancy ba = moment_discrepancy(b, a);
  REQUIRE(ab.mean_rel == ba.mean_rel);
  REQUIRE(ab.trace_rel == ba.trace_rel);
  REQUIRE(ab.mean_rel > 0.0);
}
