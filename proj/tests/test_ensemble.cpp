#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "stein/ensemble.hpp"
#include "stein/rng.hpp"
#include "support.hpp"

using namespace stein;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("init_ensemble has the right shape and iteration", "[ensemble]") {
  Rng rng(1);
  GaussianSpec prior{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  const ParticleEnsemble ens = init_ensemble(prior, 7, rng);
  REQUIRE(ens.count() == 7);
  REQUIRE(ens.dim() == 3);
  REQUIRE(ens.iteration == 0);
  REQUIRE(all_finite(ens.positions));
}

TEST_CASE("init_ensemble is deterministic in the seed", "[ensemble]") {
  GaussianSpec prior{Eigen::VectorXd::Ones(2), 2.0 * Eigen::MatrixXd::Identity(2, 2)};
  Rng a(42), b(42);
  const ParticleEnsemble x = init_ensemble(prior, 5, a);
  const ParticleEnsemble y = init_ensemble(prior, 5, b);
  REQUIRE(x.positions == y.positions);
}

TEST_CASE("init_ensemble draws particles in particle-major stream order", "[ensemble]") {
  // Particle i must consume the same stream slice as the i-th standalone draw.
  GaussianSpec prior{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  Rng a(9), b(9);
  const ParticleEnsemble ens = init_ensemble(prior, 2, a);
  const Eigen::VectorXd first = sample_gaussian(prior, b);
  const Eigen::VectorXd second = sample_gaussian(prior, b);
  REQUIRE(ens.positions.row(0).transpose() == first);
  REQUIRE(ens.positions.row(1).transpose() == second);
}

TEST_CASE("sample_gaussian applies mean and covariance factor", "[ensemble]") {
  Rng rng(3);
  Eigen::VectorXd mean(2);
  mean << 10.0, -5.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 4.0, 0.0, 0.0, 0.25;
  Rng ref(3);
  const Eigen::VectorXd z = ref.normal_vector(2);
  const Eigen::VectorXd x = sample_gaussian({mean, cov}, rng);
  REQUIRE(x(0) == Catch::Approx(10.0 + 2.0 * z(0)).margin(1e-14));
  REQUIRE(x(1) == Catch::Approx(-5.0 + 0.5 * z(1)).margin(1e-14));
}

TEST_CASE("ensemble sample moments approach the prior", "[ensemble]") {
  Rng rng(2024);
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const ParticleEnsemble ens = init_ensemble({mean, cov}, 20000, rng);
  const Eigen::VectorXd m = ens.positions.colwise().mean().transpose();
  const Eigen::MatrixXd centered = ens.positions.rowwise() - m.transpose();
  const Eigen::MatrixXd c = centered.transpose() * centered / (ens.count() - 1.0);
  REQUIRE((m - mean).cwiseAbs().maxCoeff() < 0.05);
  REQUIRE((c - cov).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("init_ensemble rejects a non-SPD prior with the failing minor", "[ensemble]") {
  Rng rng(1);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  cov(1, 1) = -1.0;
  REQUIRE_THROWS_WITH(init_ensemble({Eigen::VectorXd::Zero(3), cov}, 4, rng),
                      ContainsSubstring("prior covariance is not SPD") &&
                          ContainsSubstring("order 2"));
}

TEST_CASE("init_ensemble rejects an empty ensemble", "[ensemble]") {
  Rng rng(1);
  GaussianSpec prior{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  REQUIRE_THROWS_WITH(init_ensemble(prior, 0, rng), ContainsSubstring("at least one particle"));
}

TEST_CASE("init_ensemble rejects inconsistent prior dimensions", "[ensemble]") {
  Rng rng(1);
  GaussianSpec prior{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(2, 2)};
  REQUIRE_THROWS_WITH(init_ensemble(prior, 4, rng), ContainsSubstring("inconsistent"));
}
