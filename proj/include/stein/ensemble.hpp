#pragma once

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/linsolve.hpp"
#include "stein/rng.hpp"

namespace stein {

/// n particles in d dimensions, the empirical measure at one iteration.
/// Row i at iteration l+1 is the image of row i at iteration l.
struct ParticleEnsemble {
  Eigen::MatrixXd positions;  // n x d
  int iteration = 0;

  int count() const { return static_cast<int>(positions.rows()); }
  int dim() const { return static_cast<int>(positions.cols()); }
};

struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Draws one sample: mean + L z with L the Cholesky factor of cov and z
/// standard normal in coordinate order.
inline Eigen::VectorXd sample_gaussian(const GaussianSpec& spec, Rng& rng) {
  CholeskyFactor f = cholesky(spec.cov);
  if (!f.ok()) {
    fail("gaussian covariance is not SPD: leading minor of order %d is not positive",
         f.failed_minor);
  }
  return spec.mean + f.L * rng.normal_vector(spec.dim());
}

/// n i.i.d. prior draws, particle-major stream order. iteration = 0.
inline ParticleEnsemble init_ensemble(const GaussianSpec& prior, int n, Rng& rng) {
  if (n < 1) fail("init_ensemble: need at least one particle, got %d", n);
  const int d = prior.dim();
  if (d < 1 || prior.cov.rows() != d || prior.cov.cols() != d) {
    fail("init_ensemble: inconsistent prior dimensions");
  }
  CholeskyFactor f = cholesky(prior.cov);
  if (!f.ok()) {
    fail("prior covariance is not SPD: leading minor of order %d is not positive",
         f.failed_minor);
  }
  ParticleEnsemble ens;
  ens.positions.resize(n, d);
  for (int i = 0; i < n; ++i) {
    ens.positions.row(i) = (prior.mean + f.L * rng.normal_vector(d)).transpose();
  }
  if (!all_finite(ens.positions)) fail("init_ensemble: non-finite particle coordinates");
  ens.iteration = 0;
  return ens;
}

}  // namespace stein
