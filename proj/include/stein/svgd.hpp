#pragma once

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/ensemble.hpp"
#include "stein/kernel.hpp"
#include "stein/model.hpp"
#include "stein/parallel.hpp"

namespace stein {

/// Update direction evaluated at every particle; row i belongs to x_i.
struct DirectionField {
  Eigen::MatrixXd values;  // n x d
};

/// Rows of grad log pi at each particle, evaluated in parallel.
inline Eigen::MatrixXd grad_log_table(const TargetModel& model, const Eigen::MatrixXd& positions) {
  const int n = static_cast<int>(positions.rows());
  Eigen::MatrixXd grads(n, positions.cols());
  parallel_for(0, n, [&](int i) {
    grads.row(i) = model.grad_log_density(positions.row(i).transpose()).transpose();
  });
  for (int i = 0; i < n; ++i) {
    if (!all_finite(grads.row(i))) fail("svgd: non-finite log-density gradient at particle %d", i);
  }
  return grads;
}

/// G = (1/n)(K Gamma + R) where Gamma holds the score rows and R is the
/// repulsion term: R.row(m) = sum_j grad1 k(x_j, x_m)
///                          = -(1/g)[(K Y).row(m) - (K 1)_m Y.row(m)].
inline Eigen::MatrixXd direction_from_tables(const KernelTables& t, const Eigen::MatrixXd& grads,
                                             double g) {
  const int n = static_cast<int>(grads.rows());
  Eigen::MatrixXd out = t.K * grads;
  out.noalias() -= (1.0 / g) * (t.K * t.Y);
  out += (1.0 / g) * (t.K.rowwise().sum().asDiagonal() * t.Y);
  out /= static_cast<double>(n);
  return out;
}

inline DirectionField svgd_direction(const ParticleEnsemble& ensemble, const TargetModel& model,
                                     const MetricState& metric) {
  const KernelTables tables = kernel_tables(metric, ensemble.positions);
  const Eigen::MatrixXd grads = grad_log_table(model, ensemble.positions);
  return {direction_from_tables(tables, grads, metric.g)};
}

inline ParticleEnsemble svgd_step(const ParticleEnsemble& ensemble, const TargetModel& model,
                                  const MetricState& metric, double step_size) {
  if (!(step_size >= 0.0)) fail("svgd_step: step size %g must be non-negative", step_size);
  const DirectionField dir = svgd_direction(ensemble, model, metric);
  ParticleEnsemble next;
  next.positions = ensemble.positions + step_size * dir.values;
  next.iteration = ensemble.iteration + 1;
  return next;
}

}  // namespace stein
