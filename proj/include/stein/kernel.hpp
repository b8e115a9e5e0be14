#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/ensemble.hpp"
#include "stein/model.hpp"

namespace stein {

enum class KernelFamily { isotropic, scaled_hessian };

/// Per-iteration kernel state. Both families evaluate through the same
/// formula k(x,x') = exp(-(x-x')' M (x-x') / (2g)):
///   - scaled-hessian: M is the ensemble-averaged curvature, g = g(d)
///   - isotropic:      M = (2/h) I with h the median-heuristic bandwidth
///     and g = 1, which reproduces exp(-|x-x'|^2 / h)
struct MetricState {
  Eigen::MatrixXd M;
  double g = 1.0;
  KernelFamily variant = KernelFamily::scaled_hessian;

  int dim() const { return static_cast<int>(M.rows()); }
};

struct KernelEval {
  double value = 0.0;
  Eigen::VectorXd grad1;  // gradient with respect to the first argument
};

/// Median-heuristic bandwidth h = med^2 / log n, with med the median of
/// all n(n-1)/2 pairwise Euclidean distances.
inline double median_bandwidth(const ParticleEnsemble& ensemble) {
  const int n = ensemble.count();
  if (n < 2) fail("median_bandwidth: need at least two particles, got %d", n);
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  const Eigen::MatrixXd xt = ensemble.positions.transpose();  // d x n, column access
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dists.push_back((xt.col(i) - xt.col(j)).norm());
    }
  }
  std::sort(dists.begin(), dists.end());
  const size_t m = dists.size();
  const double med = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  if (med <= 0.0) {
    fail("median_bandwidth: all particles coincident (median distance 0), bandwidth degenerate");
  }
  return med * med / std::log(static_cast<double>(n));
}

inline MetricState isotropic_metric(const ParticleEnsemble& ensemble) {
  const double h = median_bandwidth(ensemble);
  MetricState ms;
  ms.M = (2.0 / h) * Eigen::MatrixXd::Identity(ensemble.dim(), ensemble.dim());
  ms.g = 1.0;
  ms.variant = KernelFamily::isotropic;
  return ms;
}

/// Dimension scaling g(d) = d, the default for the scaled-hessian kernel.
inline double dimension_scaling(int d) { return static_cast<double>(d); }

/// Ensemble curvature metric M = (1/n) sum_i A(x_i) with A the model's
/// negative log-Hessian (Gauss-Newton by default, so M is SPD).
inline MetricState compute_metric(const ParticleEnsemble& ensemble, const TargetModel& model,
                                  const std::function<double(int)>& scaling = dimension_scaling,
                                  Curvature curvature = Curvature::gauss_newton) {
  const int n = ensemble.count();
  const int d = ensemble.dim();
  if (n < 1) fail("compute_metric: empty ensemble");
  MetricState ms;
  ms.variant = KernelFamily::scaled_hessian;
  ms.g = scaling(d);
  if (!(ms.g > 0.0)) fail("compute_metric: scaling g(%d) = %g must be positive", d, ms.g);
  if (model.constant_curvature()) {
    ms.M = model.neg_hessian(ensemble.positions.row(0).transpose(), curvature);
    if (!all_finite(ms.M)) fail("compute_metric: non-finite curvature at particle 0");
    return ms;
  }
  ms.M = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd a = model.neg_hessian(ensemble.positions.row(i).transpose(), curvature);
    if (!all_finite(a)) fail("compute_metric: non-finite curvature at particle %d", i);
    ms.M += a;
  }
  ms.M /= static_cast<double>(n);
  return ms;
}

/// Kernel value and first-argument gradient at a single pair.
inline KernelEval evaluate(const MetricState& metric, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xp) {
  if (x.size() != metric.dim() || xp.size() != metric.dim()) {
    fail("kernel evaluate: dimension mismatch");
  }
  if (!all_finite(x) || !all_finite(xp)) fail("kernel evaluate: non-finite input point");
  const Eigen::VectorXd diff = x - xp;
  const Eigen::VectorXd mdiff = metric.M * diff;
  KernelEval out;
  out.value = std::exp(-0.5 / metric.g * diff.dot(mdiff));
  out.grad1 = -(out.value / metric.g) * mdiff;
  return out;
}

/// Batched kernel quantities shared by the direction and Newton assembly
/// paths: K(i,j) = k(x_i, x_j) and Y = X M, from which the gradient of k
/// with respect to its first argument is
///   grad1(m, s) = -(1/g) K(m,s) (Y.row(m) - Y.row(s)).
struct KernelTables {
  Eigen::MatrixXd K;  // n x n
  Eigen::MatrixXd Y;  // n x d
};

inline KernelTables kernel_tables(const MetricState& metric, const Eigen::MatrixXd& positions) {
  const int n = static_cast<int>(positions.rows());
  KernelTables t;
  t.Y.noalias() = positions * metric.M;
  Eigen::VectorXd q = (positions.array() * t.Y.array()).rowwise().sum();
  t.K.noalias() = positions * t.Y.transpose();
  t.K = ((q.replicate(1, n) + q.transpose().replicate(n, 1) - 2.0 * t.K)
             .cwiseMax(0.0) * (-0.5 / metric.g))
            .array()
            .exp();
  return t;
}

}  // namespace stein
