#pragma once

#include <Eigen/Dense>

#include "stein/common.hpp"

namespace stein {

/// Which curvature surrogate neg_hessian returns.
enum class Curvature { gauss_newton, exact };

/// Unnormalized target density contract. Gradients and Hessians are
/// closed-form per model; finite differences live only in the tests.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual int dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const = 0;

  /// Negative log-density Hessian, d x d symmetric. The Gauss-Newton
  /// variant is positive definite by construction.
  virtual Eigen::MatrixXd neg_hessian(const Eigen::VectorXd& x,
                                      Curvature c = Curvature::gauss_newton) const = 0;

  /// True when neg_hessian does not depend on x (lets callers evaluate once).
  virtual bool constant_curvature() const { return false; }
};

/// Max over coordinates of the mismatch between grad_log_density and a
/// central finite difference of log_density with step h, scaled by
/// max(1, |gradient coordinate|).
inline double grad_check(const TargetModel& model, const Eigen::VectorXd& x, double h) {
  if (h <= 0.0) fail("grad_check: step size must be positive, got %g", h);
  const int d = model.dim();
  if (x.size() != d) fail("grad_check: point has dimension %ld, model expects %d", x.size(), d);
  const Eigen::VectorXd g = model.grad_log_density(x);
  double worst = 0.0;
  Eigen::VectorXd probe = x;
  for (int i = 0; i < d; ++i) {
    probe(i) = x(i) + h;
    const double fp = model.log_density(probe);
    probe(i) = x(i) - h;
    const double fm = model.log_density(probe);
    probe(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail("grad_check: log_density non-finite at stencil point for coordinate %d", i);
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i)));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace stein
