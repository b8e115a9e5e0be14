#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/ensemble.hpp"
#include "stein/linsolve.hpp"
#include "stein/model.hpp"
#include "stein/rng.hpp"

namespace stein {

/// Gaussian-prior inverse problem with additive noise:
///   log pi(x) = -1/2 (x-m)' C_pr^{-1} (x-m) - |y - F(x)|^2 / (2 sigma^2),
/// normalization constant omitted throughout. Subclasses supply the
/// forward map, its Jacobian, and (where derived) the contraction of its
/// second derivatives used by the exact curvature.
class BayesModel : public TargetModel {
 public:
  int dim() const override { return prior_.dim(); }
  const GaussianSpec& prior() const { return prior_; }
  const Eigen::VectorXd& data() const { return data_; }
  const Eigen::VectorXd& true_parameter() const { return x_true_; }
  double noise_sd() const { return sigma_; }
  int obs_count() const { return static_cast<int>(data_.size()); }

  virtual Eigen::VectorXd forward(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const = 0;

  /// Whether the second-derivative term of the likelihood is available.
  virtual bool has_exact_curvature() const { return false; }

  /// sum_r w_r * Hessian(F_r)(x); only called when exact curvature exists.
  virtual Eigen::MatrixXd forward_hessian_contract(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& w) const {
    (void)x;
    (void)w;
    fail("exact curvature is not derived for this problem; use gauss_newton");
  }

  double log_density(const Eigen::VectorXd& x) const override {
    check_point(x);
    const Eigen::VectorXd r = x - prior_.mean;
    const Eigen::VectorXd misfit = data_ - forward(x);
    return -0.5 * r.dot(prior_precision_ * r) -
           misfit.squaredNorm() / (2.0 * sigma_ * sigma_);
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_point(x);
    const Eigen::VectorXd misfit = data_ - forward(x);
    return -prior_precision_ * (x - prior_.mean) +
           jacobian(x).transpose() * misfit / (sigma_ * sigma_);
  }

  Eigen::MatrixXd neg_hessian(const Eigen::VectorXd& x,
                              Curvature c = Curvature::gauss_newton) const override {
    check_point(x);
    const Eigen::MatrixXd j = jacobian(x);
    Eigen::MatrixXd h = prior_precision_ + j.transpose() * j / (sigma_ * sigma_);
    if (c == Curvature::exact) {
      const Eigen::VectorXd misfit = data_ - forward(x);
      h -= forward_hessian_contract(x, misfit) / (sigma_ * sigma_);
    }
    return h;
  }

 protected:
  void init_bayes(GaussianSpec prior, double sigma) {
    prior_ = std::move(prior);
    sigma_ = sigma;
    CholeskyFactor f = cholesky(prior_.cov);
    if (!f.ok()) {
      fail("prior covariance is not SPD: leading minor of order %d is not positive",
           f.failed_minor);
    }
    prior_precision_ = chol_inverse(f);
  }

  /// Draws x_true from the prior and y = F(x_true) + sigma * noise.
  void draw_data(Rng& rng) {
    x_true_ = sample_gaussian(prior_, rng);
    const Eigen::VectorXd clean = forward(x_true_);
    data_ = clean + sigma_ * rng.normal_vector(static_cast<int>(clean.size()));
  }

  void check_point(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
      fail("model point has dimension %ld, expected %d", x.size(), dim());
    }
  }

  GaussianSpec prior_;
  Eigen::MatrixXd prior_precision_;
  double sigma_ = 1.0;
  Eigen::VectorXd data_;
  Eigen::VectorXd x_true_;
};

/// Plain Gaussian N(mean, cov) target; the Newton step is exact on it.
class GaussianTarget : public TargetModel {
 public:
  GaussianTarget(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)) {
    CholeskyFactor f = cholesky(cov);
    if (!f.ok()) {
      fail("gaussian covariance is not SPD: leading minor of order %d is not positive",
           f.failed_minor);
    }
    precision_ = chol_inverse(f);
    cov_ = std::move(cov);
  }

  int dim() const override { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  double log_density(const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd r = x - mean_;
    return -0.5 * r.dot(precision_ * r);
  }
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    return -precision_ * (x - mean_);
  }
  Eigen::MatrixXd neg_hessian(const Eigen::VectorXd&,
                              Curvature = Curvature::gauss_newton) const override {
    return precision_;
  }
  bool constant_curvature() const override { return true; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
};

/// Scalar logarithmic Rosenbrock observable, d = 2:
///   F(x) = log((1 - x1)^2 + 100 (x2 - x1^2)^2 + delta),
/// with a small floor delta keeping F finite at (1,1). The posterior is
/// bimodal and banana shaped.
class DoubleBanana : public BayesModel {
 public:
  static constexpr double kFloor = 1e-12;

  explicit DoubleBanana(Rng& rng) {
    init_bayes({Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)}, 0.3);
    draw_data(rng);
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd out(1);
    out(0) = std::log(rosen(x) + kFloor);
    return out;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override {
    return rosen_grad(x).transpose() / (rosen(x) + kFloor);
  }

  bool has_exact_curvature() const override { return true; }

  Eigen::MatrixXd forward_hessian_contract(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& w) const override {
    const double q = rosen(x) + kFloor;
    const Eigen::VectorXd g = rosen_grad(x);
    Eigen::MatrixXd hq(2, 2);
    hq << 2.0 - 400.0 * x(1) + 1200.0 * x(0) * x(0), -400.0 * x(0),
        -400.0 * x(0), 200.0;
    return w(0) * (hq / q - g * g.transpose() / (q * q));
  }

 private:
  static double rosen(const Eigen::VectorXd& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  }
  static Eigen::VectorXd rosen_grad(const Eigen::VectorXd& x) {
    const double b = x(1) - x(0) * x(0);
    Eigen::VectorXd g(2);
    g << -2.0 * (1.0 - x(0)) - 400.0 * x(0) * b, 200.0 * b;
    return g;
  }
};

/// Cubic-linear observable F(x) = c1 x1^3 + c2 x2 with one datum; the
/// coefficients are themselves drawn once per problem instance.
class NonlinearRegression : public BayesModel {
 public:
  explicit NonlinearRegression(Rng& rng) {
    c1_ = rng.normal();
    c2_ = rng.normal();
    init_bayes({Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)}, 0.3);
    draw_data(rng);
  }

  double c1() const { return c1_; }
  double c2() const { return c2_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd out(1);
    out(0) = c1_ * x(0) * x(0) * x(0) + c2_ * x(1);
    return out;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override {
    Eigen::MatrixXd j(1, 2);
    j << 3.0 * c1_ * x(0) * x(0), c2_;
    return j;
  }

  bool has_exact_curvature() const override { return true; }

  Eigen::MatrixXd forward_hessian_contract(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& w) const override {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
    h(0, 0) = 6.0 * c1_ * x(0);
    return w(0) * h;
  }

 private:
  double c1_ = 0.0;
  double c2_ = 0.0;
};

/// Brownian motion conditioned on noisy state observations. The inferred
/// parameter is the vector of path increments (whitened prior N(0, dt I)),
/// pushed through the Euler-Maruyama recursion
///   u_{k+1} = u_k + f(u_k) dt + x_{k+1},   f(u) = beta u (1-u^2)/(1+u^2),
/// with u_0 = 0 on [0, 1]. Observations read the state at every
/// (d / obs_count)-th step, i.e. t_i = 0.05 i for the default sizes.
class ConditionedDiffusion : public BayesModel {
 public:
  explicit ConditionedDiffusion(Rng& rng, int steps = 100, int obs = 20) {
    if (steps < 1 || obs < 1 || steps % obs != 0) {
      fail("conditioned_diffusion: %d steps must be a positive multiple of %d observations",
           steps, obs);
    }
    steps_ = steps;
    stride_ = steps / obs;
    dt_ = 1.0 / steps;
    init_bayes({Eigen::VectorXd::Zero(steps),
                dt_ * Eigen::MatrixXd::Identity(steps, steps)},
               0.1);
    draw_data(rng);
  }

  double beta() const { return kBeta; }
  double dt() const { return dt_; }
  int obs_stride() const { return stride_; }

  /// States u_1..u_d of the path built from increment vector x.
  Eigen::VectorXd path(const Eigen::VectorXd& x) const {
    check_point(x);
    Eigen::VectorXd full(steps_);
    recurse(x, nullptr, nullptr, &full);
    return full;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd obs(steps_ / stride_);
    recurse(x, &obs, nullptr, nullptr);
    return obs;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override {
    Eigen::MatrixXd j(steps_ / stride_, steps_);
    recurse(x, nullptr, &j, nullptr);
    return j;
  }

 private:
  static constexpr double kBeta = 10.0;

  static double drift(double u) { return kBeta * u * (1.0 - u * u) / (1.0 + u * u); }
  static double drift_deriv(double u) {
    const double u2 = u * u;
    const double denom = 1.0 + u2;
    return kBeta * (1.0 - 4.0 * u2 - u2 * u2) / (denom * denom);
  }

  /// One pass of the state recursion, filling whichever outputs are
  /// requested. The sensitivity rows follow
  ///   s_{k+1} = (1 + f'(u_k) dt) s_k + e_{k+1}.
  void recurse(const Eigen::VectorXd& x, Eigen::VectorXd* obs, Eigen::MatrixXd* jac,
               Eigen::VectorXd* full) const {
    double u = 0.0;
    Eigen::RowVectorXd s;
    if (jac) s = Eigen::RowVectorXd::Zero(steps_);
    int row = 0;
    for (int k = 0; k < steps_; ++k) {
      if (jac) {
        s *= 1.0 + drift_deriv(u) * dt_;
        s(k) += 1.0;
      }
      u += drift(u) * dt_ + x(k);
      if (!std::isfinite(u)) fail("conditioned_diffusion: non-finite state at step %d", k + 1);
      if (full) (*full)(k) = u;
      if ((k + 1) % stride_ == 0) {
        if (obs) (*obs)(row) = u;
        if (jac) jac->row(row) = s;
        ++row;
      }
    }
  }

  int steps_ = 0;
  int stride_ = 0;
  double dt_ = 0.0;
};

/// Exact Gaussian posterior in moment form, for validation.
struct AnalyticPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

enum class LinearGaussianVariant { laplace_prior, identity_prior };

/// Linear observable F(x) = a'x against a Gaussian prior N(0, K^{-1}).
/// The laplace-prior variant discretizes the 1-d Dirichlet Laplacian on d
/// interior grid points and observes the L2 functional <sin(pi s), u>: the
/// discrete prior carries covariance h * G for the Brownian-bridge kernel G,
/// so the grid sine needs a sqrt(h) weight for a'x to be the L2 pairing.
/// That weight is what keeps the posterior discretization-invariant
/// (trace(C_pos) ~ 1/6 - (1/2 pi^4)/(sigma^2 + 1/2 pi^2) at every d).
/// The identity-prior variant uses K = I with random observation weights.
class LinearGaussian : public BayesModel {
 public:
  LinearGaussian(LinearGaussianVariant variant, int d, Rng& rng) : variant_(variant) {
    if (d < 2) fail("linear_gaussian: dimension %d must be at least 2", d);
    Eigen::MatrixXd k;
    if (variant == LinearGaussianVariant::laplace_prior) {
      const double h = 1.0 / (d + 1);
      k = Eigen::MatrixXd::Zero(d, d);
      a_.resize(d);
      for (int i = 0; i < d; ++i) {
        k(i, i) = 2.0 / (h * h);
        if (i + 1 < d) k(i, i + 1) = k(i + 1, i) = -1.0 / (h * h);
        a_(i) = std::sqrt(h) * std::sin(M_PI * (i + 1) * h);
      }
    } else {
      k = Eigen::MatrixXd::Identity(d, d);
      a_.resize(d);
      for (int i = 0; i < d; ++i) a_(i) = rng.uniform(2.0, 10.0);
    }
    CholeskyFactor f = cholesky(k);
    if (!f.ok()) fail("linear_gaussian: prior precision not SPD at minor %d", f.failed_minor);
    init_bayes({Eigen::VectorXd::Zero(d), chol_inverse(f)}, 0.3);
    prior_precision_ = k;  // keep K exact instead of the inverted inverse
    draw_data(rng);
    prior_k_ = std::move(k);
  }

  LinearGaussianVariant variant() const { return variant_; }
  const Eigen::VectorXd& weights() const { return a_; }
  const Eigen::MatrixXd& prior_precision_matrix() const { return prior_k_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd out(1);
    out(0) = a_.dot(x);
    return out;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override {
    return a_.transpose();
  }

  bool constant_curvature() const override { return true; }
  bool has_exact_curvature() const override { return true; }

  Eigen::MatrixXd forward_hessian_contract(const Eigen::VectorXd&,
                                           const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Zero(dim(), dim());
  }

  /// Posterior in precision form: C_pos = (K + a a'/sigma^2)^{-1},
  /// m_pos = (y / sigma^2) C_pos a.
  AnalyticPosterior analytic_posterior() const {
    const double s2 = noise_sd() * noise_sd();
    Eigen::MatrixXd kpos = prior_k_ + a_ * a_.transpose() / s2;
    CholeskyFactor f = cholesky(kpos);
    if (!f.ok()) fail("linear_gaussian: posterior precision not SPD at minor %d", f.failed_minor);
    AnalyticPosterior post;
    post.covariance = chol_inverse(f);
    post.mean = (data()(0) / s2) * (post.covariance * a_);
    return post;
  }

 private:
  LinearGaussianVariant variant_;
  Eigen::VectorXd a_;
  Eigen::MatrixXd prior_k_;
};

inline DoubleBanana double_banana(Rng& rng) { return DoubleBanana(rng); }
inline DoubleBanana double_banana(std::uint64_t seed) {
  Rng rng(seed);
  return DoubleBanana(rng);
}

inline NonlinearRegression nonlinear_regression(Rng& rng) { return NonlinearRegression(rng); }
inline NonlinearRegression nonlinear_regression(std::uint64_t seed) {
  Rng rng(seed);
  return NonlinearRegression(rng);
}

inline ConditionedDiffusion conditioned_diffusion(Rng& rng, int steps = 100, int obs = 20) {
  return ConditionedDiffusion(rng, steps, obs);
}
inline ConditionedDiffusion conditioned_diffusion(std::uint64_t seed, int steps = 100,
                                                  int obs = 20) {
  Rng rng(seed);
  return ConditionedDiffusion(rng, steps, obs);
}

inline std::pair<LinearGaussian, AnalyticPosterior> linear_gaussian(LinearGaussianVariant variant,
                                                                    int d, Rng& rng) {
  LinearGaussian model(variant, d, rng);
  AnalyticPosterior post = model.analytic_posterior();
  return {std::move(model), std::move(post)};
}
inline std::pair<LinearGaussian, AnalyticPosterior> linear_gaussian(LinearGaussianVariant variant,
                                                                    int d, std::uint64_t seed) {
  Rng rng(seed);
  return linear_gaussian(variant, d, rng);
}

}  // namespace stein
