#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/ensemble.hpp"
#include "stein/kernel.hpp"
#include "stein/linsolve.hpp"
#include "stein/model.hpp"
#include "stein/parallel.hpp"
#include "stein/svgd.hpp"

namespace stein {

enum class NewtonMode { full_dense, block_diagonal, operator_form };
enum class SvnStrategy { full, block_diagonal, ncg };

inline const char* to_string(SvnStrategy s) {
  switch (s) {
    case SvnStrategy::full: return "full";
    case SvnStrategy::block_diagonal: return "bd";
    case SvnStrategy::ncg: return "ncg";
  }
  return "unknown";
}

struct NewtonOptions {
  Curvature curvature = Curvature::gauss_newton;
  int dense_limit = 5000;       // refuse full-dense assembly past this many unknowns
  double cg_tol = 1e-3;         // inexact Newton forcing tolerance
  int max_cg_iters = 0;         // 0 -> min(n*d, 100)
  double residual_tol = 1e-8;   // accepted direct solves must meet this
};

/// The Galerkin Newton system over coefficient rows alpha^k. Every mode
/// keeps the kernel tables and per-particle curvatures so H*v products can
/// be formed matrix-free; full-dense additionally materializes the
/// flattened (n*d) x (n*d) matrix and block-diagonal the n diagonal
/// d x d blocks.
struct NewtonSystem {
  NewtonMode mode = NewtonMode::operator_form;
  int n = 0;
  int d = 0;
  double g = 1.0;
  Eigen::MatrixXd rhs;                       // n x d, rows = svgd direction at particles
  Eigen::MatrixXd K;                         // n x n kernel values
  Eigen::MatrixXd Y;                         // n x d, positions * M
  std::vector<Eigen::MatrixXd> curvatures;   // size n, or size 1 when shared
  bool shared_curvature = false;
  Eigen::MatrixXd dense;                     // (n*d) x (n*d), particle-major
  std::vector<Eigen::MatrixXd> diag_blocks;  // n blocks of d x d

  const Eigen::MatrixXd& curvature_at(int m) const {
    return curvatures[shared_curvature ? 0 : static_cast<size_t>(m)];
  }
};

struct NewtonCoefficients {
  Eigen::MatrixXd alpha;  // n x d, row k = alpha^k
  SolveReport report;     // worst case across blocks for the decoupled solve
};

/// Particle-major flattening: row s of a coefficient array occupies
/// entries [s*d, (s+1)*d) of the stacked vector.
inline Eigen::VectorXd flatten_rows(const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd t = rows.transpose();
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

inline Eigen::MatrixXd unflatten_rows(const Eigen::VectorXd& v, int n, int d) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, n).transpose();
}

/// Reference form of one coupled-system block,
///   (H^{s,k})_ij = (1/n) sum_m [ A_ij(x_m) k(x_m,x_s) k(x_m,x_k)
///                                + d_i k(x_m,x_s) d_j k(x_m,x_k) ],
/// evaluated pairwise. The full-dense assembly reproduces these blocks
/// through batched products; tests hold the two paths together. The
/// block-diagonal assembly lumps each block row instead (see assemble).
inline Eigen::MatrixXd h_block(const ParticleEnsemble& ensemble, const TargetModel& model,
                               const MetricState& metric, int s, int k,
                               Curvature curvature = Curvature::gauss_newton) {
  const int n = ensemble.count();
  const int d = ensemble.dim();
  if (s < 0 || s >= n || k < 0 || k >= n) fail("h_block: particle index out of range");
  const Eigen::VectorXd xs = ensemble.positions.row(s).transpose();
  const Eigen::VectorXd xk = ensemble.positions.row(k).transpose();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int m = 0; m < n; ++m) {
    const Eigen::VectorXd xm = ensemble.positions.row(m).transpose();
    const Eigen::MatrixXd a = model.neg_hessian(xm, curvature);
    if (!all_finite(a)) fail("h_block: non-finite curvature at particle %d", m);
    const KernelEval es = evaluate(metric, xm, xs);
    const KernelEval ek = evaluate(metric, xm, xk);
    h.noalias() += a * (es.value * ek.value);
    h.noalias() += es.grad1 * ek.grad1.transpose();
  }
  return h / static_cast<double>(n);
}

namespace detail {

/// Weighted curvature sums for every particle in one product: column s of
/// the result is vec( sum_m weights(m,s) A_m ).
inline Eigen::MatrixXd batched_curvature_terms(const NewtonSystem& sys,
                                               const Eigen::MatrixXd& weights) {
  const int n = sys.n;
  const int d = sys.d;
  Eigen::MatrixXd amat(d * d, n);
  for (int m = 0; m < n; ++m) {
    amat.col(m) = Eigen::Map<const Eigen::VectorXd>(sys.curvature_at(m).data(), d * d);
  }
  return amat * weights;
}

inline void fill_curvatures(NewtonSystem& sys, const ParticleEnsemble& ensemble,
                            const TargetModel& model, Curvature curvature) {
  const int n = sys.n;
  if (model.constant_curvature()) {
    sys.shared_curvature = true;
    sys.curvatures.resize(1);
    sys.curvatures[0] = model.neg_hessian(ensemble.positions.row(0).transpose(), curvature);
    if (!all_finite(sys.curvatures[0])) fail("assemble: non-finite curvature at particle 0");
    return;
  }
  sys.curvatures.resize(n);
  parallel_for(0, n, [&](int m) {
    sys.curvatures[m] = model.neg_hessian(ensemble.positions.row(m).transpose(), curvature);
  });
  for (int m = 0; m < n; ++m) {
    if (!all_finite(sys.curvatures[m])) fail("assemble: non-finite curvature at particle %d", m);
  }
}

}  // namespace detail

inline NewtonSystem assemble(const ParticleEnsemble& ensemble, const TargetModel& model,
                             const MetricState& metric, NewtonMode mode,
                             const NewtonOptions& opts = {}) {
  const int n = ensemble.count();
  const int d = ensemble.dim();
  if (mode == NewtonMode::full_dense && static_cast<long>(n) * d > opts.dense_limit) {
    fail("assemble: full-dense system has %ld unknowns, over the limit of %d; "
         "use operator mode with solve_ncg",
         static_cast<long>(n) * d, opts.dense_limit);
  }
  NewtonSystem sys;
  sys.mode = mode;
  sys.n = n;
  sys.d = d;
  sys.g = metric.g;
  KernelTables tables = kernel_tables(metric, ensemble.positions);
  const Eigen::MatrixXd grads = grad_log_table(model, ensemble.positions);
  sys.rhs = direction_from_tables(tables, grads, metric.g);
  sys.K = std::move(tables.K);
  sys.Y = std::move(tables.Y);
  detail::fill_curvatures(sys, ensemble, model, opts.curvature);

  const double gg_n = 1.0 / (sys.g * sys.g * n);
  if (mode == NewtonMode::block_diagonal) {
    // Keeping the raw diagonal block of the coupled system would overshoot:
    // the applied update W(x_s) = sum_k k(x_k,x_s) alpha^k accumulates a
    // whole kernel row of coefficients while each raw block carries only
    // O(1/row mass) of the system, so steps grow with kernel crowding.
    // Lumping each block row instead (freezing alpha across the row, as in
    // mass lumping) gives B_s = (1/n) sum_m K(m,s) (K1)_m A_m, which keeps
    // the evaluated update consistent at any crowding and coincides with
    // the coupled solve at n = 1. The kernel-gradient outer products are
    // dropped: their lumped row sum is asymmetric, and they only rescale
    // the preconditioner, never the fixed point set by the right-hand side.
    const Eigen::VectorXd k1 = sys.K.rowwise().sum();
    sys.diag_blocks.resize(n);
    if (sys.shared_curvature) {
      const Eigen::VectorXd lump = sys.K * k1 / n;  // (1/n) sum_m K(m,s) (K1)_m
      parallel_for(0, n, [&](int s) { sys.diag_blocks[s] = lump(s) * sys.curvatures[0]; });
    } else {
      const Eigen::MatrixXd weights = (k1 / n).asDiagonal() * sys.K;
      const Eigen::MatrixXd curv_cols = detail::batched_curvature_terms(sys, weights);
      parallel_for(0, n, [&](int s) {
        sys.diag_blocks[s] = Eigen::Map<const Eigen::MatrixXd>(curv_cols.col(s).data(), d, d);
      });
    }
  } else if (mode == NewtonMode::full_dense) {
    sys.dense.resize(n * d, n * d);
    parallel_for(0, n, [&](int s) {
      const Eigen::MatrixXd u = sys.Y.rowwise() - sys.Y.row(s);
      for (int k = s; k < n; ++k) {
        // w-weighted cross moment; shifting rows by y_s - y_k turns the
        // k-centered factor into the s-centered one already at hand.
        const Eigen::VectorXd w =
            (sys.K.col(s).array() * sys.K.col(k).array()).matrix();
        Eigen::MatrixXd block(d, d);
        if (sys.shared_curvature) {
          block = (w.sum() / n) * sys.curvatures[0];
        } else {
          block.setZero();
          for (int m = 0; m < n; ++m) block.noalias() += w(m) * sys.curvatures[m];
          block /= static_cast<double>(n);
        }
        const Eigen::MatrixXd wu = w.asDiagonal() * u;
        block.noalias() += gg_n * (u.transpose() * wu);
        const Eigen::VectorXd uw = wu.colwise().sum().transpose();
        const Eigen::VectorXd shift = (sys.Y.row(s) - sys.Y.row(k)).transpose();
        block.noalias() += gg_n * (uw * shift.transpose());
        sys.dense.block(s * d, k * d, d, d) = block;
        if (k != s) sys.dense.block(k * d, s * d, d, d) = block.transpose();
      }
    });
  }
  return sys;
}

/// Matrix-free product of the coupled system with coefficient rows V,
/// in O(n^2 d + n d^2):
///   (HV)^s = (1/n) sum_m K(m,s) A_m u_m
///          + (1/(g^2 n)) sum_m K(m,s) r_m (y_m - y_s),
/// where u_m = sum_k K(m,k) v^k and r_m = y_m' u_m - (K t)_m with
/// t_k = y_k' v^k.
inline Eigen::MatrixXd apply_newton(const NewtonSystem& sys, const Eigen::MatrixXd& v) {
  const int n = sys.n;
  if (v.rows() != n || v.cols() != sys.d) fail("apply_newton: coefficient shape mismatch");
  const Eigen::MatrixXd u = sys.K * v;
  Eigen::MatrixXd w(n, sys.d);
  if (sys.shared_curvature) {
    w.noalias() = u * sys.curvatures[0];  // A symmetric, so row-wise A u_m = u A
  } else {
    parallel_for(0, n, [&](int m) { w.row(m) = u.row(m) * sys.curvature_at(m); });
  }
  const Eigen::VectorXd t = (sys.Y.array() * v.array()).rowwise().sum();
  const Eigen::VectorXd r =
      (sys.Y.array() * u.array()).rowwise().sum().matrix() - sys.K * t;
  Eigen::MatrixXd out = sys.K * w;
  const double gg = sys.g * sys.g;
  out.noalias() += (1.0 / gg) * (sys.K * (r.asDiagonal() * sys.Y));
  out -= (1.0 / gg) * ((sys.K * r).asDiagonal() * sys.Y);
  return out / static_cast<double>(n);
}

inline NewtonCoefficients solve_full(const NewtonSystem& sys,
                                     const NewtonOptions& opts = {}) {
  if (sys.mode != NewtonMode::full_dense) {
    fail("solve_full: system was not assembled in full-dense mode");
  }
  const Eigen::VectorXd b = flatten_rows(sys.rhs);
  NewtonCoefficients out;
  try {
    auto [x, report] = spd_solve(sys.dense, b, "coupled Newton system", opts.residual_tol);
    out.alpha = unflatten_rows(x, sys.n, sys.d);
    out.report = report;
    return out;
  } catch (const error&) {
    // Crowded kernels drive the section basis toward linear dependence, so
    // the coupled matrix becomes numerically rank-deficient and no
    // factorization can meet a residual tolerance relative to |b|. A
    // rank-deficient quadratic model does not support a full Newton step, so
    // take the Levenberg-Marquardt one instead: shift the diagonal by one
    // mean-diagonal unit, which leaves well-determined modes nearly intact
    // and bounds the response of the unsupported ones. The report records
    // the shift in jitter_applied and the residual against the shifted
    // system, which is the system actually solved.
    Eigen::MatrixXd damped = sys.dense;
    const double shift = damped.diagonal().cwiseAbs().mean();
    damped.diagonal().array() += shift;
    auto [x, report] = spd_solve(damped, b, "damped coupled Newton system", opts.residual_tol);
    out.alpha = unflatten_rows(x, sys.n, sys.d);
    out.report = report;
    out.report.jitter_applied = shift;
    return out;
  }
}

inline NewtonCoefficients solve_block_diagonal(const NewtonSystem& sys,
                                               const NewtonOptions& opts = {}) {
  if (sys.mode != NewtonMode::block_diagonal) {
    fail("solve_block_diagonal: diagonal blocks not assembled (%s mode)",
         sys.mode == NewtonMode::operator_form ? "operator" : "full-dense");
  }
  NewtonCoefficients out;
  out.alpha.resize(sys.n, sys.d);
  std::vector<SolveReport> reports(sys.n);
  parallel_for(0, sys.n, [&](int s) {
    auto [x, report] = spd_solve(sys.diag_blocks[s], sys.rhs.row(s).transpose(),
                                 detail::strf("Newton block %d", s).c_str(),
                                 opts.residual_tol);
    out.alpha.row(s) = x.transpose();
    reports[s] = report;
  });
  for (const SolveReport& r : reports) {
    out.report.jitter_applied = std::max(out.report.jitter_applied, r.jitter_applied);
    out.report.final_relative_residual =
        std::max(out.report.final_relative_residual, r.final_relative_residual);
    out.report.asymmetry = std::max(out.report.asymmetry, r.asymmetry);
  }
  return out;
}

inline NewtonCoefficients solve_ncg(const NewtonSystem& sys, const NewtonOptions& opts = {}) {
  const int nd = sys.n * sys.d;
  const int cap = opts.max_cg_iters > 0 ? opts.max_cg_iters : std::min(nd, 100);
  LinearOperator apply = [&](const Eigen::VectorXd& v) {
    return flatten_rows(apply_newton(sys, unflatten_rows(v, sys.n, sys.d)));
  };
  auto [x, report] = truncated_cg(apply, flatten_rows(sys.rhs), opts.cg_tol, cap);
  NewtonCoefficients out;
  out.alpha = unflatten_rows(x, sys.n, sys.d);
  out.report = report;
  if (!all_finite(out.alpha)) fail("solve_ncg: non-finite coefficients");
  return out;
}

inline NewtonCoefficients solve_newton(const NewtonSystem& sys, SvnStrategy strategy,
                                       const NewtonOptions& opts = {}) {
  switch (strategy) {
    case SvnStrategy::full: return solve_full(sys, opts);
    case SvnStrategy::block_diagonal: return solve_block_diagonal(sys, opts);
    case SvnStrategy::ncg: return solve_ncg(sys, opts);
  }
  fail("solve_newton: unknown strategy");
}

inline NewtonMode mode_for(SvnStrategy strategy) {
  switch (strategy) {
    case SvnStrategy::full: return NewtonMode::full_dense;
    case SvnStrategy::block_diagonal: return NewtonMode::block_diagonal;
    case SvnStrategy::ncg: return NewtonMode::operator_form;
  }
  fail("mode_for: unknown strategy");
}

/// One Newton update: assemble, solve for alpha, move every particle along
/// W(x_s) = sum_k alpha^k k(x_k, x_s), all against the iteration-l snapshot.
inline ParticleEnsemble svn_step(const ParticleEnsemble& ensemble, const TargetModel& model,
                                 const MetricState& metric, SvnStrategy strategy,
                                 double step_size = 1.0, const NewtonOptions& opts = {},
                                 SolveReport* report_out = nullptr) {
  if (!(step_size >= 0.0)) fail("svn_step: step size %g must be non-negative", step_size);
  const NewtonSystem sys = assemble(ensemble, model, metric, mode_for(strategy), opts);
  const NewtonCoefficients coeffs = solve_newton(sys, strategy, opts);
  if (report_out) *report_out = coeffs.report;
  ParticleEnsemble next;
  next.positions = ensemble.positions + step_size * (sys.K * coeffs.alpha);
  next.iteration = ensemble.iteration + 1;
  return next;
}

}  // namespace stein
