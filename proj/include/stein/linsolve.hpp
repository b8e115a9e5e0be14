#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "stein/common.hpp"

namespace stein {

enum class Termination { converged, max_iters, negative_curvature };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::negative_curvature: return "negative_curvature";
  }
  return "unknown";
}

/// Outcome record attached to every linear solve.
struct SolveReport {
  int iterations = 0;  // 0 for direct factorizations
  double final_relative_residual = 0.0;
  Termination termination = Termination::converged;
  double jitter_applied = 0.0;  // absolute diagonal shift, 0 if none
  double asymmetry = 0.0;       // max |A_ij - A_ji| seen before symmetrization
};

/// Jitter escalation ladder, as multiples of mean(diag).
inline constexpr std::array<double, 5> kJitterScales = {1e-10, 1e-8, 1e-6, 1e-4, 1e-2};

/// Lower-triangular Cholesky factor. failed_minor is the 1-based order of
/// the first non-positive-definite leading minor (0 on success).
struct CholeskyFactor {
  Eigen::MatrixXd L;
  int failed_minor = 0;
  bool ok() const { return failed_minor == 0; }
};

inline CholeskyFactor cholesky(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int n = static_cast<int>(A.rows());
  CholeskyFactor f;
  RowMajor l = RowMajor::Zero(n, n);  // row slices are contiguous in the inner dot
  for (int j = 0; j < n; ++j) {
    double d = A(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      f.failed_minor = j + 1;
      f.L = l;
      return f;
    }
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = (A(i, j) - s) / l(j, j);
    }
  }
  f.L = l;
  return f;
}

inline Eigen::VectorXd chol_solve(const CholeskyFactor& f, const Eigen::VectorXd& b) {
  Eigen::VectorXd y = f.L.triangularView<Eigen::Lower>().solve(b);
  return f.L.transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Dense SPD inverse via the factor (used for small covariance algebra).
inline Eigen::MatrixXd chol_inverse(const CholeskyFactor& f) {
  const int n = static_cast<int>(f.L.rows());
  Eigen::MatrixXd inv_l =
      f.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return inv_l.transpose() * inv_l;
}

/// Factors A, escalating a diagonal shift tau * mean(diag) over
/// kJitterScales when plain Cholesky fails. Throws when the ladder is
/// exhausted.
struct JitteredFactor {
  CholeskyFactor chol;
  double jitter = 0.0;
};

inline JitteredFactor factor_spd(const Eigen::MatrixXd& A, const char* what = "matrix") {
  JitteredFactor out;
  out.chol = cholesky(A);
  if (out.chol.ok()) return out;
  const double base = A.diagonal().cwiseAbs().mean();
  for (double tau : kJitterScales) {
    const double shift = tau * base;
    if (shift <= 0.0) break;
    Eigen::MatrixXd shifted = A;
    shifted.diagonal().array() += shift;
    out.chol = cholesky(shifted);
    if (out.chol.ok()) {
      out.jitter = shift;
      return out;
    }
  }
  fail("%s is singular: Cholesky failed at leading minor %d even with jitter %.1e * mean(diag)",
       what, out.chol.failed_minor, kJitterScales.back());
}

/// Direct SPD solve with symmetrization, jitter escalation, and a residual
/// guarantee relative to the (symmetrized) input system.
inline std::pair<Eigen::VectorXd, SolveReport> spd_solve(const Eigen::MatrixXd& A,
                                                         const Eigen::VectorXd& b,
                                                         const char* what = "matrix",
                                                         double residual_tol = 1e-10) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    fail("spd_solve: dimension mismatch (%ldx%ld vs %ld)", A.rows(), A.cols(), b.size());
  }
  SolveReport report;
  report.asymmetry = (A - A.transpose()).cwiseAbs().maxCoeff();
  Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  JitteredFactor f = factor_spd(sym, what);
  report.jitter_applied = f.jitter;
  Eigen::VectorXd x = chol_solve(f.chol, b);
  const double bnorm = b.norm();
  auto relative_residual = [&](const Eigen::VectorXd& sol) {
    return bnorm == 0.0 ? 0.0 : (sym * sol - b).norm() / bnorm;
  };
  report.final_relative_residual = relative_residual(x);
  // A jittered factor of a consistent near-singular system leaves an
  // O(jitter * |x|) residual; refining against the unshifted matrix removes
  // it. Inconsistent right-hand sides stall here and fail below.
  for (int pass = 0; pass < 4 && !(report.final_relative_residual <= residual_tol); ++pass) {
    x += chol_solve(f.chol, b - sym * x);
    report.final_relative_residual = relative_residual(x);
  }
  if (!(report.final_relative_residual <= residual_tol)) {
    fail("%s is effectively singular: residual %.3e after jitter %.3e", what,
         report.final_relative_residual, report.jitter_applied);
  }
  return {std::move(x), report};
}

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Conjugate gradient from a zero initial iterate with Steihaug-style
/// termination: stops on relative residual <= tol, on the iteration cap,
/// or when a search direction p has p'Ap <= 0. In the last case the
/// iterate so far is returned (b itself if it happens on the first
/// iteration), so the result is always a descent direction for the
/// quadratic model.
inline std::pair<Eigen::VectorXd, SolveReport> truncated_cg(const LinearOperator& apply,
                                                            const Eigen::VectorXd& b,
                                                            double tol, int max_iters) {
  SolveReport report;
  const double bnorm = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (bnorm == 0.0) return {std::move(x), report};

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!std::isfinite(pap)) fail("truncated_cg: non-finite curvature p'Ap at iteration %d", it);
    if (pap <= 0.0) {
      report.iterations = it;
      report.termination = Termination::negative_curvature;
      report.final_relative_residual = std::sqrt(rr) / bnorm;
      if (it == 1) x = b;
      return {std::move(x), report};
    }
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    report.iterations = it;
    report.final_relative_residual = std::sqrt(rr_next) / bnorm;
    if (report.final_relative_residual <= tol) {
      report.termination = Termination::converged;
      return {std::move(x), report};
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  report.termination = Termination::max_iters;
  return {std::move(x), report};
}

}  // namespace stein
