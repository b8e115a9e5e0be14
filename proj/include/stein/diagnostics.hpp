#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/ensemble.hpp"
#include "stein/parallel.hpp"
#include "stein/problems.hpp"

namespace stein {

/// Moments and 90% marginal bands of one ensemble snapshot.
struct EnsembleSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, divisor n-1
  double mean_average = 0.0;   // (1/d) sum_i mean_i
  double cov_trace = 0.0;
  Eigen::VectorXd q05, q50, q95;  // per-coordinate bands, q05 <= q50 <= q95
};

namespace detail {

inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Linearly interpolated order statistic (the usual "type 7" convention):
/// at probability p the index is h = (n-1) p and the value interpolates
/// between the order statistics bracketing h.
inline double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) fail("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) fail("empirical_quantile: probability %g outside [0, 1]", p);
  std::sort(values.begin(), values.end());
  return detail::sorted_quantile(values, p);
}

inline EnsembleSummary summarize(const ParticleEnsemble& ensemble) {
  const int n = ensemble.count();
  const int d = ensemble.dim();
  if (n < 2) fail("summarize: need at least two particles for a covariance, got %d", n);
  EnsembleSummary s;
  s.mean = ensemble.positions.colwise().mean().transpose();
  const Eigen::MatrixXd centered = ensemble.positions.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(n - 1);
  s.mean_average = s.mean.mean();
  s.cov_trace = s.covariance.trace();
  s.q05.resize(d);
  s.q50.resize(d);
  s.q95.resize(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> col(ensemble.positions.col(j).data(),
                            ensemble.positions.col(j).data() + n);
    std::sort(col.begin(), col.end());
    s.q05(j) = detail::sorted_quantile(col, 0.05);
    s.q50(j) = detail::sorted_quantile(col, 0.50);
    s.q95(j) = detail::sorted_quantile(col, 0.95);
  }
  return s;
}

/// Errors of an ensemble summary against an exact Gaussian posterior.
struct PosteriorError {
  double mean_average_abs_err = 0.0;
  double trace_rel_err = 0.0;
  double mean_l2_rel_err = 0.0;
};

inline PosteriorError posterior_error(const EnsembleSummary& summary,
                                      const AnalyticPosterior& analytic) {
  if (summary.mean.size() != analytic.mean.size()) {
    fail("posterior_error: summary dimension %ld vs analytic %ld", summary.mean.size(),
         analytic.mean.size());
  }
  PosteriorError e;
  e.mean_average_abs_err = std::abs(summary.mean_average - analytic.mean.mean());
  const double tr = analytic.covariance.trace();
  e.trace_rel_err = std::abs(summary.cov_trace - tr) / std::max(std::abs(tr), 1e-12);
  e.mean_l2_rel_err =
      (summary.mean - analytic.mean).norm() / std::max(analytic.mean.norm(), 1e-12);
  return e;
}

/// Fractions of particles on each side of a threshold along one axis;
/// ties count as below, so the two fractions always sum to one.
struct ModeSplit {
  double below = 0.0;
  double above = 0.0;
};

inline ModeSplit mode_split(const ParticleEnsemble& ensemble, int axis, double threshold) {
  const int n = ensemble.count();
  if (axis < 0 || axis >= ensemble.dim()) fail("mode_split: axis %d out of range", axis);
  if (n < 1) fail("mode_split: empty ensemble");
  int below = 0;
  for (int i = 0; i < n; ++i) {
    if (ensemble.positions(i, axis) <= threshold) ++below;
  }
  ModeSplit split;
  split.below = static_cast<double>(below) / n;
  split.above = static_cast<double>(n - below) / n;
  return split;
}

using Pushforward = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Pushes every particle through the observable map and reports the
/// fraction of truth points inside the empirical (q05, q95) band of the
/// pushed ensemble at the matching index.
inline double band_coverage(const ParticleEnsemble& ensemble, const Pushforward& pushforward,
                            const Eigen::VectorXd& truth_points) {
  const int n = ensemble.count();
  const int m = static_cast<int>(truth_points.size());
  if (n < 2) fail("band_coverage: need at least two particles, got %d", n);
  if (m < 1) fail("band_coverage: no truth points");
  Eigen::MatrixXd pushed(n, m);
  parallel_for(0, n, [&](int i) {
    const Eigen::VectorXd row = pushforward(ensemble.positions.row(i).transpose());
    if (row.size() != m) {
      fail("band_coverage: pushforward returned %ld values, expected %d", row.size(), m);
    }
    pushed.row(i) = row.transpose();
  });
  int covered = 0;
  for (int t = 0; t < m; ++t) {
    std::vector<double> col(pushed.col(t).data(), pushed.col(t).data() + n);
    std::sort(col.begin(), col.end());
    const double lo = detail::sorted_quantile(col, 0.05);
    const double hi = detail::sorted_quantile(col, 0.95);
    if (truth_points(t) >= lo && truth_points(t) <= hi) ++covered;
  }
  return static_cast<double>(covered) / m;
}

/// Symmetric relative discrepancy between two summaries, used by the
/// strategy comparisons: first moment in l2, second moment via the trace.
struct MomentDiscrepancy {
  double mean_rel = 0.0;
  double trace_rel = 0.0;
};

inline MomentDiscrepancy moment_discrepancy(const EnsembleSummary& a, const EnsembleSummary& b) {
  if (a.mean.size() != b.mean.size()) fail("moment_discrepancy: dimension mismatch");
  MomentDiscrepancy d;
  d.mean_rel = (a.mean - b.mean).norm() /
               std::max({a.mean.norm(), b.mean.norm(), 1e-12});
  d.trace_rel = std::abs(a.cov_trace - b.cov_trace) /
                std::max({std::abs(a.cov_trace), std::abs(b.cov_trace), 1e-12});
  return d;
}

}  // namespace stein
