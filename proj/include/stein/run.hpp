#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stein/common.hpp"
#include "stein/diagnostics.hpp"
#include "stein/ensemble.hpp"
#include "stein/kernel.hpp"
#include "stein/model.hpp"
#include "stein/problems.hpp"
#include "stein/svgd.hpp"
#include "stein/svn.hpp"

namespace stein {

enum class ProblemKind { double_banana, nonlinear_regression, conditioned_diffusion,
                         linear_gaussian };
enum class AlgorithmKind { svgd, svn };
enum class KernelKind { isotropic, scaled_hessian };
enum class BudgetKind { iterations, wallclock_seconds };

inline const char* to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::double_banana: return "double-banana";
    case ProblemKind::nonlinear_regression: return "nonlinear-regression";
    case ProblemKind::conditioned_diffusion: return "conditioned-diffusion";
    case ProblemKind::linear_gaussian: return "linear-gaussian";
  }
  return "unknown";
}

inline const char* to_string(AlgorithmKind a) {
  return a == AlgorithmKind::svgd ? "svgd" : "svn";
}

inline const char* to_string(KernelKind k) {
  return k == KernelKind::isotropic ? "isotropic" : "scaled-hessian";
}

inline const char* to_string(LinearGaussianVariant v) {
  return v == LinearGaussianVariant::laplace_prior ? "laplace-prior" : "identity-prior";
}

inline const char* to_string(Curvature c) {
  return c == Curvature::gauss_newton ? "gauss-newton" : "exact";
}

/// One experiment: problem x algorithm x kernel under a single budget.
struct RunConfig {
  ProblemKind problem = ProblemKind::double_banana;
  LinearGaussianVariant lg_variant = LinearGaussianVariant::laplace_prior;
  int lg_dim = 100;  // linear-gaussian only

  AlgorithmKind algorithm = AlgorithmKind::svn;
  SvnStrategy strategy = SvnStrategy::block_diagonal;
  KernelKind kernel = KernelKind::scaled_hessian;
  double kernel_scale = 0.0;  // scaled-hessian g; 0 means g(d) = d
  Curvature curvature = Curvature::gauss_newton;

  int n = 100;
  BudgetKind budget = BudgetKind::iterations;
  int iterations = 10;
  double wallclock_seconds = 0.0;
  double step_size = -1.0;  // negative means per-algorithm default
  double step_decay = 1.0;  // geometric decay of the svgd step

  std::uint64_t seed = 0;
  std::vector<int> checkpoints;  // empty means every iteration
  std::string out_dir;
  std::string label;  // variant name in comparisons

  NewtonOptions newton;

  double effective_step(int iteration_index) const {
    double base = step_size;
    if (base < 0.0) base = algorithm == AlgorithmKind::svgd ? 0.05 : 1.0;
    if (algorithm == AlgorithmKind::svgd && step_decay != 1.0) {
      return base * std::pow(step_decay, iteration_index);
    }
    return base;
  }
};

inline void validate_config(const RunConfig& cfg) {
  if (cfg.n < 1) fail("config: n must be at least 1, got %d", cfg.n);
  if (cfg.problem == ProblemKind::linear_gaussian && cfg.lg_dim < 2) {
    fail("config: problem.dim must be at least 2, got %d", cfg.lg_dim);
  }
  if (cfg.budget == BudgetKind::iterations) {
    if (cfg.iterations < 0) fail("config: budget.iterations must be non-negative");
    for (int c : cfg.checkpoints) {
      if (c < 0 || c > cfg.iterations) {
        fail("config: checkpoint %d outside [0, %d]", c, cfg.iterations);
      }
    }
  } else if (!(cfg.wallclock_seconds > 0.0)) {
    fail("config: budget.wallclock_seconds must be positive");
  }
  if (cfg.step_size >= 0.0 && !std::isfinite(cfg.step_size)) {
    fail("config: step_size must be finite");
  }
  if (!(cfg.step_decay > 0.0 && cfg.step_decay <= 1.0)) {
    fail("config: step_decay must lie in (0, 1], got %g", cfg.step_decay);
  }
  if (cfg.kernel_scale < 0.0) fail("config: kernel.g must be positive when given");
  if (cfg.kernel == KernelKind::isotropic && cfg.n < 2) {
    fail("config: the isotropic kernel needs at least 2 particles for its bandwidth");
  }
}

/// A constructed problem plus everything the report needs to reproduce it.
struct ProblemInstance {
  std::unique_ptr<BayesModel> model;
  bool has_analytic = false;
  AnalyticPosterior analytic;
  std::vector<std::pair<std::string, double>> constants;
  Eigen::VectorXd weights;  // linear-gaussian observation vector
};

inline ProblemInstance make_problem(const RunConfig& cfg, Rng& rng) {
  ProblemInstance out;
  switch (cfg.problem) {
    case ProblemKind::double_banana:
      out.model = std::make_unique<DoubleBanana>(rng);
      break;
    case ProblemKind::nonlinear_regression: {
      auto model = std::make_unique<NonlinearRegression>(rng);
      out.constants = {{"c1", model->c1()}, {"c2", model->c2()}};
      out.model = std::move(model);
      break;
    }
    case ProblemKind::conditioned_diffusion: {
      auto model = std::make_unique<ConditionedDiffusion>(rng);
      out.constants = {{"beta", model->beta()}, {"dt", model->dt()}};
      out.model = std::move(model);
      break;
    }
    case ProblemKind::linear_gaussian: {
      auto model = std::make_unique<LinearGaussian>(cfg.lg_variant, cfg.lg_dim, rng);
      out.analytic = model->analytic_posterior();
      out.has_analytic = true;
      out.weights = model->weights();
      out.model = std::move(model);
      break;
    }
  }
  return out;
}

struct CheckpointRecord {
  int iteration = 0;
  ParticleEnsemble ensemble;
  bool has_summary = false;  // false only when n < 2
  EnsembleSummary summary;
  double mean_log_density = 0.0;
  bool has_posterior_error = false;
  PosteriorError posterior_err;
};

struct RunResult {
  RunConfig config;
  Eigen::VectorXd data_y;
  Eigen::VectorXd x_true;
  std::vector<std::pair<std::string, double>> constants;
  Eigen::VectorXd weights;
  bool has_analytic = false;
  AnalyticPosterior analytic;

  std::vector<CheckpointRecord> checkpoints;
  ParticleEnsemble final_ensemble;
  int iterations_run = 0;
  std::vector<double> iteration_seconds;
  std::vector<SolveReport> solver_reports;  // one per svn iteration
  bool incomplete = false;
  std::string error_message;
};

namespace detail {

inline double mean_log_density(const TargetModel& model, const ParticleEnsemble& ens) {
  const int n = ens.count();
  Eigen::VectorXd vals(n);
  parallel_for(0, n, [&](int i) {
    vals(i) = model.log_density(ens.positions.row(i).transpose());
  });
  return vals.mean();
}

inline MetricState metric_for(const RunConfig& cfg, const ParticleEnsemble& ens,
                              const TargetModel& model) {
  if (cfg.kernel == KernelKind::isotropic) return isotropic_metric(ens);
  if (cfg.kernel_scale > 0.0) {
    const double g = cfg.kernel_scale;
    return compute_metric(ens, model, [g](int) { return g; }, cfg.curvature);
  }
  return compute_metric(ens, model, dimension_scaling, cfg.curvature);
}

}  // namespace detail

/// Executes one configured experiment. Configuration problems throw;
/// solver failures mid-run are captured instead, leaving the checkpoints
/// recorded so far and the incomplete flag set.
inline RunResult run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);
  ProblemInstance problem = make_problem(cfg, rng);
  const BayesModel& model = *problem.model;

  RunResult result;
  result.config = cfg;
  result.data_y = model.data();
  result.x_true = model.true_parameter();
  result.constants = std::move(problem.constants);
  result.weights = std::move(problem.weights);
  result.has_analytic = problem.has_analytic;
  result.analytic = std::move(problem.analytic);

  ParticleEnsemble ens = init_ensemble(model.prior(), cfg.n, rng);

  const bool checkpoint_all = cfg.checkpoints.empty();
  std::vector<int> wanted = cfg.checkpoints;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  auto should_checkpoint = [&](int iter) {
    return checkpoint_all || std::binary_search(wanted.begin(), wanted.end(), iter);
  };
  auto record = [&](const ParticleEnsemble& snapshot) {
    CheckpointRecord rec;
    rec.iteration = snapshot.iteration;
    rec.ensemble = snapshot;
    rec.mean_log_density = detail::mean_log_density(model, snapshot);
    if (snapshot.count() >= 2) {
      rec.has_summary = true;
      rec.summary = summarize(snapshot);
      if (result.has_analytic) {
        rec.has_posterior_error = true;
        rec.posterior_err = posterior_error(rec.summary, result.analytic);
      }
    }
    result.checkpoints.push_back(std::move(rec));
  };

  if (should_checkpoint(0)) record(ens);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto budget_open = [&](int next_iter) {
    if (cfg.budget == BudgetKind::iterations) return next_iter <= cfg.iterations;
    return elapsed() < cfg.wallclock_seconds;
  };

  try {
    for (int iter = 1; budget_open(iter); ++iter) {
      const auto iter_start = std::chrono::steady_clock::now();
      const MetricState metric = detail::metric_for(cfg, ens, model);
      const double eps = cfg.effective_step(iter - 1);
      if (cfg.algorithm == AlgorithmKind::svgd) {
        ens = svgd_step(ens, model, metric, eps);
      } else {
        SolveReport report;
        ens = svn_step(ens, model, metric, cfg.strategy, eps, cfg.newton, &report);
        result.solver_reports.push_back(report);
      }
      result.iteration_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start)
              .count());
      result.iterations_run = iter;
      if (should_checkpoint(iter)) record(ens);
    }
  } catch (const error& e) {
    result.incomplete = true;
    result.error_message = e.what();
  }
  result.final_ensemble = ens;
  return result;
}

/// Shared-problem comparison across algorithm variants, reporting the
/// pairwise moment discrepancies of the final ensembles.
struct CompareResult {
  std::vector<RunResult> runs;
  // pair (i, j), i < j, with the discrepancy of their final summaries
  struct Pair {
    int first = 0;
    int second = 0;
    MomentDiscrepancy discrepancy;
  };
  std::vector<Pair> pairs;
};

inline CompareResult compare_experiments(const std::vector<RunConfig>& variants) {
  if (variants.size() < 2) {
    fail("compare: need at least 2 variants, got %zu", variants.size());
  }
  const RunConfig& base = variants.front();
  for (size_t i = 1; i < variants.size(); ++i) {
    const RunConfig& v = variants[i];
    if (v.problem != base.problem || v.seed != base.seed ||
        (v.problem == ProblemKind::linear_gaussian &&
         (v.lg_variant != base.lg_variant || v.lg_dim != base.lg_dim))) {
      fail("compare: variant %zu does not share the base problem and seed", i);
    }
  }
  CompareResult out;
  for (const RunConfig& v : variants) out.runs.push_back(run_experiment(v));
  for (size_t i = 0; i < out.runs.size(); ++i) {
    for (size_t j = i + 1; j < out.runs.size(); ++j) {
      if (out.runs[i].final_ensemble.count() < 2 || out.runs[j].final_ensemble.count() < 2) {
        continue;
      }
      CompareResult::Pair p;
      p.first = static_cast<int>(i);
      p.second = static_cast<int>(j);
      p.discrepancy = moment_discrepancy(summarize(out.runs[i].final_ensemble),
                                         summarize(out.runs[j].final_ensemble));
      out.pairs.push_back(p);
    }
  }
  return out;
}

/// Discretization study: one sampler against the analytic posterior over a
/// list of linear-gaussian dimensions.
struct ValidationRow {
  int dim = 0;
  double mean_avg_theory = 0.0;
  double mean_avg_estimated = 0.0;
  double trace_theory = 0.0;
  double trace_estimated = 0.0;
  PosteriorError err;
};

struct ValidateResult {
  std::vector<RunResult> runs;
  std::vector<ValidationRow> rows;
};

inline ValidateResult validate_experiment(const RunConfig& base,
                                          std::vector<int> dims = {40, 60, 80, 100}) {
  if (base.problem != ProblemKind::linear_gaussian) {
    fail("validate: problem must be linear-gaussian, got %s", to_string(base.problem));
  }
  if (dims.empty()) fail("validate: empty dimension list");
  ValidateResult out;
  for (int d : dims) {
    RunConfig cfg = base;
    cfg.lg_dim = d;
    RunResult run = run_experiment(cfg);
    ValidationRow row;
    row.dim = d;
    row.mean_avg_theory = run.analytic.mean.mean();
    row.trace_theory = run.analytic.covariance.trace();
    if (run.final_ensemble.count() >= 2) {
      const EnsembleSummary s = summarize(run.final_ensemble);
      row.mean_avg_estimated = s.mean_average;
      row.trace_estimated = s.cov_trace;
      row.err = posterior_error(s, run.analytic);
    }
    out.rows.push_back(row);
    out.runs.push_back(std::move(run));
  }
  return out;
}

}  // namespace stein
