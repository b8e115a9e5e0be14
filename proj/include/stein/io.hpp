#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stein/common.hpp"
#include "stein/diagnostics.hpp"
#include "stein/run.hpp"

namespace stein {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// particle CSV

/// Schema: header `iteration,particle,coord_0..coord_{d-1}`, one row per
/// particle, 17 significant digits, LF line endings.
inline void write_particles_csv(const std::string& path, const ParticleEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open %s for writing", path.c_str());
  out << "iteration,particle";
  for (int j = 0; j < ensemble.dim(); ++j) out << ",coord_" << j;
  out << "\n";
  char buf[40];
  for (int i = 0; i < ensemble.count(); ++i) {
    out << ensemble.iteration << ',' << i;
    for (int j = 0; j < ensemble.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ensemble.positions(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) fail("write to %s failed", path.c_str());
}

// ---------------------------------------------------------------------------
// config parsing (schema v1)

namespace detail {

inline const json& need(const json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end()) fail("config: field '%s%s' is required", ctx, key);
  return *it;
}

inline std::string need_string(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_string()) fail("config: field '%s%s' must be a string", ctx, key);
  return v.get<std::string>();
}

inline ProblemKind parse_problem_name(const std::string& name) {
  if (name == "double-banana") return ProblemKind::double_banana;
  if (name == "nonlinear-regression") return ProblemKind::nonlinear_regression;
  if (name == "conditioned-diffusion") return ProblemKind::conditioned_diffusion;
  if (name == "linear-gaussian") return ProblemKind::linear_gaussian;
  fail("config: field 'problem.name' has unknown value '%s' (expected double-banana, "
       "nonlinear-regression, conditioned-diffusion, or linear-gaussian)",
       name.c_str());
}

inline void parse_problem(const json& j, RunConfig& cfg) {
  const json& p = need(j, "problem", "");
  if (p.is_string()) {
    cfg.problem = parse_problem_name(p.get<std::string>());
    if (cfg.problem == ProblemKind::linear_gaussian) {
      fail("config: linear-gaussian requires the object form of 'problem' with "
           "'variant' and 'dim'");
    }
  } else if (p.is_object()) {
    cfg.problem = parse_problem_name(need_string(p, "name", "problem."));
    if (cfg.problem == ProblemKind::linear_gaussian) {
      const std::string variant = need_string(p, "variant", "problem.");
      if (variant == "laplace-prior") {
        cfg.lg_variant = LinearGaussianVariant::laplace_prior;
      } else if (variant == "identity-prior") {
        cfg.lg_variant = LinearGaussianVariant::identity_prior;
      } else {
        fail("config: field 'problem.variant' has unknown value '%s' (expected "
             "laplace-prior or identity-prior)",
             variant.c_str());
      }
      const json& dim = need(p, "dim", "problem.");
      if (!dim.is_number_integer()) fail("config: field 'problem.dim' must be an integer");
      cfg.lg_dim = dim.get<int>();
    }
  } else {
    fail("config: field 'problem' must be a string or an object");
  }
}

inline void parse_algorithm(const json& j, RunConfig& cfg) {
  const json& a = need(j, "algorithm", "");
  std::string name;
  if (a.is_string()) {
    name = a.get<std::string>();
  } else if (a.is_object()) {
    name = need_string(a, "name", "algorithm.");
  } else {
    fail("config: field 'algorithm' must be a string or an object");
  }
  if (name == "svgd") {
    cfg.algorithm = AlgorithmKind::svgd;
  } else if (name == "svn") {
    cfg.algorithm = AlgorithmKind::svn;
    std::string strategy = "bd";
    if (a.is_object() && a.contains("strategy")) {
      strategy = need_string(a, "strategy", "algorithm.");
    }
    if (strategy == "full") {
      cfg.strategy = SvnStrategy::full;
    } else if (strategy == "bd") {
      cfg.strategy = SvnStrategy::block_diagonal;
    } else if (strategy == "ncg") {
      cfg.strategy = SvnStrategy::ncg;
    } else {
      fail("config: field 'algorithm.strategy' has unknown value '%s' (expected full, bd, "
           "or ncg)",
           strategy.c_str());
    }
  } else {
    fail("config: field 'algorithm.name' has unknown value '%s' (expected svgd or svn)",
         name.c_str());
  }
}

inline void parse_kernel(const json& j, RunConfig& cfg) {
  const json& k = need(j, "kernel", "");
  std::string name;
  if (k.is_string()) {
    name = k.get<std::string>();
  } else if (k.is_object()) {
    name = need_string(k, "name", "kernel.");
  } else {
    fail("config: field 'kernel' must be a string or an object");
  }
  if (name == "isotropic") {
    cfg.kernel = KernelKind::isotropic;
  } else if (name == "scaled-hessian") {
    cfg.kernel = KernelKind::scaled_hessian;
    if (k.is_object() && k.contains("g")) {
      if (!k["g"].is_number()) fail("config: field 'kernel.g' must be a number");
      cfg.kernel_scale = k["g"].get<double>();
      if (!(cfg.kernel_scale > 0.0)) fail("config: field 'kernel.g' must be positive");
    }
  } else {
    fail("config: field 'kernel.name' has unknown value '%s' (expected isotropic or "
         "scaled-hessian)",
         name.c_str());
  }
}

inline void parse_budget(const json& j, RunConfig& cfg) {
  const json& b = need(j, "budget", "");
  if (!b.is_object()) fail("config: field 'budget' must be an object");
  const bool has_iters = b.contains("iterations");
  const bool has_wall = b.contains("wallclock_seconds");
  if (has_iters == has_wall) {
    fail("config: field 'budget' must contain exactly one of 'iterations' or "
         "'wallclock_seconds'");
  }
  if (has_iters) {
    if (!b["iterations"].is_number_integer() || b["iterations"].get<int>() < 0) {
      fail("config: field 'budget.iterations' must be a non-negative integer");
    }
    cfg.budget = BudgetKind::iterations;
    cfg.iterations = b["iterations"].get<int>();
  } else {
    if (!b["wallclock_seconds"].is_number() || !(b["wallclock_seconds"].get<double>() > 0.0)) {
      fail("config: field 'budget.wallclock_seconds' must be a positive number");
    }
    cfg.budget = BudgetKind::wallclock_seconds;
    cfg.wallclock_seconds = b["wallclock_seconds"].get<double>();
  }
}

inline void parse_common_options(const json& j, RunConfig& cfg) {
  if (j.contains("curvature")) {
    const std::string c = need_string(j, "curvature", "");
    if (c == "gauss-newton") {
      cfg.curvature = Curvature::gauss_newton;
    } else if (c == "exact") {
      cfg.curvature = Curvature::exact;
    } else {
      fail("config: field 'curvature' has unknown value '%s' (expected gauss-newton or "
           "exact)",
           c.c_str());
    }
  }
  if (j.contains("step_size")) {
    if (!j["step_size"].is_number() || j["step_size"].get<double>() < 0.0) {
      fail("config: field 'step_size' must be a non-negative number");
    }
    cfg.step_size = j["step_size"].get<double>();
  }
  if (j.contains("step_decay")) {
    if (!j["step_decay"].is_number()) fail("config: field 'step_decay' must be a number");
    cfg.step_decay = j["step_decay"].get<double>();
  }
  if (j.contains("cg_tol")) {
    if (!j["cg_tol"].is_number() || !(j["cg_tol"].get<double>() > 0.0)) {
      fail("config: field 'cg_tol' must be a positive number");
    }
    cfg.newton.cg_tol = j["cg_tol"].get<double>();
  }
  if (j.contains("max_cg_iters")) {
    if (!j["max_cg_iters"].is_number_integer() || j["max_cg_iters"].get<int>() < 1) {
      fail("config: field 'max_cg_iters' must be a positive integer");
    }
    cfg.newton.max_cg_iters = j["max_cg_iters"].get<int>();
  }
  if (j.contains("dense_limit")) {
    if (!j["dense_limit"].is_number_integer() || j["dense_limit"].get<int>() < 1) {
      fail("config: field 'dense_limit' must be a positive integer");
    }
    cfg.newton.dense_limit = j["dense_limit"].get<int>();
  }
}

}  // namespace detail

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config: cannot open %s", path.c_str());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail("config: %s is not valid JSON: %s", path.c_str(), e.what());
  }
}

inline RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) fail("config: document must be a JSON object");
  const json& schema = detail::need(j, "schema", "");
  if (!schema.is_number_integer() || schema.get<int>() != 1) {
    fail("config: field 'schema' must be 1");
  }
  RunConfig cfg;
  try {
    detail::parse_problem(j, cfg);
    detail::parse_algorithm(j, cfg);
    detail::parse_kernel(j, cfg);
    const json& n = detail::need(j, "n", "");
    if (!n.is_number_integer() || n.get<int>() < 1) {
      fail("config: field 'n' must be a positive integer");
    }
    cfg.n = n.get<int>();
    detail::parse_budget(j, cfg);
    const json& seed = detail::need(j, "seed", "");
    if (!seed.is_number_unsigned()) {
      fail("config: field 'seed' must be a non-negative integer");
    }
    cfg.seed = seed.get<std::uint64_t>();
    detail::parse_common_options(j, cfg);
    if (j.contains("checkpoints")) {
      if (!j["checkpoints"].is_array()) fail("config: field 'checkpoints' must be an array");
      for (const json& c : j["checkpoints"]) {
        if (!c.is_number_integer() || c.get<int>() < 0) {
          fail("config: field 'checkpoints' must hold non-negative integers");
        }
        cfg.checkpoints.push_back(c.get<int>());
      }
    }
    if (j.contains("out_dir")) cfg.out_dir = detail::need_string(j, "out_dir", "");
    if (j.contains("label")) cfg.label = detail::need_string(j, "label", "");
  } catch (const error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    fail("config: %s", e.what());
  }
  validate_config(cfg);
  return cfg;
}

/// Comparison config: run-config fields shared at top level (problem, n,
/// budget, seed, ...) plus a 'variants' array; each variant names its own
/// algorithm/kernel and may override the step and curvature fields.
inline std::vector<RunConfig> parse_compare_config(const json& j) {
  if (!j.is_object()) fail("config: document must be a JSON object");
  const json& variants = detail::need(j, "variants", "");
  if (!variants.is_array() || variants.size() < 2) {
    fail("config: field 'variants' must be an array of at least 2 entries");
  }
  std::vector<RunConfig> out;
  for (size_t i = 0; i < variants.size(); ++i) {
    const json& v = variants[i];
    if (!v.is_object()) fail("config: field 'variants[%zu]' must be an object", i);
    json merged = j;
    merged.erase("variants");
    for (auto it = v.begin(); it != v.end(); ++it) merged[it.key()] = it.value();
    RunConfig cfg;
    try {
      cfg = parse_run_config(merged);
    } catch (const error& e) {
      fail("config: variants[%zu]: %s", i, e.what());
    }
    if (cfg.label.empty()) {
      cfg.label = detail::strf("%s-%s", to_string(cfg.algorithm),
                               cfg.algorithm == AlgorithmKind::svn
                                   ? to_string(cfg.strategy)
                                   : to_string(cfg.kernel));
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

struct ValidateSpec {
  RunConfig base;
  std::vector<int> dims = {40, 60, 80, 100};
};

inline ValidateSpec parse_validate_config(const json& j) {
  ValidateSpec spec;
  spec.base = parse_run_config(j);
  if (spec.base.problem != ProblemKind::linear_gaussian) {
    fail("config: field 'problem' must be linear-gaussian for validate");
  }
  if (j.contains("dims")) {
    if (!j["dims"].is_array() || j["dims"].empty()) {
      fail("config: field 'dims' must be a non-empty array");
    }
    spec.dims.clear();
    for (const json& d : j["dims"]) {
      if (!d.is_number_integer() || d.get<int>() < 2) {
        fail("config: field 'dims' must hold integers of at least 2");
      }
      spec.dims.push_back(d.get<int>());
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// report serialization

namespace detail {

inline json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json config_to_json(const RunConfig& cfg) {
  json j;
  j["schema"] = 1;
  if (cfg.problem == ProblemKind::linear_gaussian) {
    j["problem"] = {{"name", to_string(cfg.problem)},
                    {"variant", to_string(cfg.lg_variant)},
                    {"dim", cfg.lg_dim}};
  } else {
    j["problem"] = {{"name", to_string(cfg.problem)}};
  }
  if (cfg.algorithm == AlgorithmKind::svn) {
    j["algorithm"] = {{"name", "svn"}, {"strategy", to_string(cfg.strategy)}};
  } else {
    j["algorithm"] = {{"name", "svgd"}};
  }
  if (cfg.kernel == KernelKind::scaled_hessian && cfg.kernel_scale > 0.0) {
    j["kernel"] = {{"name", to_string(cfg.kernel)}, {"g", cfg.kernel_scale}};
  } else {
    j["kernel"] = {{"name", to_string(cfg.kernel)}};
  }
  j["curvature"] = to_string(cfg.curvature);
  j["n"] = cfg.n;
  if (cfg.budget == BudgetKind::iterations) {
    j["budget"] = {{"iterations", cfg.iterations}};
  } else {
    j["budget"] = {{"wallclock_seconds", cfg.wallclock_seconds}};
  }
  j["step_size"] = cfg.effective_step(0);
  j["step_decay"] = cfg.step_decay;
  j["seed"] = cfg.seed;
  if (!cfg.checkpoints.empty()) j["checkpoints"] = cfg.checkpoints;
  if (!cfg.out_dir.empty()) j["out_dir"] = cfg.out_dir;
  if (!cfg.label.empty()) j["label"] = cfg.label;
  j["cg_tol"] = cfg.newton.cg_tol;
  if (cfg.newton.max_cg_iters > 0) j["max_cg_iters"] = cfg.newton.max_cg_iters;
  j["dense_limit"] = cfg.newton.dense_limit;
  return j;
}

inline json summary_to_json(const EnsembleSummary& s) {
  json j;
  j["mean_average"] = s.mean_average;
  j["cov_trace"] = s.cov_trace;
  j["mean"] = vec_to_json(s.mean);
  j["q05"] = vec_to_json(s.q05);
  j["q50"] = vec_to_json(s.q50);
  j["q95"] = vec_to_json(s.q95);
  return j;
}

inline json posterior_error_to_json(const PosteriorError& e) {
  return {{"mean_average_abs_err", e.mean_average_abs_err},
          {"trace_rel_err", e.trace_rel_err},
          {"mean_l2_rel_err", e.mean_l2_rel_err}};
}

}  // namespace detail

inline json report_to_json(const RunResult& r) {
  json j;
  j["schema"] = 1;
  j["kind"] = "run";
  j["config"] = detail::config_to_json(r.config);
  json realization;
  realization["y"] = detail::vec_to_json(r.data_y);
  realization["x_true"] = detail::vec_to_json(r.x_true);
  if (!r.constants.empty()) {
    json c;
    for (const auto& [name, value] : r.constants) c[name] = value;
    realization["constants"] = c;
  }
  if (r.weights.size() > 0) realization["weights"] = detail::vec_to_json(r.weights);
  j["realization"] = realization;
  if (r.has_analytic) {
    j["analytic"] = {{"mean_average", r.analytic.mean.mean()},
                     {"trace", r.analytic.covariance.trace()},
                     {"mean", detail::vec_to_json(r.analytic.mean)}};
  }
  j["iterations_run"] = r.iterations_run;
  j["incomplete"] = r.incomplete;
  if (r.incomplete) j["error"] = r.error_message;
  json checkpoints = json::array();
  for (const CheckpointRecord& c : r.checkpoints) {
    json cj;
    cj["iteration"] = c.iteration;
    cj["mean_log_density"] = c.mean_log_density;
    if (c.has_summary) cj["summary"] = detail::summary_to_json(c.summary);
    if (c.has_posterior_error) {
      cj["posterior_error"] = detail::posterior_error_to_json(c.posterior_err);
    }
    checkpoints.push_back(cj);
  }
  j["checkpoints"] = checkpoints;
  if (!r.solver_reports.empty()) {
    json solver = json::array();
    for (size_t i = 0; i < r.solver_reports.size(); ++i) {
      const SolveReport& s = r.solver_reports[i];
      solver.push_back({{"iteration", static_cast<int>(i) + 1},
                        {"iterations", s.iterations},
                        {"relative_residual", s.final_relative_residual},
                        {"termination", to_string(s.termination)},
                        {"jitter", s.jitter_applied}});
    }
    j["solver"] = solver;
  }
  double total = 0.0;
  for (double t : r.iteration_seconds) total += t;
  j["timing"] = {{"iteration_seconds", r.iteration_seconds}, {"total_seconds", total}};
  return j;
}

inline json comparison_to_json(const CompareResult& c) {
  json j;
  j["schema"] = 1;
  j["kind"] = "compare";
  json variants = json::array();
  for (const RunResult& r : c.runs) {
    json v;
    v["label"] = r.config.label;
    v["config"] = detail::config_to_json(r.config);
    v["iterations_run"] = r.iterations_run;
    v["incomplete"] = r.incomplete;
    if (r.final_ensemble.count() >= 2) {
      v["summary"] = detail::summary_to_json(summarize(r.final_ensemble));
    }
    variants.push_back(v);
  }
  j["variants"] = variants;
  json pairs = json::array();
  for (const CompareResult::Pair& p : c.pairs) {
    pairs.push_back({{"a", c.runs[p.first].config.label},
                     {"b", c.runs[p.second].config.label},
                     {"mean_rel", p.discrepancy.mean_rel},
                     {"trace_rel", p.discrepancy.trace_rel}});
  }
  j["pairs"] = pairs;
  return j;
}

inline json tables_to_json(const ValidateResult& v) {
  json j;
  j["schema"] = 1;
  j["kind"] = "validate";
  if (!v.runs.empty()) j["config"] = detail::config_to_json(v.runs.front().config);
  json rows = json::array();
  for (const ValidationRow& row : v.rows) {
    rows.push_back({{"dim", row.dim},
                    {"mean_average",
                     {{"theoretical", row.mean_avg_theory}, {"estimated", row.mean_avg_estimated}}},
                    {"trace",
                     {{"theoretical", row.trace_theory}, {"estimated", row.trace_estimated}}},
                    {"errors",
                     {{"mean_average_abs", row.err.mean_average_abs_err},
                      {"trace_rel", row.err.trace_rel_err},
                      {"mean_l2_rel", row.err.mean_l2_rel_err}}}});
  }
  j["rows"] = rows;
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open %s for writing", path.c_str());
  out << j.dump(2) << "\n";
  if (!out) fail("write to %s failed", path.c_str());
}

// ---------------------------------------------------------------------------
// scatter plot (2-d problems)

inline void write_scatter_svg(const std::string& path, const ParticleEnsemble& ensemble) {
  if (ensemble.dim() != 2) {
    fail("scatter plot requires a 2-d ensemble, got dimension %d", ensemble.dim());
  }
  double xmin = ensemble.positions.col(0).minCoeff();
  double xmax = ensemble.positions.col(0).maxCoeff();
  double ymin = ensemble.positions.col(1).minCoeff();
  double ymax = ensemble.positions.col(1).maxCoeff();
  auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    if (span <= 0.0) {
      lo -= 1.0;
      hi += 1.0;
    } else {
      lo -= 0.05 * span;
      hi += 0.05 * span;
    }
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  const int size = 600;
  const int margin = 40;
  auto sx = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (size - 2 * margin);
  };
  auto sy = [&](double y) {
    return size - margin - (y - ymin) / (ymax - ymin) * (size - 2 * margin);
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open %s for writing", path.c_str());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
  out << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"#888\"/>\n",
                margin, margin, size - 2 * margin, size - 2 * margin);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"14\" "
                "fill=\"#444\">iteration %d, n = %d</text>\n",
                margin, margin - 10, ensemble.iteration, ensemble.count());
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\" "
                "fill=\"#666\">x: [%.3g, %.3g]  y: [%.3g, %.3g]</text>\n",
                margin, size - margin + 25, xmin, xmax, ymin, ymax);
  out << buf;
  for (int i = 0; i < ensemble.count(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"#4682b4\" "
                  "fill-opacity=\"0.55\"/>\n",
                  sx(ensemble.positions(i, 0)), sy(ensemble.positions(i, 1)));
    out << buf;
  }
  out << "</svg>\n";
  if (!out) fail("write to %s failed", path.c_str());
}

inline void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail("cannot create directory %s: %s", path.c_str(), ec.message().c_str());
}

}  // namespace stein
