// Experiment runner: executes configured sampler runs, comparisons, and
// discretization studies, persisting particle CSVs, JSON reports, and
// optional scatter plots.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stein/stein.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Path to the JSON config file")
      ->required();
  cmd->add_option("--out-dir", args.out_dir, "Output directory (overrides config out_dir)");
  cmd->add_option("--seed", args.seed, "Seed override");
  cmd->add_flag("--plots", args.plots, "Write scatter_<iter>.svg for 2-d problems");
}

std::string resolve_out_dir(const CommonArgs& args, const stein::RunConfig& cfg) {
  std::string dir = !args.out_dir.empty() ? args.out_dir : cfg.out_dir;
  if (dir.empty()) dir = ".";
  stein::ensure_directory(dir);
  return dir;
}

void apply_overrides(stein::RunConfig& cfg, const CommonArgs& args) {
  if (args.seed) cfg.seed = *args.seed;
}

void write_run_artifacts(const std::string& dir, const stein::RunResult& result, bool plots) {
  for (const stein::CheckpointRecord& c : result.checkpoints) {
    const std::string base = dir + "/particles_" + std::to_string(c.iteration);
    stein::write_particles_csv(base + ".csv", c.ensemble);
    if (plots && c.ensemble.dim() == 2) {
      stein::write_scatter_svg(dir + "/scatter_" + std::to_string(c.iteration) + ".svg",
                               c.ensemble);
    }
  }
  stein::write_json_file(dir + "/report.json", stein::report_to_json(result));
}

int run_command(const CommonArgs& args) {
  stein::RunConfig cfg = stein::parse_run_config(stein::load_json_file(args.config_path));
  apply_overrides(cfg, args);
  const std::string dir = resolve_out_dir(args, cfg);
  const stein::RunResult result = stein::run_experiment(cfg);
  write_run_artifacts(dir, result, args.plots);
  if (result.incomplete) {
    std::fprintf(stderr, "run incomplete after %d iterations: %s\n", result.iterations_run,
                 result.error_message.c_str());
    return 1;
  }
  std::printf("run complete: %d iterations, %zu checkpoints -> %s\n", result.iterations_run,
              result.checkpoints.size(), dir.c_str());
  return 0;
}

int compare_command(const CommonArgs& args) {
  std::vector<stein::RunConfig> variants =
      stein::parse_compare_config(stein::load_json_file(args.config_path));
  for (stein::RunConfig& cfg : variants) apply_overrides(cfg, args);
  const std::string dir = resolve_out_dir(args, variants.front());
  const stein::CompareResult result = stein::compare_experiments(variants);
  stein::write_json_file(dir + "/comparison.json", stein::comparison_to_json(result));
  bool failed = false;
  for (const stein::RunResult& r : result.runs) {
    if (r.incomplete) {
      std::fprintf(stderr, "variant %s incomplete: %s\n", r.config.label.c_str(),
                   r.error_message.c_str());
      failed = true;
    }
  }
  if (!failed) {
    std::printf("compare complete: %zu variants, %zu pairs -> %s\n", result.runs.size(),
                result.pairs.size(), dir.c_str());
  }
  return failed ? 1 : 0;
}

int validate_command(const CommonArgs& args) {
  stein::ValidateSpec spec =
      stein::parse_validate_config(stein::load_json_file(args.config_path));
  apply_overrides(spec.base, args);
  const std::string dir = resolve_out_dir(args, spec.base);
  const stein::ValidateResult result = stein::validate_experiment(spec.base, spec.dims);
  stein::write_json_file(dir + "/tables.json", stein::tables_to_json(result));
  bool failed = false;
  for (const stein::RunResult& r : result.runs) {
    if (r.incomplete) {
      std::fprintf(stderr, "dimension %d incomplete: %s\n", r.config.lg_dim,
                   r.error_message.c_str());
      failed = true;
    }
  }
  for (const stein::ValidationRow& row : result.rows) {
    std::printf("d=%d  mean_avg %.6g vs %.6g  trace %.6g vs %.6g\n", row.dim,
                row.mean_avg_theory, row.mean_avg_estimated, row.trace_theory,
                row.trace_estimated);
  }
  if (!failed) std::printf("validate complete -> %s\n", dir.c_str());
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein variational gradient and Newton experiment runner"};
  app.require_subcommand(1);

  CommonArgs run_args, compare_args, validate_args;
  CLI::App* run = app.add_subcommand("run", "Execute one configured experiment");
  add_common(run, run_args);
  CLI::App* compare =
      app.add_subcommand("compare", "Run several variants on a shared problem");
  add_common(compare, compare_args);
  CLI::App* validate =
      app.add_subcommand("validate", "Linear-Gaussian discretization study");
  add_common(validate, validate_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(run_args);
    if (compare->parsed()) return compare_command(compare_args);
    if (validate->parsed()) return validate_command(validate_args);
  } catch (const stein::error& e) {
    const std::string what = e.what();
    std::fprintf(stderr, "error: %s\n", what.c_str());
    // configuration problems (bad file, bad field) exit 2; runtime errors 1
    return what.rfind("config:", 0) == 0 ? 2 : 1;
  }
  return 0;
}
