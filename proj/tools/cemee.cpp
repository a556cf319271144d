// cemee command-line driver: simulate panels, fit estimators, run replication
// experiments, emit moderation curves, validate panel files. Batch use only;
// every subcommand is deterministic given its config and seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cemee/config_json.hpp"
#include "cemee/errors.hpp"
#include "cemee/version.hpp"

namespace fs = std::filesystem;
using namespace cemee;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // usage, schema, data problems
constexpr int kExitNumeric = 2;  // non-convergence, singular systems

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool no_small_sample = false;
  bool verbose = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

fs::path ensure_out_dir(const CommonArgs& args) {
  if (args.out_dir.empty()) throw ConfigError("--out <dir> is required");
  fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + args.out_dir + "'");
  return dir;
}

std::uint64_t resolve_seed(const CommonArgs& args, std::uint64_t config_seed) {
  if (args.seed) return *args.seed;
  if (const char* env = std::getenv("CEMEE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("CEMEE_SEED is not a valid unsigned integer");
    }
  }
  return config_seed;
}

int cmd_simulate(const CommonArgs& args) {
  ScenarioConfig config = scenario_config_from_json(read_file(args.config_path));
  config.seed = resolve_seed(args, config.seed);
  const fs::path out = ensure_out_dir(args);

  const ClusterPanel panel = generate_scenario(config);
  write_panel(panel, (out / "panel.csv").string());

  std::vector<std::pair<std::string, double>> truths;
  truths.emplace_back("truth", true_marginal_effect(config));
  if (is_lag_scenario(config.scenario))
    truths.emplace_back("truth_st",
                        true_marginal_effect(config, ReferencePolicy::always_treat()));
  write_file(out / "manifest.json", manifest_json(config, truths));

  if (args.verbose)
    std::cerr << "wrote " << (out / "panel.csv") << " (" << panel.cluster_count()
              << " clusters, T=" << panel.horizon() << ")\n";
  return kExitOk;
}

int cmd_fit(const CommonArgs& args) {
  FitConfig config = fit_config_from_json(read_file(args.config_path));
  if (args.no_small_sample) config.small_sample = SmallSampleMode::never;
  const fs::path out = ensure_out_dir(args);

  const ClusterPanel panel = load_panel(config.panel_path, config.schema);
  config.options.retain_unit_blocks =
      config.small_sample == SmallSampleMode::always;
  const FitResult result = fit(panel, config.moderator, config.control, config.options);
  if (!result.converged) {
    std::cerr << "fit did not converge after " << result.iterations
              << " iterations (residual " << result.residual_norm << ")\n";
    return kExitNumeric;
  }
  const CovarianceResult cov = covariance_for(
      result, config.small_sample != SmallSampleMode::never,
      config.small_sample == SmallSampleMode::always ? result.n_units + 1 : 50);
  const InferenceSummary summary = infer(result, cov, {}, config.significance);

  write_file(out / "coefficients.csv", inference_csv(summary));
  write_file(out / "fit.json", fit_diagnostics_json(result, cov, summary));
  if (args.verbose)
    std::cerr << "fit converged in " << result.iterations << " iterations\n";
  return kExitOk;
}

int cmd_replicate(const CommonArgs& args) {
  std::string sweep_axis;
  ExperimentPlan plan =
      experiment_plan_from_json(read_file(args.config_path), &sweep_axis);
  plan.master_seed = resolve_seed(args, plan.master_seed);
  if (args.no_small_sample) plan.small_sample = SmallSampleMode::never;
  const fs::path out = ensure_out_dir(args);

  const ReplicationReport report = run_experiment(plan, args.jobs);
  write_file(out / "report.json", report_json(report));
  write_file(out / "table.csv", report_table_csv(report));
  if (!sweep_axis.empty())
    write_file(out / "sweep.csv", sweep_csv(coverage_sweep(report, sweep_axis)));
  return kExitOk;
}

int cmd_moderation_curve(const CommonArgs& args) {
  ModerationConfig config = moderation_config_from_json(read_file(args.config_path));
  if (args.no_small_sample) config.fit.small_sample = SmallSampleMode::never;
  const fs::path out = ensure_out_dir(args);

  const ClusterPanel panel = load_panel(config.fit.panel_path, config.fit.schema);
  config.fit.options.retain_unit_blocks =
      config.fit.small_sample == SmallSampleMode::always;
  const FitResult result =
      fit(panel, config.fit.moderator, config.fit.control, config.fit.options);
  if (!result.converged) {
    std::cerr << "fit did not converge\n";
    return kExitNumeric;
  }
  const CovarianceResult cov = covariance_for(
      result, config.fit.small_sample != SmallSampleMode::never,
      config.fit.small_sample == SmallSampleMode::always ? result.n_units + 1 : 50);
  const auto curve =
      moderation_curve(result, cov, config.grid, config.fit.significance);
  write_file(out / "curve.csv", curve_csv(curve));
  return kExitOk;
}

int cmd_validate(const CommonArgs& args) {
  const ValidateConfig config = validate_config_from_json(read_file(args.config_path));
  const ClusterPanel panel = load_panel_lenient(config.panel_path, config.schema);
  const ValidationReport report = validate_panel(panel);
  std::cout << report.to_string();
  if (!args.out_dir.empty())
    write_file(ensure_out_dir(args) / "validation.json", validation_json(report));
  return report.ok() ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-based excursion-effect estimation for micro-randomized trials"};
  app.set_version_flag("--version", std::string("cemee ") + version_string);
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", args.config_path, "JSON config file")->required();
    auto* out = sub->add_option("--out", args.out_dir, "output directory");
    if (needs_out) out->required();
    sub->add_option("--seed", args.seed, "seed override (beats CEMEE_SEED and config)");
    sub->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");
    sub->add_flag("--no-small-sample-correction", args.no_small_sample,
                  "disable the small-sample covariance correction");
    sub->add_flag("-v,--verbose", args.verbose, "chatty progress on stderr");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a scenario panel CSV");
  add_common(simulate, true);
  simulate->callback([&] { handler = &cmd_simulate; });

  auto* fit_cmd = app.add_subcommand("fit", "fit an estimator to a panel CSV");
  add_common(fit_cmd, true);
  fit_cmd->callback([&] { handler = &cmd_fit; });

  auto* replicate = app.add_subcommand("replicate", "run a Monte Carlo experiment plan");
  add_common(replicate, true);
  replicate->callback([&] { handler = &cmd_replicate; });

  auto* curve = app.add_subcommand("moderation-curve",
                                   "emit a moderated-effect curve with its band");
  add_common(curve, true);
  curve->callback([&] { handler = &cmd_moderation_curve; });

  auto* validate = app.add_subcommand("validate", "check a panel CSV against the schema");
  add_common(validate, false);
  validate->callback([&] { handler = &cmd_validate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    return handler(args);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
