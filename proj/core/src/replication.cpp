#include "cemee/replication.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "cemee/errors.hpp"
#include "cemee/variance.hpp"

namespace cemee {

EstimatorVariant EstimatorVariant::parse_label(const std::string& name) {
  EstimatorVariant v;
  v.kind = estimator_from_string(name);
  v.label = name == "cemee-direct" ? "cemee" : name;
  return v;
}

std::string EstimatorVariant::default_label() const {
  std::string label = kind == EstimatorKind::cemee_direct
                          ? "cemee"
                          : estimator_to_string(kind);
  if (delta > 1) label += "-lag" + std::to_string(delta) + "-" + policy.to_string();
  return label;
}

void ExperimentPlan::validate() const {
  if (replicates < 2) throw ConfigError("replicates must be >= 2");
  if (cells.empty()) throw ConfigError("experiment grid must be non-empty");
  if (estimators.empty()) throw ConfigError("at least one estimator is required");
  if (!(significance > 0.0 && significance < 1.0))
    throw ConfigError("significance level must be in (0,1)");
  for (const auto& cell : cells) cell.validate();
}

SummaryStats summarize(std::span<const double> estimates, std::span<const double> ses,
                       std::span<const int> ci_hits, double truth) {
  const std::size_t n = estimates.size();
  if (n == 0) throw DataError("summarize: empty input");
  if (ses.size() != n || ci_hits.size() != n)
    throw DataError("summarize: input length mismatch");

  SummaryStats stats;
  stats.truth = truth;
  stats.n = static_cast<int>(n);
  double mean_est = 0.0, mean_se = 0.0, mse = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_est += estimates[i];
    mean_se += ses[i];
    const double d = estimates[i] - truth;
    mse += d * d;
    hits += ci_hits[i];
  }
  mean_est /= n;
  stats.bias = mean_est - truth;
  stats.mean_se = mean_se / n;
  stats.rmse = std::sqrt(mse / n);
  stats.cp = hits / n;
  stats.cp_mcse = std::sqrt(stats.cp * (1.0 - stats.cp) / n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = estimates[i] - mean_est;
    ss += d * d;
  }
  stats.emp_sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return stats;
}

namespace {

ReplicateOutcome run_one(const ClusterPanel& panel, const EstimatorVariant& variant,
                         const ExperimentPlan& plan) {
  ReplicateOutcome out;
  try {
    EstimatorOptions options;
    options.estimator = variant.kind;
    options.delta = variant.delta;
    options.policy = variant.policy;
    options.lag_outcome = variant.lag_outcome;
    options.numerator = plan.numerator;
    options.retain_unit_blocks = plan.small_sample == SmallSampleMode::always;

    const FitResult fit_result = fit(panel, plan.moderator, plan.control, options);
    if (!fit_result.converged) {
      out.error = "did not converge";
      return out;
    }
    const CovarianceResult cov = covariance_for(
        fit_result, plan.small_sample != SmallSampleMode::never,
        plan.small_sample == SmallSampleMode::always ? fit_result.n_units + 1 : 50);

    Eigen::VectorXd target = Eigen::VectorXd::Zero(fit_result.q);
    target[0] = 1.0;  // the marginal effect is the leading beta coefficient
    const InferenceSummary summary =
        infer(fit_result, cov, {target}, plan.significance);
    const auto& row = summary.contrasts.front();
    out.ok = true;
    out.estimate = row.estimate;
    out.se = row.se;
    out.lower = row.lower;
    out.upper = row.upper;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master, int cell, int rep) {
  std::uint64_t h = hash_combine(master, stream_tag::replicate);
  h = hash_combine(h, static_cast<std::uint64_t>(cell));
  return hash_combine(h, static_cast<std::uint64_t>(rep));
}

}  // namespace

ReplicationReport run_experiment(const ExperimentPlan& plan, int jobs) {
  plan.validate();
  const int n_cells = static_cast<int>(plan.cells.size());
  const int n_variants = static_cast<int>(plan.estimators.size());
  const int R = plan.replicates;

  ReplicationReport report;
  report.replicates = R;
  report.significance = plan.significance;
  report.master_seed = plan.master_seed;
  report.cells = plan.cells;
  report.results.assign(n_cells, std::vector<CellVariantResult>(n_variants));

  for (int c = 0; c < n_cells; ++c) {
    for (int v = 0; v < n_variants; ++v) {
      auto& slot = report.results[c][v];
      const auto& variant = plan.estimators[v];
      slot.estimator_label =
          variant.label.empty() ? variant.default_label() : variant.label;
      const std::uint64_t truth_seed =
          hash_combine(hash_combine(plan.master_seed, stream_tag::truth),
                       static_cast<std::uint64_t>(c * 1000 + v));
      slot.truth = true_marginal_effect(plan.cells[c], variant.policy,
                                        plan.truth_draws, truth_seed);
      slot.replicates.resize(R);
    }
  }

  const int total_tasks = n_cells * R;
  std::atomic<int> next_task{0};
  auto worker = [&]() {
    while (true) {
      const int task = next_task.fetch_add(1);
      if (task >= total_tasks) return;
      const int c = task / R;
      const int r = task % R;
      ScenarioConfig config = plan.cells[c];
      config.seed = replicate_seed(plan.master_seed, c, r);
      try {
        const ClusterPanel panel = generate_scenario(config);
        for (int v = 0; v < n_variants; ++v)
          report.results[c][v].replicates[r] =
              run_one(panel, plan.estimators[v], plan);
      } catch (const std::exception& e) {
        for (int v = 0; v < n_variants; ++v) {
          auto& out = report.results[c][v].replicates[r];
          out.ok = false;
          out.error = e.what();
        }
      }
    }
  };

  int n_threads = jobs > 0 ? jobs
                           : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (int c = 0; c < n_cells; ++c) {
    for (int v = 0; v < n_variants; ++v) {
      auto& slot = report.results[c][v];
      std::vector<double> estimates, ses;
      std::vector<int> hits;
      for (const auto& rep : slot.replicates) {
        if (!rep.ok) continue;
        estimates.push_back(rep.estimate);
        ses.push_back(rep.se);
        hits.push_back(rep.lower <= slot.truth && slot.truth <= rep.upper ? 1 : 0);
      }
      slot.n_failed = R - static_cast<int>(estimates.size());
      if (estimates.empty())
        throw NumericError("all replicates failed for cell " +
                           scenario_to_string(plan.cells[c].scenario) + " M=" +
                           std::to_string(plan.cells[c].clusters) + " G=" +
                           std::to_string(plan.cells[c].cluster_size) +
                           " estimator=" + slot.estimator_label);
      slot.summary = summarize(estimates, ses, hits, slot.truth);
    }
  }
  return report;
}

std::vector<SweepPoint> coverage_sweep(const ReplicationReport& report,
                                       const std::string& axis) {
  if (axis != "cluster_size" && axis != "sigma")
    throw ConfigError("sweep axis must be 'cluster_size' or 'sigma'");
  if (report.cells.size() < 2)
    throw ConfigError("coverage sweep needs at least two grid points");

  auto value_of = [&](const ScenarioConfig& cell) {
    return axis == "cluster_size" ? static_cast<double>(cell.cluster_size)
                                  : cell.random_effect.sigma;
  };
  // one-dimensional grid: every other knob constant across cells
  const auto& first = report.cells.front();
  for (const auto& cell : report.cells) {
    const bool same_other = axis == "cluster_size"
                                ? cell.random_effect.sigma == first.random_effect.sigma
                                : cell.cluster_size == first.cluster_size;
    if (cell.scenario != first.scenario || cell.clusters != first.clusters ||
        cell.horizon != first.horizon || !same_other)
      throw ConfigError("coverage sweep grid varies in more than one dimension");
  }

  std::vector<SweepPoint> curve;
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    for (const auto& slot : report.results[c]) {
      curve.push_back({value_of(report.cells[c]), slot.estimator_label,
                       slot.summary.cp, slot.summary.cp_mcse});
    }
  }
  return curve;
}

}  // namespace cemee
