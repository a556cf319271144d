#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cemee/estimator.hpp"
#include "cemee/simulator.hpp"

namespace cemee {

/// One estimator configuration run against every replicate panel. Variants
/// share the panel within a replicate, so comparisons are paired.
struct EstimatorVariant {
  EstimatorKind kind = EstimatorKind::cemee_direct;
  int delta = 1;
  ReferencePolicy policy;
  LagSpec lag_outcome;
  std::string label;

  static EstimatorVariant parse_label(const std::string& name);
  std::string default_label() const;
};

enum class SmallSampleMode { automatic, always, never };

struct ExperimentPlan {
  std::vector<ScenarioConfig> cells;
  std::vector<EstimatorVariant> estimators;
  FeatureSpec moderator = FeatureSpec::intercept_only();
  FeatureSpec control = FeatureSpec::intercept_only();
  NumeratorSpec numerator;
  int replicates = 500;
  double significance = 0.05;
  std::uint64_t master_seed = 1;
  long truth_draws = 1000000;
  SmallSampleMode small_sample = SmallSampleMode::automatic;

  void validate() const;  // replicates >= 2, non-empty grid
};

struct SummaryStats {
  double truth = 0.0;
  double bias = 0.0;
  double mean_se = 0.0;  // mean reported SE
  double emp_sd = 0.0;   // empirical SD of the estimates
  double rmse = 0.0;
  double cp = 0.0;
  double cp_mcse = 0.0;  // sqrt(cp (1-cp) / n)
  int n = 0;
};

/// Bias / SE / RMSE / CP over one set of replicate results.
SummaryStats summarize(std::span<const double> estimates, std::span<const double> ses,
                       std::span<const int> ci_hits, double truth);

struct ReplicateOutcome {
  bool ok = false;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string error;
};

struct CellVariantResult {
  std::string estimator_label;
  double truth = 0.0;
  SummaryStats summary;
  std::vector<ReplicateOutcome> replicates;
  int n_failed = 0;
};

struct ReplicationReport {
  int replicates = 0;
  double significance = 0.05;
  std::uint64_t master_seed = 0;
  std::vector<ScenarioConfig> cells;
  std::vector<std::vector<CellVariantResult>> results;  // [cell][variant]
};

/// Runs the full grid; jobs = 0 uses all hardware threads. The report is
/// bit-identical for a given plan regardless of the worker count.
ReplicationReport run_experiment(const ExperimentPlan& plan, int jobs = 0);

struct SweepPoint {
  double x = 0.0;
  std::string estimator;
  double cp = 0.0;
  double cp_mcse = 0.0;
};

/// Coverage curve over a one-dimensional grid: axis is "cluster_size" or
/// "sigma" (the random-effect spread).
std::vector<SweepPoint> coverage_sweep(const ReplicationReport& report,
                                       const std::string& axis);

}  // namespace cemee
