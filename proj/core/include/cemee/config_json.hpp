#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cemee/estimator.hpp"
#include "cemee/panel.hpp"
#include "cemee/replication.hpp"
#include "cemee/simulator.hpp"
#include "cemee/variance.hpp"

// JSON-config parsing and deterministic file emission for the CLI. All
// parsers are fail-fast: unknown keys are errors.

namespace cemee {

ScenarioConfig scenario_config_from_json(const std::string& text);

struct FitConfig {
  std::string panel_path;
  SchemaMap schema;
  EstimatorOptions options;
  FeatureSpec moderator = FeatureSpec::intercept_only();
  FeatureSpec control = FeatureSpec::intercept_only();
  double significance = 0.05;
  SmallSampleMode small_sample = SmallSampleMode::automatic;
};

FitConfig fit_config_from_json(const std::string& text);

/// sweep_axis receives the optional "sweep" key ("" when absent).
ExperimentPlan experiment_plan_from_json(const std::string& text,
                                         std::string* sweep_axis = nullptr);

struct ModerationConfig {
  FitConfig fit;
  std::vector<double> grid;
};

ModerationConfig moderation_config_from_json(const std::string& text);

struct ValidateConfig {
  std::string panel_path;
  SchemaMap schema;
};

ValidateConfig validate_config_from_json(const std::string& text);

SchemaMap schema_map_from_json(const std::string& text);

// ---- emitters ----

std::string manifest_json(const ScenarioConfig& config,
                          const std::vector<std::pair<std::string, double>>& truths);

std::string inference_csv(const InferenceSummary& summary);

std::string fit_diagnostics_json(const FitResult& fit, const CovarianceResult& cov,
                                 const InferenceSummary& summary);

std::string report_json(const ReplicationReport& report);

std::string report_table_csv(const ReplicationReport& report);

std::string sweep_csv(const std::vector<SweepPoint>& curve);

std::string curve_csv(const std::vector<ModerationPoint>& curve);

std::string validation_json(const ValidationReport& report);

}  // namespace cemee
