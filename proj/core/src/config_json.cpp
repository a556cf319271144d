#include "cemee/config_json.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cemee/errors.hpp"
#include "cemee/version.hpp"

namespace cemee {

namespace {

using nlohmann::json;

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const char* context) {
  if (!obj.is_object()) throw ConfigError(std::string(context) + ": expected object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError(std::string(context) + ": unknown key '" + key + "'");
  }
}

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(std::string("'") + key + "' must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError(std::string("'") + key + "' must be an integer");
  return obj[key].get<int>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string())
    throw ConfigError(std::string("'") + key + "' must be a string");
  return obj[key].get<std::string>();
}

void check_schema_version(const json& obj) {
  if (obj.contains("schema_version") && obj["schema_version"].get<int>() != 1)
    throw ConfigError("unsupported schema_version (expected 1)");
}

FeatureTerm feature_term_from_json(const json& term) {
  if (term.is_string()) {
    const std::string name = term.get<std::string>();
    if (name == "intercept") return FeatureTerm::intercept();
    if (name == "time-index" || name == "t") return FeatureTerm::time_index();
    throw ConfigError("unknown feature term '" + name + "'");
  }
  if (term.is_object()) {
    check_keys(term, {"column", "scale"}, "feature term");
    if (!term.contains("column")) throw ConfigError("feature term needs 'column'");
    const std::string column = term["column"].get<std::string>();
    if (term.contains("scale"))
      return FeatureTerm::scaled(column, term["scale"].get<double>());
    return FeatureTerm::col(column);
  }
  throw ConfigError("feature term must be a string or object");
}

FeatureSpec feature_spec_from_json(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(std::string(what) + " must be a non-empty array of terms");
  FeatureSpec spec;
  for (const auto& term : arr) spec.terms.push_back(feature_term_from_json(term));
  return spec;
}

NumeratorSpec numerator_from_json(const json& obj) {
  NumeratorSpec spec;
  if (obj.contains("numerator")) {
    const auto& v = obj["numerator"];
    if (v.is_string()) {
      if (v.get<std::string>() != "empirical")
        throw ConfigError("numerator must be \"empirical\", a number, or {column}");
    } else if (v.is_number()) {
      spec = NumeratorSpec::constant(v.get<double>());
    } else if (v.is_object()) {
      check_keys(v, {"column"}, "numerator");
      spec = NumeratorSpec::from_column(v["column"].get<std::string>());
    } else {
      throw ConfigError("numerator must be \"empirical\", a number, or {column}");
    }
  }
  if (obj.contains("numerator_joint")) {
    const auto& jt = obj["numerator_joint"];
    check_keys(jt, {"p00", "p01", "p10", "p11"}, "numerator_joint");
    for (const char* key : {"p00", "p01", "p10", "p11"})
      if (!jt.contains(key))
        throw ConfigError(std::string("numerator_joint needs '") + key + "'");
    spec.has_joint_table = true;
    spec.joint = {jt["p00"].get<double>(), jt["p01"].get<double>(),
                  jt["p10"].get<double>(), jt["p11"].get<double>()};
    double total = 0.0;
    for (double v : spec.joint) {
      if (!(v > 0.0 && v < 1.0))
        throw ConfigError("numerator_joint entries must be in (0,1)");
      total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw ConfigError("numerator_joint must sum to 1");
  }
  return spec;
}

LagSpec lag_spec_from_json(const json& obj) {
  if (!obj.contains("lag_outcome")) return LagSpec::shifted();
  const auto& v = obj["lag_outcome"];
  if (v.is_string()) {
    if (v.get<std::string>() == "shifted-proximal") return LagSpec::shifted();
    throw ConfigError("lag_outcome must be \"shifted-proximal\" or {column}");
  }
  if (v.is_object()) {
    check_keys(v, {"column"}, "lag_outcome");
    if (!v.contains("column")) throw ConfigError("lag_outcome needs 'column'");
    return LagSpec::from_column(v["column"].get<std::string>());
  }
  throw ConfigError("lag_outcome must be \"shifted-proximal\" or {column}");
}

SmallSampleMode small_sample_from_json(const json& obj) {
  if (!obj.contains("small_sample_correction")) return SmallSampleMode::automatic;
  const auto& v = obj["small_sample_correction"];
  if (v.is_boolean())
    return v.get<bool>() ? SmallSampleMode::always : SmallSampleMode::never;
  if (v.is_string() && v.get<std::string>() == "auto")
    return SmallSampleMode::automatic;
  throw ConfigError("small_sample_correction must be \"auto\", true or false");
}

SchemaMap schema_map_from_object(const json& obj) {
  check_keys(obj, {"cluster", "id", "time", "treatment", "prob", "avail", "outcome"},
             "schema");
  SchemaMap map;
  map.cluster = get_string(obj, "cluster", map.cluster);
  map.id = get_string(obj, "id", map.id);
  map.time = get_string(obj, "time", map.time);
  map.treatment = get_string(obj, "treatment", map.treatment);
  map.prob = get_string(obj, "prob", map.prob);
  map.avail = get_string(obj, "avail", map.avail);
  map.outcome = get_string(obj, "outcome", map.outcome);
  return map;
}

ScenarioConfig scenario_config_from_object(const json& obj, bool allow_seed) {
  std::set<std::string> allowed = {"schema_version", "scenario",  "clusters",
                                   "cluster_size",   "horizon",   "p_rand",
                                   "random_effect",  "beta20"};
  if (allow_seed) allowed.insert("seed");
  check_keys(obj, allowed, "scenario config");
  if (!obj.contains("scenario")) throw ConfigError("scenario config needs 'scenario'");

  ScenarioConfig config =
      ScenarioConfig::for_scenario(scenario_from_string(obj["scenario"].get<std::string>()));
  config.clusters = get_int(obj, "clusters", config.clusters);
  config.cluster_size = get_int(obj, "cluster_size", config.cluster_size);
  config.horizon = get_int(obj, "horizon", config.horizon);
  config.p_rand = get_number(obj, "p_rand", config.p_rand);
  config.beta20 = get_number(obj, "beta20", config.beta20);
  if (obj.contains("random_effect")) {
    const auto& re = obj["random_effect"];
    check_keys(re, {"mu", "sigma", "lower", "upper"}, "random_effect");
    config.random_effect.mu = get_number(re, "mu", config.random_effect.mu);
    config.random_effect.sigma = get_number(re, "sigma", config.random_effect.sigma);
    config.random_effect.lower = get_number(re, "lower", config.random_effect.lower);
    config.random_effect.upper = get_number(re, "upper", config.random_effect.upper);
  }
  if (allow_seed && obj.contains("seed"))
    config.seed = obj["seed"].get<std::uint64_t>();
  config.validate();
  return config;
}

json scenario_config_to_object(const ScenarioConfig& config) {
  json obj;
  obj["scenario"] = scenario_to_string(config.scenario);
  obj["clusters"] = config.clusters;
  obj["cluster_size"] = config.cluster_size;
  obj["horizon"] = config.horizon;
  obj["p_rand"] = config.p_rand;
  obj["random_effect"] = {{"mu", config.random_effect.mu},
                          {"sigma", config.random_effect.sigma},
                          {"lower", config.random_effect.lower},
                          {"upper", config.random_effect.upper}};
  if (config.scenario == Scenario::IV) obj["beta20"] = config.beta20;
  obj["seed"] = config.seed;
  return obj;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

ScenarioConfig scenario_config_from_json(const std::string& text) {
  const json obj = parse(text, "scenario config");
  check_schema_version(obj);
  return scenario_config_from_object(obj, true);
}

FitConfig fit_config_from_json(const std::string& text) {
  const json obj = parse(text, "fit config");
  check_schema_version(obj);
  check_keys(obj,
             {"schema_version", "panel", "schema", "estimator", "delta",
              "lag_outcome", "reference_policy", "numerator", "numerator_joint",
              "moderator", "control", "significance", "solver",
              "small_sample_correction"},
             "fit config");
  FitConfig config;
  if (!obj.contains("panel")) throw ConfigError("fit config needs 'panel'");
  config.panel_path = obj["panel"].get<std::string>();
  if (obj.contains("schema")) config.schema = schema_map_from_object(obj["schema"]);

  config.options.estimator =
      estimator_from_string(get_string(obj, "estimator", "cemee-direct"));
  config.options.delta = get_int(obj, "delta", 1);
  if (config.options.delta < 1) throw ConfigError("delta must be >= 1");
  config.options.policy =
      ReferencePolicy::parse(get_string(obj, "reference_policy", "otd"));
  config.options.numerator = numerator_from_json(obj);
  config.options.lag_outcome = lag_spec_from_json(obj);
  if (obj.contains("solver")) {
    const auto& solver = obj["solver"];
    check_keys(solver, {"tolerance", "max_iterations"}, "solver");
    config.options.solver.tolerance =
        get_number(solver, "tolerance", config.options.solver.tolerance);
    config.options.solver.max_iterations =
        get_int(solver, "max_iterations", config.options.solver.max_iterations);
    if (!(config.options.solver.tolerance > 0.0))
      throw ConfigError("solver tolerance must be positive");
  }
  if (obj.contains("moderator"))
    config.moderator = feature_spec_from_json(obj["moderator"], "moderator");
  if (obj.contains("control"))
    config.control = feature_spec_from_json(obj["control"], "control");
  config.significance = get_number(obj, "significance", 0.05);
  config.small_sample = small_sample_from_json(obj);
  config.options.retain_unit_blocks = config.small_sample == SmallSampleMode::always;
  return config;
}

ExperimentPlan experiment_plan_from_json(const std::string& text,
                                         std::string* sweep_axis) {
  const json obj = parse(text, "experiment plan");
  check_schema_version(obj);
  check_keys(obj,
             {"schema_version", "replicates", "significance", "seed", "truth_draws",
              "estimators", "moderator", "control", "numerator", "numerator_joint",
              "cells", "small_sample_correction", "sweep"},
             "experiment plan");

  ExperimentPlan plan;
  plan.replicates = get_int(obj, "replicates", plan.replicates);
  plan.significance = get_number(obj, "significance", plan.significance);
  if (obj.contains("seed")) plan.master_seed = obj["seed"].get<std::uint64_t>();
  plan.truth_draws = get_int(obj, "truth_draws", 1000000);
  plan.numerator = numerator_from_json(obj);
  plan.small_sample = small_sample_from_json(obj);

  if (!obj.contains("estimators") || !obj["estimators"].is_array() ||
      obj["estimators"].empty())
    throw ConfigError("experiment plan needs a non-empty 'estimators' array");
  for (const auto& est : obj["estimators"]) {
    if (est.is_string()) {
      plan.estimators.push_back(EstimatorVariant::parse_label(est.get<std::string>()));
    } else if (est.is_object()) {
      check_keys(est, {"estimator", "delta", "reference_policy", "lag_outcome", "label"},
                 "estimator variant");
      EstimatorVariant variant;
      variant.kind = estimator_from_string(get_string(est, "estimator", "cemee"));
      variant.delta = get_int(est, "delta", 1);
      variant.policy = ReferencePolicy::parse(get_string(est, "reference_policy", "otd"));
      variant.lag_outcome = lag_spec_from_json(est);
      variant.label = get_string(est, "label", "");
      if (variant.label.empty()) variant.label = variant.default_label();
      plan.estimators.push_back(std::move(variant));
    } else {
      throw ConfigError("estimator entries must be strings or objects");
    }
  }

  if (obj.contains("moderator"))
    plan.moderator = feature_spec_from_json(obj["moderator"], "moderator");
  if (obj.contains("control")) {
    plan.control = feature_spec_from_json(obj["control"], "control");
  } else {
    // saturated-in-state working model for the simulated scenarios
    plan.control.terms = {FeatureTerm::intercept(),
                          FeatureTerm::col(column::state_is1),
                          FeatureTerm::col(column::state_is2)};
  }

  if (!obj.contains("cells") || !obj["cells"].is_array() || obj["cells"].empty())
    throw ConfigError("experiment plan needs a non-empty 'cells' array");
  for (const auto& cell : obj["cells"])
    plan.cells.push_back(scenario_config_from_object(cell, false));

  if (sweep_axis != nullptr) *sweep_axis = get_string(obj, "sweep", "");
  plan.validate();
  return plan;
}

ModerationConfig moderation_config_from_json(const std::string& text) {
  const json obj = parse(text, "moderation config");
  check_schema_version(obj);
  if (!obj.contains("grid")) throw ConfigError("moderation config needs 'grid'");
  json fit_obj = obj;
  fit_obj.erase("grid");
  ModerationConfig config;
  config.fit = fit_config_from_json(fit_obj.dump());

  const auto& grid = obj["grid"];
  if (grid.is_array()) {
    for (const auto& v : grid) config.grid.push_back(v.get<double>());
  } else if (grid.is_object()) {
    check_keys(grid, {"from", "to", "step"}, "grid");
    const double from = grid["from"].get<double>();
    const double to = grid["to"].get<double>();
    const double step = grid["step"].get<double>();
    if (!(step > 0.0) || to < from) throw ConfigError("bad moderation grid range");
    // inclusive endpoint, tolerant of floating point accumulation
    for (double s = from; s <= to + 1e-9 * std::max(1.0, std::fabs(to)); s += step)
      config.grid.push_back(s);
  } else {
    throw ConfigError("grid must be an array or {from,to,step}");
  }
  if (config.grid.empty()) throw ConfigError("moderation grid is empty");
  return config;
}

ValidateConfig validate_config_from_json(const std::string& text) {
  const json obj = parse(text, "validate config");
  check_schema_version(obj);
  check_keys(obj, {"schema_version", "panel", "schema"}, "validate config");
  if (!obj.contains("panel")) throw ConfigError("validate config needs 'panel'");
  ValidateConfig config;
  config.panel_path = obj["panel"].get<std::string>();
  if (obj.contains("schema")) config.schema = schema_map_from_object(obj["schema"]);
  return config;
}

SchemaMap schema_map_from_json(const std::string& text) {
  return schema_map_from_object(parse(text, "schema map"));
}

std::string manifest_json(const ScenarioConfig& config,
                          const std::vector<std::pair<std::string, double>>& truths) {
  json manifest;
  manifest["schema_version"] = 1;
  manifest["generator"] = std::string("cemee ") + version_string;
  manifest["config"] = scenario_config_to_object(config);
  manifest["seed"] = config.seed;
  for (const auto& [name, value] : truths) manifest[name] = value;
  return manifest.dump(2) + "\n";
}

std::string inference_csv(const InferenceSummary& summary) {
  std::ostringstream os;
  os << "coefficient,estimate,se,t,p,lo,hi\n";
  auto emit = [&](const CoefficientInference& row) {
    os << row.name << ',' << format_g(row.estimate) << ',' << format_g(row.se) << ','
       << format_g(row.t_stat) << ',' << format_g(row.p_value) << ','
       << format_g(row.lower) << ',' << format_g(row.upper) << '\n';
  };
  for (const auto& row : summary.coefficients) emit(row);
  for (const auto& row : summary.contrasts) emit(row);
  return os.str();
}

std::string fit_diagnostics_json(const FitResult& fit, const CovarianceResult& cov,
                                 const InferenceSummary& summary) {
  json diag;
  diag["schema_version"] = 1;
  diag["estimator"] = estimator_to_string(fit.estimator);
  diag["delta"] = fit.delta;
  diag["converged"] = fit.converged;
  diag["iterations"] = fit.iterations;
  diag["residual_norm"] = fit.residual_norm;
  diag["bread_condition"] = fit.bread_condition;
  diag["n_units"] = fit.n_units;
  diag["df"] = cov.df;
  diag["small_sample_corrected"] = cov.corrected;
  diag["skipped_singleton_clusters"] = fit.skipped_singleton_clusters;
  diag["critical_value"] = summary.critical_value;
  diag["alpha"] = std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.p);
  diag["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.q);
  std::vector<std::vector<double>> cov_beta(fit.q, std::vector<double>(fit.q));
  for (int i = 0; i < fit.q; ++i)
    for (int j = 0; j < fit.q; ++j) cov_beta[i][j] = cov.beta_block(i, j);
  diag["covariance_beta"] = cov_beta;
  diag["coefficients"] = json::array();
  for (const auto& row : summary.coefficients)
    diag["coefficients"].push_back({{"name", row.name},
                                    {"estimate", row.estimate},
                                    {"se", row.se},
                                    {"t", row.t_stat},
                                    {"p", row.p_value},
                                    {"lo", row.lower},
                                    {"hi", row.upper}});
  return diag.dump(2) + "\n";
}

std::string report_json(const ReplicationReport& report) {
  json out;
  out["schema_version"] = 1;
  out["generator"] = std::string("cemee ") + version_string;
  out["master_seed"] = report.master_seed;
  out["replicates"] = report.replicates;
  out["significance"] = report.significance;
  out["cells"] = json::array();
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    json cell = scenario_config_to_object(report.cells[c]);
    cell.erase("seed");  // per-replicate seeds are derived, not configured
    cell["estimators"] = json::array();
    for (const auto& slot : report.results[c]) {
      json est;
      est["label"] = slot.estimator_label;
      est["truth"] = slot.truth;
      est["summary"] = {{"bias", slot.summary.bias},
                        {"se", slot.summary.mean_se},
                        {"emp_sd", slot.summary.emp_sd},
                        {"rmse", slot.summary.rmse},
                        {"cp", slot.summary.cp},
                        {"cp_mcse", slot.summary.cp_mcse},
                        {"n_used", slot.summary.n},
                        {"n_failed", slot.n_failed}};
      json estimates = json::array();
      json ses = json::array();
      json lower = json::array();
      json upper = json::array();
      json failed = json::array();
      for (std::size_t r = 0; r < slot.replicates.size(); ++r) {
        const auto& rep = slot.replicates[r];
        if (rep.ok) {
          estimates.push_back(rep.estimate);
          ses.push_back(rep.se);
          lower.push_back(rep.lower);
          upper.push_back(rep.upper);
        } else {
          failed.push_back(r);
        }
      }
      est["estimates"] = std::move(estimates);
      est["ses"] = std::move(ses);
      est["lower"] = std::move(lower);
      est["upper"] = std::move(upper);
      est["failed_replicates"] = std::move(failed);
      cell["estimators"].push_back(std::move(est));
    }
    out["cells"].push_back(std::move(cell));
  }
  return out.dump(2) + "\n";
}

std::string report_table_csv(const ReplicationReport& report) {
  std::ostringstream os;
  os << "scenario,estimator,clusters,cluster_size,bias,se,rmse,cp,emp_sd,cp_mcse,"
        "truth,n_used,n_failed\n";
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& cell = report.cells[c];
    for (const auto& slot : report.results[c]) {
      const auto& s = slot.summary;
      os << scenario_to_string(cell.scenario) << ',' << slot.estimator_label << ','
         << cell.clusters << ',' << cell.cluster_size << ',' << format_g(s.bias)
         << ',' << format_g(s.mean_se) << ',' << format_g(s.rmse) << ','
         << format_g(s.cp) << ',' << format_g(s.emp_sd) << ','
         << format_g(s.cp_mcse) << ',' << format_g(s.truth) << ',' << s.n << ','
         << slot.n_failed << '\n';
    }
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& curve) {
  std::ostringstream os;
  os << "x,estimator,cp,cp_mcse\n";
  for (const auto& point : curve)
    os << format_g(point.x) << ',' << point.estimator << ',' << format_g(point.cp)
       << ',' << format_g(point.cp_mcse) << '\n';
  return os.str();
}

std::string curve_csv(const std::vector<ModerationPoint>& curve) {
  std::ostringstream os;
  os << "s,effect,lo,hi\n";
  for (const auto& point : curve)
    os << format_g(point.s) << ',' << format_g(point.effect) << ','
       << format_g(point.lower) << ',' << format_g(point.upper) << '\n';
  return os.str();
}

std::string validation_json(const ValidationReport& report) {
  json out;
  out["schema_version"] = 1;
  out["valid"] = report.ok();
  out["violations"] = json::array();
  for (const auto& v : report.violations)
    out["violations"].push_back({{"cluster", v.cluster},
                                 {"individual", v.individual},
                                 {"t", v.t},
                                 {"message", v.message}});
  return out.dump(2) + "\n";
}

}  // namespace cemee
