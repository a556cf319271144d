#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "cemee/features.hpp"
#include "cemee/panel.hpp"
#include "cemee/weights.hpp"

namespace cemee {

enum class EstimatorKind { emee, cemee_direct, cemee_indirect };

EstimatorKind estimator_from_string(const std::string& name);
std::string estimator_to_string(EstimatorKind kind);

struct SolverOptions {
  double tolerance = 1e-10;  // max-norm of the averaged estimating function
  int max_iterations = 100;
  int max_step_halvings = 10;
};

struct EstimatorOptions {
  EstimatorKind estimator = EstimatorKind::cemee_direct;
  int delta = 1;
  ReferencePolicy policy;  // lag-window reference distribution
  NumeratorSpec numerator;
  LagSpec lag_outcome;
  SolverOptions solver;
  /// Keep per-individual design blocks for the small-sample correction.
  /// Forced on automatically when the unit count is below 50.
  bool retain_unit_blocks = false;
};

/// Per-individual (or per ordered pair, for the indirect estimator) pieces of
/// the estimating equation at the solution, kept for the leverage-corrected
/// covariance. Rows index decision points.
struct UnitBlock {
  int unit_index = 0;        // sandwich unit this block belongs to
  double inv_group = 1.0;    // 1/G_m (direct), 1/(G_m(G_m-1)) (pairs), 1 (emee)
  Eigen::MatrixXd x_weighted;  // (p+q) x T~: weighted covariate columns w_t x_t
  Eigen::MatrixXd dresid;      // T~ x (p+q): rows -d(resid_t)/d theta
  Eigen::VectorXd resid;       // T~
  std::string label;
};

struct FitResult {
  EstimatorKind estimator = EstimatorKind::cemee_direct;
  int p = 0;
  int q = 0;
  int delta = 1;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  bool converged = false;
  int iterations = 0;
  double residual_norm = std::numeric_limits<double>::infinity();

  /// Empirical Jacobian of the averaged estimating function at the solution.
  Eigen::MatrixXd bread;
  double bread_condition = 0.0;

  int n_units = 0;  // clusters (C-EMEE) or individuals (EMEE)
  std::vector<Eigen::VectorXd> unit_scores;
  std::vector<std::string> unit_labels;
  std::vector<UnitBlock> blocks;
  int skipped_singleton_clusters = 0;
  std::vector<std::string> coefficient_names;

  Eigen::VectorXd theta() const;
};

struct EvalResult {
  Eigen::VectorXd value;
  std::vector<Eigen::VectorXd> unit_values;
};

/// Direct-effect estimating function (C-EMEE averages clusters, EMEE averages
/// individuals; selected by options.estimator). theta stacks (alpha, beta).
EvalResult estimating_function_direct(const DesignRows& design,
                                      const Eigen::VectorXd& theta,
                                      const EstimatorOptions& options);

/// Pairwise indirect estimating function over ordered within-cluster pairs.
EvalResult estimating_function_indirect(const DesignRows& design,
                                        const Eigen::VectorXd& theta,
                                        const EstimatorOptions& options);

FitResult fit_direct(const ClusterPanel& panel, const FeatureSpec& moderator,
                     const FeatureSpec& control, EstimatorOptions options);

FitResult fit_emee(const ClusterPanel& panel, const FeatureSpec& moderator,
                   const FeatureSpec& control, EstimatorOptions options);

FitResult fit_indirect(const ClusterPanel& panel, const FeatureSpec& moderator,
                       const FeatureSpec& control, EstimatorOptions options);

/// Dispatch on options.estimator.
FitResult fit(const ClusterPanel& panel, const FeatureSpec& moderator,
              const FeatureSpec& control, const EstimatorOptions& options);

std::vector<std::string> coefficient_names(const FeatureSpec& control,
                                           const FeatureSpec& moderator);

}  // namespace cemee
