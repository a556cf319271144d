#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cemee/estimator.hpp"

namespace cemee {

struct CovarianceResult {
  Eigen::MatrixXd covariance;  // (p+q) x (p+q), scaled so SEs are sqrt(diag)
  Eigen::MatrixXd beta_block;  // q x q
  Eigen::MatrixXd bread;       // Q hat
  Eigen::MatrixXd meat;        // W hat (or the leverage-corrected middle term)
  bool corrected = false;
  int df = 0;  // units - p - q
};

/// Robust sandwich Q^-1 W Q^-T / M from the retained per-unit scores.
CovarianceResult sandwich(const FitResult& fit);

/// Mancl-DeRouen style correction: per-individual residuals are premultiplied
/// by (I - H)^-1 before the score outer products are formed. Requires the fit
/// to have retained its unit blocks.
CovarianceResult small_sample_correct(const FitResult& fit);

/// Applies the correction when the unit count is below the given threshold.
CovarianceResult covariance_for(const FitResult& fit, bool allow_correction = true,
                                int small_sample_threshold = 50);

struct CoefficientInference {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct InferenceSummary {
  std::vector<CoefficientInference> coefficients;  // alpha block then beta block
  std::vector<CoefficientInference> contrasts;     // c' beta rows
  double significance = 0.05;
  int df = 0;
  double critical_value = 0.0;
};

/// Two-sided t inference with df = units - p - q.
InferenceSummary infer(const FitResult& fit, const CovarianceResult& cov,
                       const std::vector<Eigen::VectorXd>& contrasts,
                       double significance);

struct ModerationPoint {
  double s = 0.0;
  double effect = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Pointwise band for the effect beta0 + beta1 s over a moderator grid.
/// Requires q = 2 with moderator features (1, s).
std::vector<ModerationPoint> moderation_curve(const FitResult& fit,
                                              const CovarianceResult& cov,
                                              const std::vector<double>& grid,
                                              double significance);

}  // namespace cemee
