#include "cemee/variance.hpp"

#include <cmath>

#include "cemee/errors.hpp"
#include "cemee/special_functions.hpp"

namespace cemee {

namespace {

Eigen::MatrixXd invert_bread(const Eigen::MatrixXd& bread) {
  const int dim = static_cast<int>(bread.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bread);
  if (qr.rank() < dim) throw NumericError("singular bread matrix in sandwich");
  return qr.solve(Eigen::MatrixXd::Identity(dim, dim));
}

CovarianceResult assemble(const FitResult& fit, const Eigen::MatrixXd& meat,
                          bool corrected) {
  const int dim = fit.p + fit.q;
  const Eigen::MatrixXd bread_inv = invert_bread(fit.bread);
  Eigen::MatrixXd cov = bread_inv * meat * bread_inv.transpose() / fit.n_units;
  cov = 0.5 * (cov + cov.transpose());  // kill asymmetry from the solves

  CovarianceResult result;
  result.covariance = std::move(cov);
  result.beta_block = result.covariance.block(fit.p, fit.p, fit.q, fit.q);
  result.bread = fit.bread;
  result.meat = meat;
  result.corrected = corrected;
  result.df = fit.n_units - dim;
  return result;
}

}  // namespace

CovarianceResult sandwich(const FitResult& fit) {
  if (!fit.converged) throw NumericError("sandwich requires a converged fit");
  const int dim = fit.p + fit.q;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& u : fit.unit_scores) meat += u * u.transpose();
  meat /= fit.n_units;
  return assemble(fit, meat, false);
}

CovarianceResult small_sample_correct(const FitResult& fit) {
  if (!fit.converged) throw NumericError("correction requires a converged fit");
  if (fit.blocks.empty())
    throw NumericError("small-sample correction needs retained unit blocks");
  const int dim = fit.p + fit.q;

  // Total (unaveraged) bread, the inverse inside the leverage H.
  const Eigen::MatrixXd bread_total = -static_cast<double>(fit.n_units) * fit.bread;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(bread_total);
  if (qr.rank() < dim)
    throw NumericError("singular bread matrix in small-sample correction");
  const Eigen::MatrixXd bread_total_inv =
      qr.solve(Eigen::MatrixXd::Identity(dim, dim));

  std::vector<Eigen::VectorXd> corrected(fit.n_units,
                                         Eigen::VectorXd::Zero(dim));
  for (const auto& block : fit.blocks) {
    const auto rows = block.resid.size();
    const Eigen::MatrixXd h =
        block.dresid * bread_total_inv * block.x_weighted;  // T~ x T~ leverage
    const Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(rows, rows) - h;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ih);
    if (!lu.isInvertible())
      throw NumericError("(I - H) singular for " + block.label);
    const Eigen::VectorXd adjusted = lu.solve(block.resid);
    corrected[block.unit_index] += block.inv_group * (block.x_weighted * adjusted);
  }

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& u : corrected) meat += u * u.transpose();
  meat /= fit.n_units;
  return assemble(fit, meat, true);
}

CovarianceResult covariance_for(const FitResult& fit, bool allow_correction,
                                int small_sample_threshold) {
  if (allow_correction && fit.n_units < small_sample_threshold)
    return small_sample_correct(fit);
  return sandwich(fit);
}

namespace {

CoefficientInference make_row(const std::string& name, double estimate,
                              double variance, double critical, double nu) {
  CoefficientInference row;
  row.name = name;
  row.estimate = estimate;
  if (!(variance >= 0.0))
    throw NumericError("negative variance for " + name);
  row.se = std::sqrt(variance);
  if (row.se > 0.0) {
    row.t_stat = estimate / row.se;
    row.p_value = 2.0 * (1.0 - student_t_cdf(std::fabs(row.t_stat), nu));
  } else {
    row.t_stat = 0.0;
    row.p_value = 1.0;
  }
  row.lower = estimate - critical * row.se;
  row.upper = estimate + critical * row.se;
  return row;
}

}  // namespace

InferenceSummary infer(const FitResult& fit, const CovarianceResult& cov,
                       const std::vector<Eigen::VectorXd>& contrasts,
                       double significance) {
  if (!(significance > 0.0 && significance < 1.0))
    throw ConfigError("significance level must be in (0,1)");
  if (cov.df < 1)
    throw NumericError("degrees of freedom " + std::to_string(cov.df) +
                       " < 1: too few units for t-based inference");
  const double nu = static_cast<double>(cov.df);
  const double critical = student_t_quantile(1.0 - significance / 2.0, nu);

  InferenceSummary summary;
  summary.significance = significance;
  summary.df = cov.df;
  summary.critical_value = critical;

  const Eigen::VectorXd theta = fit.theta();
  for (int k = 0; k < fit.p + fit.q; ++k) {
    const std::string name = k < static_cast<int>(fit.coefficient_names.size())
                                 ? fit.coefficient_names[k]
                                 : "theta[" + std::to_string(k) + "]";
    summary.coefficients.push_back(
        make_row(name, theta[k], cov.covariance(k, k), critical, nu));
  }
  for (std::size_t i = 0; i < contrasts.size(); ++i) {
    const auto& c = contrasts[i];
    if (c.size() != fit.q) throw ConfigError("contrast dimension must equal q");
    const double est = c.dot(fit.beta);
    const double var = c.dot(cov.beta_block * c);
    summary.contrasts.push_back(
        make_row("contrast[" + std::to_string(i) + "]", est, var, critical, nu));
  }
  return summary;
}

std::vector<ModerationPoint> moderation_curve(const FitResult& fit,
                                              const CovarianceResult& cov,
                                              const std::vector<double>& grid,
                                              double significance) {
  if (fit.q != 2)
    throw ConfigError("moderation curve needs q = 2 with moderator features (1, s)");
  std::vector<Eigen::VectorXd> contrasts;
  contrasts.reserve(grid.size());
  for (double s : grid) {
    Eigen::VectorXd c(2);
    c << 1.0, s;
    contrasts.push_back(c);
  }
  const auto summary = infer(fit, cov, contrasts, significance);
  std::vector<ModerationPoint> curve;
  curve.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& row = summary.contrasts[i];
    curve.push_back({grid[i], row.estimate, row.lower, row.upper});
  }
  return curve;
}

}  // namespace cemee
