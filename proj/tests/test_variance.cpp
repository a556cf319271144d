#include <doctest.h>

#include <cmath>

#include "cemee/errors.hpp"
#include "cemee/estimator.hpp"
#include "cemee/simulator.hpp"
#include "cemee/variance.hpp"
#include "support/brute_force.hpp"
#include "support/panel_builder.hpp"

using namespace cemee;
using testsupport::PanelBuilder;

namespace {

EstimatorOptions direct_options(double ptilde) {
  EstimatorOptions options;
  options.numerator = NumeratorSpec::constant(ptilde);
  return options;
}

FitResult synthetic_fit(int p, int q, const Eigen::VectorXd& theta, int units) {
  FitResult fit;
  fit.p = p;
  fit.q = q;
  fit.alpha = theta.head(p);
  fit.beta = theta.tail(q);
  fit.converged = true;
  fit.n_units = units;
  fit.coefficient_names.resize(p + q, "x");
  return fit;
}

CovarianceResult synthetic_cov(const Eigen::MatrixXd& cov, int p, int q, int df) {
  CovarianceResult out;
  out.covariance = cov;
  out.beta_block = cov.block(p, p, q, q);
  out.df = df;
  return out;
}

}  // namespace

TEST_CASE("two-cluster toy meat equals hand-computed outer products") {
  Rng rng(61);
  const auto panel = testsupport::random_panel(rng, 2, 3, 4);
  const FeatureSpec intercept = FeatureSpec::intercept_only();
  FeatureSpec control{{FeatureTerm::intercept(), FeatureTerm::col("Z")}};
  const auto options = direct_options(0.3);
  const FitResult fit_result = fit_direct(panel, intercept, control, options);
  REQUIRE(fit_result.converged);

  const auto design = build_design(panel, intercept, control, 1);
  const auto eval = estimating_function_direct(design, fit_result.theta(), options);
  REQUIRE(eval.unit_values.size() == 2);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& u : eval.unit_values) expected += u * u.transpose();
  expected /= 2.0;

  const CovarianceResult cov = sandwich(fit_result);
  CHECK((cov.meat - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("covariance is symmetric with nonnegative diagonal") {
  Rng rng(62);
  const auto panel = testsupport::random_panel(rng, 7, 3, 5);
  const auto fit_result = fit_direct(panel, FeatureSpec::intercept_only(),
                                     FeatureSpec::intercept_only(),
                                     direct_options(0.3));
  const CovarianceResult cov = sandwich(fit_result);
  CHECK((cov.covariance - cov.covariance.transpose()).lpNorm<Eigen::Infinity>() <
        1e-12);
  for (int k = 0; k < cov.covariance.rows(); ++k)
    CHECK(cov.covariance(k, k) >= 0.0);
  CHECK(cov.df == 7 - 2);
}

TEST_CASE("quadratic-form consistency of contrast standard errors") {
  Rng rng(63);
  const auto panel = testsupport::random_panel(rng, 8, 2, 5);
  FeatureSpec moderator{{FeatureTerm::intercept(), FeatureTerm::col("Z")}};
  const auto fit_result = fit_direct(panel, moderator, FeatureSpec::intercept_only(),
                                     direct_options(0.3));
  const CovarianceResult cov = sandwich(fit_result);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd c(2);
    c << rng.uniform() * 2 - 1, rng.uniform() * 2 - 1;
    const auto summary = infer(fit_result, cov, {c}, 0.05);
    const double se = summary.contrasts[0].se;
    CHECK(std::fabs(se * se - c.dot(cov.beta_block * c)) < 1e-14);
  }
}

TEST_CASE("beta covariance is invariant to full-rank control reparameterization") {
  Rng rng(64);
  const auto panel = testsupport::random_panel(rng, 10, 3, 6);
  const FeatureSpec intercept = FeatureSpec::intercept_only();
  FeatureSpec g1{{FeatureTerm::intercept(), FeatureTerm::col("Z")}};
  FeatureSpec g2{{FeatureTerm::intercept(), FeatureTerm::scaled("Z", 2.5)}};
  const auto options = direct_options(0.3);

  const FitResult f1 = fit_direct(panel, intercept, g1, options);
  const FitResult f2 = fit_direct(panel, intercept, g2, options);
  REQUIRE(f1.converged);
  REQUIRE(f2.converged);
  CHECK(std::fabs(f1.beta[0] - f2.beta[0]) < 1e-8);
  const CovarianceResult c1 = sandwich(f1);
  const CovarianceResult c2 = sandwich(f2);
  CHECK(std::fabs(c1.beta_block(0, 0) - c2.beta_block(0, 0)) < 1e-10);
}

TEST_CASE("corrected covariance inflates standard errors on small panels") {
  Rng rng(65);
  int violations = 0;
  double ratio_sum = 0.0;
  const int n_panels = 100;
  for (int i = 0; i < n_panels; ++i) {
    const int M = 4 + rng.uniform_int(6);
    const auto panel = testsupport::random_panel(rng, M, 2 + rng.uniform_int(2), 4);
    const auto fit_result = fit_direct(panel, FeatureSpec::intercept_only(),
                                       FeatureSpec::intercept_only(),
                                       direct_options(0.3));
    if (!fit_result.converged) continue;
    const double plain = std::sqrt(sandwich(fit_result).beta_block(0, 0));
    const double corrected =
        std::sqrt(small_sample_correct(fit_result).beta_block(0, 0));
    ratio_sum += corrected / plain;
    if (corrected < plain - 1e-12) ++violations;
  }
  INFO("violations: ", violations);
  CHECK(violations <= n_panels / 20);  // expected inflation, rare exceptions
  CHECK(ratio_sum / n_panels > 1.0);
}

TEST_CASE("correction washes out for many clusters") {
  ScenarioConfig config = ScenarioConfig::for_scenario(Scenario::I);
  config.clusters = 500;
  config.cluster_size = 2;
  config.horizon = 10;
  config.seed = 8;
  const ClusterPanel panel = generate_scenario(config);
  EstimatorOptions options;
  options.numerator = NumeratorSpec::empirical();
  options.retain_unit_blocks = true;
  const FitResult fit_result = fit_direct(panel, FeatureSpec::intercept_only(),
                                          FeatureSpec::intercept_only(), options);
  REQUIRE(fit_result.converged);
  const double plain = std::sqrt(sandwich(fit_result).beta_block(0, 0));
  const double corrected =
      std::sqrt(small_sample_correct(fit_result).beta_block(0, 0));
  CHECK(std::fabs(corrected / plain - 1.0) < 0.02);
}

TEST_CASE("leverage inverse matches a hand-inverted two-by-two") {
  // Two clusters of one individual with T = 2: every (I - H) block is 2x2 and
  // can be inverted by the adjugate formula independently of Eigen's LU.
  PanelBuilder builder;
  builder.cluster("c1").individual("u1").row(1, 1, 0.5, 1).row(2, 0, 0.5, 1);
  builder.cluster("c2").individual("u1").row(1, 0, 0.5, 1).row(2, 1, 0.5, 0);
  const auto panel = builder.build();
  EstimatorOptions options = direct_options(0.5);
  options.retain_unit_blocks = true;
  const FitResult fit_result = fit_direct(panel, FeatureSpec::intercept_only(),
                                          FeatureSpec::intercept_only(), options);
  REQUIRE(fit_result.converged);
  REQUIRE(fit_result.blocks.size() == 2);

  const Eigen::MatrixXd bread_total = -2.0 * fit_result.bread;
  const Eigen::MatrixXd bread_inv =
      bread_total.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(2, 2));

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (const auto& block : fit_result.blocks) {
    const Eigen::MatrixXd h = block.dresid * bread_inv * block.x_weighted;
    const Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(2, 2) - h;
    const double det = ih(0, 0) * ih(1, 1) - ih(0, 1) * ih(1, 0);
    REQUIRE(std::fabs(det) > 1e-12);
    Eigen::MatrixXd inv(2, 2);
    inv << ih(1, 1), -ih(0, 1), -ih(1, 0), ih(0, 0);
    inv /= det;
    const Eigen::VectorXd adjusted = inv * block.resid;
    const Eigen::VectorXd u = block.inv_group * (block.x_weighted * adjusted);
    meat += u * u.transpose();
  }
  meat /= 2.0;

  const CovarianceResult corrected = small_sample_correct(fit_result);
  CHECK((corrected.meat - meat).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("correction requires retained blocks") {
  ScenarioConfig config = ScenarioConfig::for_scenario(Scenario::I);
  config.clusters = 60;  // above the auto-retain threshold
  config.cluster_size = 2;
  config.horizon = 6;
  config.seed = 9;
  const ClusterPanel panel = generate_scenario(config);
  EstimatorOptions options;
  options.numerator = NumeratorSpec::empirical();
  const FitResult fit_result = fit_direct(panel, FeatureSpec::intercept_only(),
                                          FeatureSpec::intercept_only(), options);
  CHECK(fit_result.blocks.empty());
  CHECK_THROWS_AS(small_sample_correct(fit_result), NumericError);
  CHECK_FALSE(sandwich(fit_result).corrected);
}

TEST_CASE("t critical values used for intervals") {
  Eigen::VectorXd theta(2);
  theta << -1.0, 0.3;
  const auto fit_result = synthetic_fit(1, 1, theta, 1000002);
  Eigen::MatrixXd cov(2, 2);
  cov << 0.01, 0.0, 0.0, 0.0004;
  SUBCASE("normal limit") {
    const auto summary =
        infer(fit_result, synthetic_cov(cov, 1, 1, 1000000), {}, 0.05);
    CHECK(std::fabs(summary.critical_value - 1.959964) < 1e-4);
  }
  SUBCASE("nu = 10") {
    const auto summary = infer(fit_result, synthetic_cov(cov, 1, 1, 10), {}, 0.05);
    CHECK(std::fabs(summary.critical_value - 2.228139) < 1e-5);
    const auto& beta_row = summary.coefficients[1];
    CHECK(std::fabs(beta_row.lower - (0.3 - 2.2281388519649385 * 0.02)) < 1e-9);
    CHECK(std::fabs(beta_row.upper - (0.3 + 2.2281388519649385 * 0.02)) < 1e-9);
  }
  SUBCASE("case-study-sized effect is significant") {
    Eigen::VectorXd est(2);
    est << -1.0, -0.058;
    const auto f2 = synthetic_fit(1, 1, est, 102);
    Eigen::MatrixXd c2(2, 2);
    c2 << 0.01, 0.0, 0.0, 0.006 * 0.006;
    const auto summary = infer(f2, synthetic_cov(c2, 1, 1, 100), {}, 0.05);
    CHECK(summary.coefficients[1].p_value < 0.05);
    CHECK(summary.coefficients[1].p_value >= 0.0);
  }
  SUBCASE("degrees of freedom below one are rejected") {
    CHECK_THROWS_AS(infer(fit_result, synthetic_cov(cov, 1, 1, 0), {}, 0.05),
                    NumericError);
  }
}

TEST_CASE("moderation curve follows the delta-method band") {
  Eigen::VectorXd theta(3);
  theta << -1.0, 0.1, 0.3;
  const auto fit_result = synthetic_fit(1, 2, theta, 200);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(0, 0) = 0.01;
  cov(1, 1) = 0.002;   // var(beta0)
  cov(2, 2) = 0.0005;  // var(beta1)
  cov(1, 2) = cov(2, 1) = 0.0002;
  const auto cov_result = synthetic_cov(cov, 1, 2, 197);

  const std::vector<double> grid = {0.0, 0.5, 1.0};
  const auto curve = moderation_curve(fit_result, cov_result, grid, 0.05);
  REQUIRE(curve.size() == 3);
  const double crit = student_t_quantile(0.975, 197);

  CHECK(curve[0].s == 0.0);
  CHECK(std::fabs(curve[0].effect - 0.1) < 1e-15);
  CHECK(std::fabs(curve[0].lower - (0.1 - crit * std::sqrt(0.002))) < 1e-12);

  for (const auto& point : curve) {
    const double var = 0.002 + point.s * point.s * 0.0005 + 2 * point.s * 0.0002;
    const double width = 2 * crit * std::sqrt(var);
    CHECK(std::fabs((point.upper - point.lower) - width) < 1e-12);
    CHECK(std::fabs(point.effect - (0.1 + 0.3 * point.s)) < 1e-15);
  }

  const auto bad_fit = synthetic_fit(1, 1, Eigen::VectorXd::Zero(2), 50);
  CHECK_THROWS_AS(
      moderation_curve(bad_fit, synthetic_cov(Eigen::MatrixXd::Identity(2, 2), 1, 1, 48),
                       grid, 0.05),
      ConfigError);
}

TEST_CASE("simulate-and-recover: moderated effect curve covers the truth") {
  ScenarioConfig config = ScenarioConfig::for_scenario(Scenario::II);
  config.clusters = 150;
  config.cluster_size = 5;
  config.horizon = 30;
  config.seed = 4242;
  const ClusterPanel panel = generate_scenario(config);

  EstimatorOptions options;
  options.numerator = NumeratorSpec::empirical();
  FeatureSpec moderator{{FeatureTerm::intercept(), FeatureTerm::col("Z")}};
  FeatureSpec control{{FeatureTerm::intercept(), FeatureTerm::col("Z1"),
                       FeatureTerm::col("Z2")}};
  const FitResult fit_result = fit_direct(panel, moderator, control, options);
  REQUIRE(fit_result.converged);
  const CovarianceResult cov = sandwich(fit_result);
  const auto curve = moderation_curve(fit_result, cov, {0.0, 0.5, 1.0}, 0.05);

  // conditional effect is 0.1 + 0.3 z by construction
  const auto summary = infer(fit_result, cov, {}, 0.05);
  const double se1 = summary.coefficients[3].se;  // beta[intercept]
  const double se2 = summary.coefficients[4].se;  // beta[Z]
  CHECK(std::fabs(fit_result.beta[0] - 0.1) < 3 * se1);
  CHECK(std::fabs(fit_result.beta[1] - 0.3) < 3 * se2);
  const auto at_one = curve[2];
  CHECK(at_one.lower < 0.4);
  CHECK(at_one.upper > 0.4 - 3 * (se1 + se2));
}
