#pragma once

namespace cemee {

/// Standard normal CDF via erfc; absolute error near machine precision.
double normal_cdf(double x);

double normal_pdf(double x);

/// Inverse standard normal CDF for p in (0,1), refined to ~1e-15.
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double nu);

/// Student-t quantile for p in (0,1), nu >= 1; bisection plus Newton polish.
double student_t_quantile(double p, double nu);

double student_t_pdf(double t, double nu);

}  // namespace cemee
