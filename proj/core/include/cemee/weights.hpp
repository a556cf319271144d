#pragma once

#include <array>
#include <span>
#include <string>

namespace cemee {

/// Reference distribution for treatments in the lag window u = t+1..t+delta-1.
struct ReferencePolicy {
  enum class Kind { observed, always_treat, always_control, fixed_probability };
  Kind kind = Kind::observed;
  double pi = 0.0;  // fixed_probability only

  static ReferencePolicy observed() { return {}; }
  static ReferencePolicy always_treat() { return {Kind::always_treat, 0.0}; }
  static ReferencePolicy always_control() { return {Kind::always_control, 0.0}; }
  static ReferencePolicy fixed(double pi);

  /// Accepts "otd", "st", "sc" or "fixed:<pi>".
  static ReferencePolicy parse(const std::string& text);
  std::string to_string() const;
};

/// Per-decision weight p~(a|S) / p(a|H) for the observed treatment a, where
/// p1 and ptilde1 are the respective probabilities of A=1.
double marginal_weight(int a, double p1, double ptilde1);

/// Product over the lag window of pi_u(a_u|H_u) / p_u(a_u|H_u). The inputs are
/// the observed treatments and the realized-treatment probabilities
/// p_u(a_u|H_u). Exactly 1 for an empty window (delta = 1) and under the
/// observed-distribution policy; deterministic policies yield exact zeros when
/// the window disagrees with them.
double lag_weight(std::span<const double> window_a, std::span<const double> window_prob,
                  const ReferencePolicy& policy);

/// Joint numerator table over (a, a') in {0,1}^2, indexed a*2 + a'.
using JointTable = std::array<double, 4>;

JointTable joint_from_marginals(double ptilde1_j, double ptilde1_jp);

/// p~*(1|S) = p~(0,1|S) / (p~(0,0|S) + p~(0,1|S)).
double pair_numerator_prob(const JointTable& joint);

/// p~(a_j, a_j'|S) / p(a_j, a_j'|H) with the joint denominator supplied.
double pair_weight(int a_j, int a_jp, double denom, const JointTable& joint);

/// Numerator specification: marginal p~ plus the pairwise joint. The default
/// is the study-wide empirical treatment fraction with the joint taken as a
/// product of marginals.
struct NumeratorSpec {
  enum class Kind { empirical, constant, column };
  Kind kind = Kind::empirical;
  double value = 0.0;   // constant
  std::string column;   // column lookup

  bool has_joint_table = false;
  JointTable joint{};

  static NumeratorSpec empirical() { return {}; }
  static NumeratorSpec constant(double ptilde);
  static NumeratorSpec from_column(std::string name) {
    return {Kind::column, 0.0, std::move(name), false, {}};
  }
};

}  // namespace cemee
