#include "cemee/weights.hpp"

#include <cmath>
#include <sstream>

#include "cemee/errors.hpp"

namespace cemee {

ReferencePolicy ReferencePolicy::fixed(double pi) {
  if (!(pi >= 0.0 && pi <= 1.0))
    throw ConfigError("fixed-probability policy needs pi in [0,1]");
  return {Kind::fixed_probability, pi};
}

ReferencePolicy ReferencePolicy::parse(const std::string& text) {
  if (text == "otd") return observed();
  if (text == "st") return always_treat();
  if (text == "sc") return always_control();
  if (text.rfind("fixed:", 0) == 0) {
    try {
      return fixed(std::stod(text.substr(6)));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad fixed-probability policy '" + text + "'");
    }
  }
  throw ConfigError("unknown reference policy '" + text +
                    "' (expected otd, st, sc or fixed:<pi>)");
}

std::string ReferencePolicy::to_string() const {
  switch (kind) {
    case Kind::observed:
      return "otd";
    case Kind::always_treat:
      return "st";
    case Kind::always_control:
      return "sc";
    case Kind::fixed_probability: {
      std::ostringstream os;
      os << "fixed:" << pi;
      return os.str();
    }
  }
  return "?";
}

double marginal_weight(int a, double p1, double ptilde1) {
  if (!(p1 > 0.0 && p1 < 1.0))
    throw DataError("randomization probability out of open interval");
  if (!(ptilde1 > 0.0 && ptilde1 < 1.0))
    throw DataError("numerator probability out of open interval");
  const double num = a == 1 ? ptilde1 : 1.0 - ptilde1;
  const double den = a == 1 ? p1 : 1.0 - p1;
  return num / den;
}

double lag_weight(std::span<const double> window_a, std::span<const double> window_prob,
                  const ReferencePolicy& policy) {
  if (window_a.size() != window_prob.size())
    throw DataError("lag window treatment/probability length mismatch");
  if (window_a.empty()) return 1.0;
  if (policy.kind == ReferencePolicy::Kind::observed) return 1.0;

  double w = 1.0;
  for (std::size_t u = 0; u < window_a.size(); ++u) {
    const int a = window_a[u] != 0.0 ? 1 : 0;
    const double p = window_prob[u];
    if (!(p > 0.0 && p < 1.0))
      throw DataError("lag window probability out of open interval");
    double pi;
    switch (policy.kind) {
      case ReferencePolicy::Kind::always_treat:
        pi = a == 1 ? 1.0 : 0.0;
        break;
      case ReferencePolicy::Kind::always_control:
        pi = a == 0 ? 1.0 : 0.0;
        break;
      case ReferencePolicy::Kind::fixed_probability:
        pi = a == 1 ? policy.pi : 1.0 - policy.pi;
        break;
      default:
        pi = p;
        break;
    }
    if (pi == 0.0) return 0.0;  // exact zero, row still enters the sums
    w *= pi / p;
  }
  return w;
}

JointTable joint_from_marginals(double ptilde1_j, double ptilde1_jp) {
  JointTable joint;
  joint[0] = (1.0 - ptilde1_j) * (1.0 - ptilde1_jp);  // (0,0)
  joint[1] = (1.0 - ptilde1_j) * ptilde1_jp;          // (0,1)
  joint[2] = ptilde1_j * (1.0 - ptilde1_jp);          // (1,0)
  joint[3] = ptilde1_j * ptilde1_jp;                  // (1,1)
  return joint;
}

double pair_numerator_prob(const JointTable& joint) {
  const double denom = joint[0] + joint[1];
  if (denom <= 0.0)
    throw DataError("pair numerator undefined: p~(0,0) + p~(0,1) is zero");
  return joint[1] / denom;
}

double pair_weight(int a_j, int a_jp, double denom, const JointTable& joint) {
  if (!(denom > 0.0 && denom < 1.0))
    throw DataError("pair randomization probability out of open interval");
  const double num = joint[(a_j != 0 ? 2 : 0) + (a_jp != 0 ? 1 : 0)];
  if (!(num > 0.0 && num < 1.0))
    throw DataError("pair numerator probability out of open interval");
  return num / denom;
}

NumeratorSpec NumeratorSpec::constant(double ptilde) {
  if (!(ptilde > 0.0 && ptilde < 1.0))
    throw ConfigError("numerator constant must be in (0,1)");
  NumeratorSpec spec;
  spec.kind = Kind::constant;
  spec.value = ptilde;
  return spec;
}

}  // namespace cemee
