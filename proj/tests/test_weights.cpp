#include <doctest.h>

#include <cmath>
#include <vector>

#include "cemee/errors.hpp"
#include "cemee/rng.hpp"
#include "cemee/weights.hpp"

using namespace cemee;

TEST_CASE("marginal weight equals the probability ratio") {
  CHECK(marginal_weight(1, 0.2, 0.2) == 1.0);
  // numerator 0.8, denominator 0.625
  CHECK(std::fabs(marginal_weight(0, 0.375, 0.2) - 1.28) < 1e-12);
  CHECK(std::fabs(marginal_weight(1, 0.5, 0.2) - 0.4) < 1e-15);
  CHECK_THROWS_AS(marginal_weight(1, 0.0, 0.2), DataError);
  CHECK_THROWS_AS(marginal_weight(0, 1.0, 0.2), DataError);
  CHECK_THROWS_AS(marginal_weight(1, 0.5, 1.0), DataError);
}

TEST_CASE("marginal weight integrates to one over the randomization") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const double p = 0.01 + 0.98 * rng.uniform();
    const double pt = 0.01 + 0.98 * rng.uniform();
    const double mean = p * marginal_weight(1, p, pt) + (1 - p) * marginal_weight(0, p, pt);
    CHECK(std::fabs(mean - 1.0) < 1e-14);
  }
}

TEST_CASE("lag weight is exactly one for an empty window") {
  CHECK(lag_weight({}, {}, ReferencePolicy::always_treat()) == 1.0);
  CHECK(lag_weight({}, {}, ReferencePolicy::observed()) == 1.0);
}

TEST_CASE("observed-distribution policy weight is identically one") {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a, prob;
    for (int u = 0; u < 1 + rng.uniform_int(4); ++u) {
      a.push_back(rng.bernoulli(0.5));
      prob.push_back(0.05 + 0.9 * rng.uniform());
    }
    CHECK(lag_weight(a, prob, ReferencePolicy::observed()) == 1.0);
  }
}

TEST_CASE("sequential-treatment policy weight") {
  const std::vector<double> a1 = {1.0};
  const std::vector<double> p1 = {0.2};
  CHECK(std::fabs(lag_weight(a1, p1, ReferencePolicy::always_treat()) - 5.0) < 1e-14);

  const std::vector<double> a0 = {0.0};
  const std::vector<double> p0 = {0.8};  // P(A=0)=0.8 realized
  CHECK(lag_weight(a0, p0, ReferencePolicy::always_treat()) == 0.0);
  CHECK(std::fabs(lag_weight(a0, p0, ReferencePolicy::always_control()) - 1.25) <
        1e-14);
  CHECK(lag_weight(a1, p1, ReferencePolicy::always_control()) == 0.0);
}

TEST_CASE("fixed-probability policy multiplies bernoulli ratios") {
  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> p = {0.25, 0.7};  // realized-treatment probabilities
  const double expected = (0.3 / 0.25) * (0.7 / 0.7);
  CHECK(std::fabs(lag_weight(a, p, ReferencePolicy::fixed(0.3)) - expected) < 1e-14);
  CHECK_THROWS_AS(ReferencePolicy::fixed(1.5), ConfigError);
}

TEST_CASE("policy parsing round-trips") {
  CHECK(ReferencePolicy::parse("otd").kind == ReferencePolicy::Kind::observed);
  CHECK(ReferencePolicy::parse("st").kind == ReferencePolicy::Kind::always_treat);
  CHECK(ReferencePolicy::parse("sc").kind == ReferencePolicy::Kind::always_control);
  const auto fixed = ReferencePolicy::parse("fixed:0.35");
  CHECK(fixed.kind == ReferencePolicy::Kind::fixed_probability);
  CHECK(fixed.pi == 0.35);
  CHECK_THROWS_AS(ReferencePolicy::parse("nope"), ConfigError);
  CHECK(ReferencePolicy::parse("st").to_string() == "st");
}

TEST_CASE("pair numerator probability from a joint table") {
  // independent marginals 0.2: p~(0,1) = 0.16, p~(0,0) = 0.64
  const JointTable independent = joint_from_marginals(0.2, 0.2);
  CHECK(std::fabs(independent[1] - 0.16) < 1e-15);
  CHECK(std::fabs(independent[0] - 0.64) < 1e-15);
  CHECK(std::fabs(pair_numerator_prob(independent) - 0.2) < 1e-15);

  const JointTable joint = {0.5, 0.25, 0.15, 0.1};
  CHECK(std::fabs(pair_numerator_prob(joint) - 1.0 / 3.0) < 1e-15);

  const JointTable degenerate = {0.0, 0.0, 0.5, 0.5};
  CHECK_THROWS_AS(pair_numerator_prob(degenerate), DataError);
}

TEST_CASE("pair weight is the joint ratio") {
  CHECK(std::fabs(pair_weight(0, 1, 0.16, joint_from_marginals(0.2, 0.2)) - 1.0) <
        1e-14);
  // p = 0.5 each independent, numerator marginals 0.2: (0.8*0.2)/(0.25)
  CHECK(std::fabs(pair_weight(0, 1, 0.25, joint_from_marginals(0.2, 0.2)) - 0.64) <
        1e-14);
  JointTable table{};
  table[1] = 0.16;
  table[0] = 0.5;
  table[2] = 0.17;
  table[3] = 0.17;
  CHECK(std::fabs(pair_weight(0, 1, 0.25, table) - 0.64) < 1e-14);
  CHECK_THROWS_AS(pair_weight(0, 1, 0.0, table), DataError);
}

TEST_CASE("independent randomization factorizes the pair weight") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const double pj = 0.05 + 0.9 * rng.uniform();
    const double pjp = 0.05 + 0.9 * rng.uniform();
    const double ptj = 0.05 + 0.9 * rng.uniform();
    const double ptjp = 0.05 + 0.9 * rng.uniform();
    const int aj = rng.bernoulli(0.5);
    const int ajp = rng.bernoulli(0.5);
    const double denom = (aj ? pj : 1 - pj) * (ajp ? pjp : 1 - pjp);
    const double product =
        marginal_weight(aj, pj, ptj) * marginal_weight(ajp, pjp, ptjp);
    const double paired = pair_weight(aj, ajp, denom, joint_from_marginals(ptj, ptjp));
    CHECK(std::fabs(paired - product) < 1e-14 * std::max(1.0, product));
  }
}
