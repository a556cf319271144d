#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cemee/panel.hpp"
#include "cemee/rng.hpp"
#include "cemee/weights.hpp"

namespace cemee {

struct TruncatedNormalParams {
  double mu = 0.0;
  double sigma = 0.5;
  double lower = -1.0;
  double upper = 1.0;
};

enum class Scenario { I, II, III, IV, LagI, LagII, LagIII };

bool is_lag_scenario(Scenario s);
Scenario scenario_from_string(const std::string& name);
std::string scenario_to_string(Scenario s);

/// Generative-model selector. sigma == 0 disables the cluster random effect
/// (used by coverage sweeps); otherwise the effect is a truncated-normal draw
/// shifted so that E[exp(effect)] = 1.
struct ScenarioConfig {
  Scenario scenario = Scenario::I;
  int clusters = 25;
  int cluster_size = 5;
  int horizon = 30;
  double p_rand = 0.2;
  TruncatedNormalParams random_effect{0.0, 0.5, -1.0, 1.0};
  double beta20 = -0.1;  // Scenario IV pairwise effect
  std::uint64_t seed = 1;

  /// Scenario defaults; the lag scenarios truncate the random effect at +-0.8.
  static ScenarioConfig for_scenario(Scenario s);
  void validate() const;
};

/// Three-state chain: stay with probability 0.5, move to either other state
/// with probability 0.25; initial state uniform (the stationary distribution).
std::vector<int> sample_markov_states(int horizon, Rng& rng);
int markov_next(int z, Rng& rng);

/// Inverse-CDF sampler restricted to [lower, upper].
double sample_truncated_normal(const TruncatedNormalParams& params, Rng& rng);

/// Additive constant c with E[exp(e + c)] = 1 for e ~ TN(0, sigma, [a,b]).
/// Requires mu = 0.
double shift_constant(const TruncatedNormalParams& params);

/// Scenario IV scale gamma = [p e^{beta20} + (1-p)]^{m-2}, m = cluster size.
double indirect_normalizer(double p, double beta20, int m);

/// Treatment-free base rate by state: 0.1, 0.25, 0.2 for z = 0, 1, 2.
double base_rate(int z);

/// Conditional mean of the proximal outcome given state, cluster aggregates,
/// treatment and the cluster random effect.
double proximal_mean(const ScenarioConfig& config, int z, double zbar, int a,
                     int n_treated_others, double effect);

/// Conditional mean of the two-step-lagged outcome given the pair of states
/// and treatments at t and t+1.
double lag2_mean(const ScenarioConfig& config, int a_t, int z_t, double zbar_t,
                 int a_next, int z_next, double effect);

/// Deterministic, substream-seeded panel generation. State columns emitted:
/// Z, Z1, Z2 (state indicators), Zbar, n_treated_others, and Ylag2 for
/// the lag scenarios. Throws NumericError if any Bernoulli mean leaves (0,1).
ClusterPanel generate_scenario(const ScenarioConfig& config);

/// True fully marginal effect for the scenario. Closed form for Scenarios
/// I/II, exact beta20 for Scenario IV, Monte Carlo elsewhere (the reference
/// policy matters only for the lag scenarios).
double true_marginal_effect(const ScenarioConfig& config,
                            const ReferencePolicy& policy = {},
                            long draws = 1000000, std::uint64_t seed = 0xC0FFEE);

namespace column {
inline constexpr const char* state = "Z";
inline constexpr const char* state_is1 = "Z1";
inline constexpr const char* state_is2 = "Z2";
inline constexpr const char* cluster_mean = "Zbar";
inline constexpr const char* treated_others = "n_treated_others";
inline constexpr const char* lag2_outcome = "Ylag2";
}  // namespace column

}  // namespace cemee
