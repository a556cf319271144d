#include "cemee/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cemee/errors.hpp"
#include "cemee/special_functions.hpp"

namespace cemee {

bool is_lag_scenario(Scenario s) {
  return s == Scenario::LagI || s == Scenario::LagII || s == Scenario::LagIII;
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "I") return Scenario::I;
  if (name == "II") return Scenario::II;
  if (name == "III") return Scenario::III;
  if (name == "IV") return Scenario::IV;
  if (name == "LAG-I") return Scenario::LagI;
  if (name == "LAG-II") return Scenario::LagII;
  if (name == "LAG-III") return Scenario::LagIII;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string scenario_to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
    case Scenario::IV: return "IV";
    case Scenario::LagI: return "LAG-I";
    case Scenario::LagII: return "LAG-II";
    case Scenario::LagIII: return "LAG-III";
  }
  return "?";
}

ScenarioConfig ScenarioConfig::for_scenario(Scenario s) {
  ScenarioConfig config;
  config.scenario = s;
  if (is_lag_scenario(s)) {
    config.random_effect.lower = -0.8;
    config.random_effect.upper = 0.8;
  }
  return config;
}

void ScenarioConfig::validate() const {
  if (clusters < 1 || cluster_size < 1 || horizon < 1)
    throw ConfigError("clusters, cluster_size and horizon must all be >= 1");
  if (!(p_rand > 0.0 && p_rand < 1.0))
    throw ConfigError("p_rand must be in (0,1)");
  if (random_effect.sigma < 0.0) throw ConfigError("random effect sigma must be >= 0");
  if (random_effect.sigma > 0.0 && !(random_effect.lower < random_effect.upper))
    throw ConfigError("random effect requires lower < upper");
  if (scenario == Scenario::IV && cluster_size < 2)
    throw ConfigError("scenario IV needs cluster_size >= 2");
  if (is_lag_scenario(scenario) && horizon < 2)
    throw ConfigError("lag scenarios need horizon >= 2");
}

int markov_next(int z, Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.5) return z;
  // move to one of the two other states, each with probability 0.25
  const int other = u < 0.75 ? 0 : 1;
  switch (z) {
    case 0: return other == 0 ? 1 : 2;
    case 1: return other == 0 ? 0 : 2;
    default: return other == 0 ? 0 : 1;
  }
}

std::vector<int> sample_markov_states(int horizon, Rng& rng) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  std::vector<int> z(horizon);
  z[0] = rng.uniform_int(3);
  for (int t = 1; t < horizon; ++t) z[t] = markov_next(z[t - 1], rng);
  return z;
}

double sample_truncated_normal(const TruncatedNormalParams& params, Rng& rng) {
  if (!(params.sigma > 0.0)) throw ConfigError("truncated normal needs sigma > 0");
  if (!(params.lower < params.upper))
    throw ConfigError("truncated normal needs lower < upper");
  const double alpha = (params.lower - params.mu) / params.sigma;
  const double beta = (params.upper - params.mu) / params.sigma;
  const double lo = normal_cdf(alpha);
  const double hi = normal_cdf(beta);
  const double u = lo + rng.uniform() * (hi - lo);
  return normal_quantile(u) * params.sigma + params.mu;
}

double shift_constant(const TruncatedNormalParams& params) {
  if (params.mu != 0.0) throw ConfigError("shift constant defined for mu = 0 only");
  if (!(params.sigma > 0.0)) throw ConfigError("shift constant needs sigma > 0");
  const double s = params.sigma;
  const double a = params.lower;
  const double b = params.upper;
  const double num = normal_cdf(b / s - s) - normal_cdf(a / s - s);
  const double den = normal_cdf(b / s) - normal_cdf(a / s);
  return -0.5 * s * s - std::log(num / den);
}

double indirect_normalizer(double p, double beta20, int m) {
  if (m < 2) throw ConfigError("indirect normalizer needs cluster size >= 2");
  return std::pow(p * std::exp(beta20) + (1.0 - p), m - 2);
}

double base_rate(int z) {
  switch (z) {
    case 0: return 0.1;
    case 1: return 0.25;
    default: return 0.2;
  }
}

double proximal_mean(const ScenarioConfig& config, int z, double zbar, int a,
                     int n_treated_others, double effect) {
  const double c = base_rate(z);
  switch (config.scenario) {
    case Scenario::I:
      return c * std::exp(a * (0.1 + 0.3 * z) + effect);
    case Scenario::II:
      return c * std::exp(a * (0.1 + 0.3 * z + effect));
    case Scenario::III:
      return c * std::exp(a * (0.1 + 0.3 * zbar + effect));
    case Scenario::IV: {
      const double gamma = indirect_normalizer(config.p_rand, config.beta20,
                                               config.cluster_size);
      const double te = config.beta20 * n_treated_others;
      return c * std::exp(a * (0.1 + 0.3 * zbar + effect) + te) / gamma;
    }
    default:
      // Lag scenarios: the proximal outcome follows the base model; the
      // estimand of interest lives in the Ylag2 column.
      return c * std::exp(a * (0.1 + 0.3 * z));
  }
}

double lag2_mean(const ScenarioConfig& config, int a_t, int z_t, double zbar_t,
                 int a_next, int z_next, double effect) {
  const double c = base_rate(z_next);
  const double next_part = a_next * (0.1 + 0.3 * z_next);
  switch (config.scenario) {
    case Scenario::LagI:
      return c * std::exp(a_t * (0.05 + 0.065 * z_t) + next_part + effect);
    case Scenario::LagII:
      return c * std::exp(a_t * (0.05 + 0.065 * z_t + effect) + next_part);
    case Scenario::LagIII:
      return c * std::exp(a_t * (0.05 + 0.065 * zbar_t + effect) + next_part);
    default:
      throw ConfigError("lag2_mean is defined for the lag scenarios only");
  }
}

namespace {

std::string padded_id(const char* prefix, int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%06d", prefix, k);
  return buf;
}

double draw_cluster_effect(const ScenarioConfig& config, int m) {
  if (config.random_effect.sigma == 0.0) return 0.0;
  Rng rng = Rng::stream(config.seed, {stream_tag::cluster_effect,
                                      static_cast<std::uint64_t>(m)});
  return sample_truncated_normal(config.random_effect, rng) +
         shift_constant(config.random_effect);
}

}  // namespace

ClusterPanel generate_scenario(const ScenarioConfig& config) {
  config.validate();
  const int M = config.clusters;
  const int G = config.cluster_size;
  const int T = config.horizon;
  const bool lagged = is_lag_scenario(config.scenario);

  std::vector<std::string> columns = {column::state, column::state_is1,
                                      column::state_is2, column::cluster_mean,
                                      column::treated_others};
  if (lagged) columns.push_back(column::lag2_outcome);

  std::vector<Cluster> clusters(M);
  for (int m = 0; m < M; ++m) {
    Cluster& cluster = clusters[m];
    cluster.id = padded_id("c", m + 1);
    cluster.members.resize(G);
    const double effect = draw_cluster_effect(config, m);

    std::vector<std::vector<int>> z(G);
    std::vector<std::vector<int>> a(G);
    for (int j = 0; j < G; ++j) {
      const auto mj = static_cast<std::uint64_t>(m) << 32 | static_cast<std::uint64_t>(j);
      Rng state_rng = Rng::stream(config.seed, {stream_tag::states, mj});
      Rng treat_rng = Rng::stream(config.seed, {stream_tag::treatments, mj});
      z[j] = sample_markov_states(T, state_rng);
      a[j].resize(T);
      for (int t = 0; t < T; ++t) a[j][t] = treat_rng.bernoulli(config.p_rand);
    }

    std::vector<double> zbar(T, 0.0);
    std::vector<int> total_treated(T, 0);
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < G; ++j) {
        zbar[t] += z[j][t];
        total_treated[t] += a[j][t];
      }
      zbar[t] /= G;
    }

    for (int j = 0; j < G; ++j) {
      const auto mj = static_cast<std::uint64_t>(m) << 32 | static_cast<std::uint64_t>(j);
      Rng outcome_rng = Rng::stream(config.seed, {stream_tag::outcomes, mj});
      Rng lag_rng = Rng::stream(config.seed, {stream_tag::lag_outcomes, mj});

      IndividualSeries& member = cluster.members[j];
      member.id = padded_id("i", j + 1);
      member.rows.resize(T);
      for (int t = 0; t < T; ++t) {
        DecisionRow& row = member.rows[t];
        row.t = t + 1;
        row.a = a[j][t];
        row.prob_a = config.p_rand;
        row.avail = 1;
        const int n_others = total_treated[t] - a[j][t];

        const double mean =
            proximal_mean(config, z[j][t], zbar[t], a[j][t], n_others, effect);
        if (!(mean > 0.0 && mean < 1.0)) {
          std::ostringstream os;
          os << "scenario " << scenario_to_string(config.scenario)
             << ": outcome mean " << mean << " outside (0,1) at cluster="
             << cluster.id << " individual=" << member.id << " t=" << t + 1;
          throw NumericError(os.str());
        }
        row.y = outcome_rng.bernoulli(mean);

        row.state = {static_cast<double>(z[j][t]),
                     z[j][t] == 1 ? 1.0 : 0.0,
                     z[j][t] == 2 ? 1.0 : 0.0,
                     zbar[t],
                     static_cast<double>(n_others)};
        if (lagged) {
          double ylag = 0.0;  // undefined past T-1; never used downstream
          if (t + 1 < T) {
            const double lag_mean = lag2_mean(config, a[j][t], z[j][t], zbar[t],
                                              a[j][t + 1], z[j][t + 1], effect);
            if (!(lag_mean > 0.0 && lag_mean < 1.0)) {
              std::ostringstream os;
              os << "scenario " << scenario_to_string(config.scenario)
                 << ": lag outcome mean " << lag_mean
                 << " outside (0,1) at cluster=" << cluster.id
                 << " individual=" << member.id << " t=" << t + 1;
              throw NumericError(os.str());
            }
            ylag = lag_rng.bernoulli(lag_mean);
          }
          row.state.push_back(ylag);
        }
      }
    }
  }
  return ClusterPanel(std::move(clusters), std::move(columns));
}

namespace {

// log of the ratio of the average conditional means under a=1 versus a=0,
// states at their stationary (uniform) law.
double closed_form_direct_truth() {
  double num = 0.0, den = 0.0;
  for (int z = 0; z < 3; ++z) {
    num += base_rate(z) * std::exp(0.1 + 0.3 * z);
    den += base_rate(z);
  }
  return std::log(num / den);
}

double mc_truth_scenario_iii(const ScenarioConfig& config, long draws, Rng& rng) {
  const int G = config.cluster_size;
  double num = 0.0, den = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double effect = config.random_effect.sigma > 0.0
                              ? sample_truncated_normal(config.random_effect, rng) +
                                    shift_constant(config.random_effect)
                              : 0.0;
    double zsum = 0.0;
    int z0 = 0;
    for (int j = 0; j < G; ++j) {
      const int z = rng.uniform_int(3);
      if (j == 0) z0 = z;
      zsum += z;
    }
    const double zbar = zsum / G;
    num += base_rate(z0) * std::exp(0.1 + 0.3 * zbar + effect);
    den += base_rate(z0);
  }
  return std::log(num / den);
}

double mc_truth_lag(const ScenarioConfig& config, const ReferencePolicy& policy,
                    long draws, Rng& rng) {
  const int G = config.cluster_size;
  const double p = config.p_rand;
  double num = 0.0, den = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double effect = config.random_effect.sigma > 0.0
                              ? sample_truncated_normal(config.random_effect, rng) +
                                    shift_constant(config.random_effect)
                              : 0.0;
    int z_t = 0;
    double zbar_t = 0.0;
    if (config.scenario == Scenario::LagIII) {
      double zsum = 0.0;
      for (int j = 0; j < G; ++j) {
        const int z = rng.uniform_int(3);
        if (j == 0) z_t = z;
        zsum += z;
      }
      zbar_t = zsum / G;
    } else {
      z_t = rng.uniform_int(3);
      zbar_t = z_t;
    }
    const int z_next = markov_next(z_t, rng);

    auto mean_under = [&](int a_t, int a_next) {
      return lag2_mean(config, a_t, z_t, zbar_t, a_next, z_next, effect);
    };
    switch (policy.kind) {
      case ReferencePolicy::Kind::always_treat:
        num += mean_under(1, 1);
        den += mean_under(0, 1);
        break;
      case ReferencePolicy::Kind::always_control:
        num += mean_under(1, 0);
        den += mean_under(0, 0);
        break;
      case ReferencePolicy::Kind::fixed_probability:
        num += policy.pi * mean_under(1, 1) + (1.0 - policy.pi) * mean_under(1, 0);
        den += policy.pi * mean_under(0, 1) + (1.0 - policy.pi) * mean_under(0, 0);
        break;
      default:  // observed distribution
        num += p * mean_under(1, 1) + (1.0 - p) * mean_under(1, 0);
        den += p * mean_under(0, 1) + (1.0 - p) * mean_under(0, 0);
        break;
    }
  }
  return std::log(num / den);
}

}  // namespace

double true_marginal_effect(const ScenarioConfig& config, const ReferencePolicy& policy,
                            long draws, std::uint64_t seed) {
  config.validate();
  if (draws < 1) throw ConfigError("truth oracle needs draws >= 1");
  switch (config.scenario) {
    case Scenario::I:
    case Scenario::II:
      return closed_form_direct_truth();
    case Scenario::IV:
      return config.beta20;
    case Scenario::III: {
      Rng rng = Rng::stream(seed, {stream_tag::truth, 3});
      return mc_truth_scenario_iii(config, draws, rng);
    }
    default: {
      Rng rng = Rng::stream(seed, {stream_tag::truth, 7});
      return mc_truth_lag(config, policy, draws, rng);
    }
  }
}

}  // namespace cemee
