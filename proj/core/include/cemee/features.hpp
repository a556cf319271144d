#pragma once

#include <string>
#include <vector>

#include "cemee/panel.hpp"

namespace cemee {

struct FeatureTerm {
  enum class Kind { intercept, column, time_index, scaled_column };
  Kind kind = Kind::intercept;
  std::string column;
  double factor = 1.0;

  static FeatureTerm intercept() { return {}; }
  static FeatureTerm col(std::string name) {
    return {Kind::column, std::move(name), 1.0};
  }
  static FeatureTerm time_index() { return {Kind::time_index, "", 1.0}; }
  static FeatureTerm scaled(std::string name, double factor) {
    return {Kind::scaled_column, std::move(name), factor};
  }
  std::string name() const;
};

/// Declarative feature map evaluated per (individual, t) design row. Used for
/// both the effect moderators (dimension q) and the control model (dimension p).
struct FeatureSpec {
  std::vector<FeatureTerm> terms;

  int dimension() const { return static_cast<int>(terms.size()); }
  void validate_against(const ClusterPanel& panel) const;

  static FeatureSpec intercept_only() { return {{FeatureTerm::intercept()}}; }
};

enum class LagKind { shifted_proximal, explicit_column };

struct LagSpec {
  LagKind kind = LagKind::shifted_proximal;
  std::string column;  // for explicit_column

  static LagSpec shifted() { return {}; }
  static LagSpec from_column(std::string name) {
    return {LagKind::explicit_column, std::move(name)};
  }
};

/// Lagged outcomes Y_{t,delta}, defined for t = 1..T-delta+1 per individual,
/// indexed [cluster][member][t-1].
struct LaggedOutcome {
  int delta = 1;
  std::vector<std::vector<std::vector<int>>> values;
};

LaggedOutcome lagged_outcome(const ClusterPanel& panel, int delta,
                             const LagSpec& spec = {});

/// Flattened per-(individual, t) rows feeding the estimating equations.
/// Ordering is (cluster, individual, t) as normalized in the panel, which
/// pins the summation order used everywhere downstream.
struct DesignRows {
  int q = 0;      // moderator dimension
  int p = 0;      // control dimension
  int delta = 1;
  int rows_per_individual = 0;  // T - delta + 1

  struct Individual {
    int cluster_index = 0;
    int first_row = 0;
    int n_rows = 0;
    std::string cluster_id;
    std::string individual_id;
  };
  std::vector<Individual> individuals;
  std::vector<int> cluster_begin;  // size M+1; individuals [begin[m], begin[m+1])

  // Row-major flat storage.
  std::vector<int> t;
  std::vector<double> a;
  std::vector<double> prob;
  std::vector<double> avail;
  std::vector<double> y;      // Y_{t,delta}
  std::vector<double> f;      // n_rows x q
  std::vector<double> g;      // n_rows x p
  std::vector<double> win_a;  // n_rows x (delta-1): treatments in the lag window
  std::vector<double> win_p;  // n_rows x (delta-1): P(A=1) at those decisions

  int n_rows() const { return static_cast<int>(t.size()); }
  int n_clusters() const { return static_cast<int>(cluster_begin.size()) - 1; }
  const double* f_row(int r) const { return f.data() + static_cast<std::size_t>(r) * q; }
  const double* g_row(int r) const { return g.data() + static_cast<std::size_t>(r) * p; }
};

DesignRows build_design(const ClusterPanel& panel, const FeatureSpec& moderator,
                        const FeatureSpec& control, int delta,
                        const LagSpec& lag = {});

}  // namespace cemee
