#include "cemee/features.hpp"

#include <sstream>

#include "cemee/errors.hpp"

namespace cemee {

std::string FeatureTerm::name() const {
  switch (kind) {
    case Kind::intercept:
      return "intercept";
    case Kind::column:
      return column;
    case Kind::time_index:
      return "t";
    case Kind::scaled_column: {
      std::ostringstream os;
      os << factor << "*" << column;
      return os.str();
    }
  }
  return "?";
}

void FeatureSpec::validate_against(const ClusterPanel& panel) const {
  if (terms.empty()) throw DataError("feature spec must have at least one term");
  for (const auto& term : terms) {
    if (term.kind == FeatureTerm::Kind::column ||
        term.kind == FeatureTerm::Kind::scaled_column) {
      if (panel.column_index(term.column) < 0)
        throw DataError("unknown column '" + term.column + "' in feature spec");
    }
  }
}

namespace {

double eval_term(const FeatureTerm& term, const DecisionRow& row, int column_index) {
  switch (term.kind) {
    case FeatureTerm::Kind::intercept:
      return 1.0;
    case FeatureTerm::Kind::time_index:
      return static_cast<double>(row.t);
    case FeatureTerm::Kind::column:
      return row.state[column_index];
    case FeatureTerm::Kind::scaled_column:
      return term.factor * row.state[column_index];
  }
  return 0.0;
}

std::vector<int> resolve_columns(const FeatureSpec& spec, const ClusterPanel& panel) {
  std::vector<int> idx(spec.terms.size(), -1);
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& term = spec.terms[i];
    if (term.kind == FeatureTerm::Kind::column ||
        term.kind == FeatureTerm::Kind::scaled_column)
      idx[i] = panel.column_index(term.column);
  }
  return idx;
}

}  // namespace

LaggedOutcome lagged_outcome(const ClusterPanel& panel, int delta, const LagSpec& spec) {
  if (delta < 1) throw DataError("delta must be >= 1");
  const int horizon = panel.horizon();
  if (delta > horizon)
    throw DataError("delta " + std::to_string(delta) + " exceeds horizon " +
                    std::to_string(horizon));

  int column = -1;
  if (spec.kind == LagKind::explicit_column) {
    column = panel.column_index(spec.column);
    if (column < 0) throw DataError("unknown lag outcome column '" + spec.column + "'");
  }

  LaggedOutcome out;
  out.delta = delta;
  out.values.reserve(panel.clusters().size());
  const int n_lagged = horizon - delta + 1;
  for (const auto& cluster : panel.clusters()) {
    std::vector<std::vector<int>> per_member;
    per_member.reserve(cluster.members.size());
    for (const auto& member : cluster.members) {
      std::vector<int> vals(n_lagged);
      for (int i = 0; i < n_lagged; ++i) {
        if (spec.kind == LagKind::shifted_proximal) {
          // Y_{t,delta} is the proximal outcome observed at decision t+delta-1.
          vals[i] = member.rows[i + delta - 1].y;
        } else {
          const double v = member.rows[i].state[column];
          if (v != 0.0 && v != 1.0)
            throw DataError("non-binary lag outcome in column '" + spec.column +
                            "' (cluster=" + cluster.id + " individual=" + member.id +
                            " t=" + std::to_string(i + 1) + ")");
          vals[i] = static_cast<int>(v);
        }
      }
      per_member.push_back(std::move(vals));
    }
    out.values.push_back(std::move(per_member));
  }
  return out;
}

DesignRows build_design(const ClusterPanel& panel, const FeatureSpec& moderator,
                        const FeatureSpec& control, int delta, const LagSpec& lag) {
  moderator.validate_against(panel);
  control.validate_against(panel);
  const LaggedOutcome lagged = lagged_outcome(panel, delta, lag);

  const auto f_cols = resolve_columns(moderator, panel);
  const auto g_cols = resolve_columns(control, panel);

  DesignRows design;
  design.q = moderator.dimension();
  design.p = control.dimension();
  design.delta = delta;
  design.rows_per_individual = panel.horizon() - delta + 1;

  const int window = delta - 1;
  int row = 0;
  for (int m = 0; m < panel.cluster_count(); ++m) {
    design.cluster_begin.push_back(static_cast<int>(design.individuals.size()));
    const auto& cluster = panel.clusters()[m];
    for (int j = 0; j < cluster.size(); ++j) {
      const auto& member = cluster.members[j];
      design.individuals.push_back(
          {m, row, design.rows_per_individual, cluster.id, member.id});
      for (int i = 0; i < design.rows_per_individual; ++i, ++row) {
        const auto& r = member.rows[i];
        design.t.push_back(r.t);
        design.a.push_back(static_cast<double>(r.a));
        design.prob.push_back(r.prob_a);
        design.avail.push_back(static_cast<double>(r.avail));
        design.y.push_back(static_cast<double>(lagged.values[m][j][i]));
        for (std::size_t k = 0; k < moderator.terms.size(); ++k)
          design.f.push_back(eval_term(moderator.terms[k], r, f_cols[k]));
        for (std::size_t k = 0; k < control.terms.size(); ++k)
          design.g.push_back(eval_term(control.terms[k], r, g_cols[k]));
        for (int u = 0; u < window; ++u) {
          const auto& ru = member.rows[i + 1 + u];
          design.win_a.push_back(static_cast<double>(ru.a));
          design.win_p.push_back(ru.prob_a);
        }
      }
    }
  }
  design.cluster_begin.push_back(static_cast<int>(design.individuals.size()));
  return design;
}

}  // namespace cemee
