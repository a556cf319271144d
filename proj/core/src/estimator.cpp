#include "cemee/estimator.hpp"

#include <cmath>
#include <sstream>

#include "cemee/errors.hpp"

namespace cemee {

namespace {

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

constexpr double kMaxExponent = 700.0;  // exp() overflow guard

std::string row_label(const DesignRows& design, const DesignRows::Individual& ind,
                      int row) {
  std::ostringstream os;
  os << "cluster=" << ind.cluster_id << " individual=" << ind.individual_id
     << " t=" << design.t[row];
  return os.str();
}

// Everything about one estimating-equation evaluation that does not depend on
// theta: resolved numerator probabilities, lag-window weights, unit layout.
class Evaluator {
 public:
  Evaluator(const DesignRows& design, const EstimatorOptions& options,
            const std::vector<double>* numerator_column)
      : design_(design), options_(options) {
    const int n = design.n_rows();
    dim_ = design.p + design.q;
    indirect_ = options.estimator == EstimatorKind::cemee_indirect;
    per_individual_units_ = options.estimator == EstimatorKind::emee;

    // Resolve the numerator p~(1|S) per design row.
    ptilde_.resize(n);
    switch (options.numerator.kind) {
      case NumeratorSpec::Kind::constant:
        std::fill(ptilde_.begin(), ptilde_.end(), options.numerator.value);
        break;
      case NumeratorSpec::Kind::column: {
        if (numerator_column == nullptr)
          throw ConfigError("column numerator requires fitting from a panel");
        ptilde_ = *numerator_column;
        break;
      }
      case NumeratorSpec::Kind::empirical: {
        double treated = 0.0, total = 0.0;
        for (int r = 0; r < n; ++r) {
          if (design.avail[r] == 0.0) continue;
          treated += design.a[r];
          total += 1.0;
        }
        if (total == 0.0) throw DataError("no available rows in design");
        const double frac = treated / total;
        if (!(frac > 0.0 && frac < 1.0))
          throw DataError("empirical treatment fraction at boundary");
        std::fill(ptilde_.begin(), ptilde_.end(), frac);
        break;
      }
    }
    for (int r = 0; r < n; ++r)
      if (!(ptilde_[r] > 0.0 && ptilde_[r] < 1.0))
        throw DataError("numerator probability out of open interval");

    if (options.numerator.has_joint_table) {
      joint_ = options.numerator.joint;
      pstar_const_ = pair_numerator_prob(joint_);
      use_joint_table_ = true;
    }

    // Lag-window weights per row.
    wlag_.assign(n, 1.0);
    const int window = design.delta - 1;
    if (window > 0) {
      std::vector<double> realized(window);
      for (int r = 0; r < n; ++r) {
        const double* wa = design.win_a.data() + static_cast<std::size_t>(r) * window;
        const double* wp = design.win_p.data() + static_cast<std::size_t>(r) * window;
        for (int u = 0; u < window; ++u)
          realized[u] = wa[u] != 0.0 ? wp[u] : 1.0 - wp[u];
        wlag_[r] = lag_weight({wa, static_cast<std::size_t>(window)},
                              {realized.data(), static_cast<std::size_t>(window)},
                              options.policy);
      }
    }

    // Unit layout.
    if (per_individual_units_) {
      for (const auto& ind : design.individuals)
        unit_labels_.push_back(ind.cluster_id + "/" + ind.individual_id);
      n_units_ = static_cast<int>(design.individuals.size());
    } else if (!indirect_) {
      for (int m = 0; m < design.n_clusters(); ++m)
        unit_labels_.push_back(cluster_id(m));
      n_units_ = design.n_clusters();
    } else {
      for (int m = 0; m < design.n_clusters(); ++m) {
        if (cluster_size(m) >= 2)
          unit_labels_.push_back(cluster_id(m));
        else
          ++skipped_singletons_;
      }
      n_units_ = static_cast<int>(unit_labels_.size());
      if (n_units_ == 0)
        throw NumericError("no eligible pairs: every cluster has size 1");
    }

    check_identification();
  }

  int n_units() const { return n_units_; }
  int dim() const { return dim_; }
  int skipped_singletons() const { return skipped_singletons_; }
  const std::vector<std::string>& unit_labels() const { return unit_labels_; }

  struct Output {
    bool finite = true;
    std::string offending_row;
    Eigen::VectorXd value;
    std::vector<Eigen::VectorXd> unit_values;
    Eigen::MatrixXd jacobian;
  };

  Output evaluate(const Eigen::VectorXd& theta, bool want_jacobian,
                  std::vector<UnitBlock>* blocks = nullptr) const {
    return indirect_ ? evaluate_indirect(theta, want_jacobian, blocks)
                     : evaluate_direct(theta, want_jacobian, blocks);
  }

 private:
  int cluster_size(int m) const {
    return design_.cluster_begin[m + 1] - design_.cluster_begin[m];
  }
  std::string cluster_id(int m) const {
    return design_.individuals[design_.cluster_begin[m]].cluster_id;
  }

  double row_weight(int r) const {
    return design_.avail[r] *
           marginal_weight(design_.a[r] != 0.0 ? 1 : 0, design_.prob[r], ptilde_[r]) *
           wlag_[r];
  }

  double pair_row_weight(int r, int rp, int aj, int ajp) const {
    const double denom = (aj != 0 ? design_.prob[r] : 1.0 - design_.prob[r]) *
                         (ajp != 0 ? design_.prob[rp] : 1.0 - design_.prob[rp]);
    const JointTable joint =
        use_joint_table_ ? joint_ : joint_from_marginals(ptilde_[r], ptilde_[rp]);
    return design_.avail[r] * design_.avail[rp] *
           pair_weight(aj, ajp, denom, joint) * wlag_[r] * wlag_[rp];
  }

  double pair_pstar(int rp) const {
    return use_joint_table_ ? pstar_const_ : ptilde_[rp];
  }

  // Weighted outcome mass must be positive in both contrast arms, otherwise
  // the log-ratio is undefined and the beta block of the system is singular.
  void check_identification() const {
    if (!indirect_) {
      double mass[2] = {0.0, 0.0};
      for (int r = 0; r < design_.n_rows(); ++r)
        mass[design_.a[r] != 0.0 ? 1 : 0] += row_weight(r) * design_.y[r];
      if (!(mass[1] > 0.0))
        throw NumericError("arm A=1 has zero weighted outcome mass");
      if (!(mass[0] > 0.0))
        throw NumericError("arm A=0 has zero weighted outcome mass");
      return;
    }
    double mass01 = 0.0, mass00 = 0.0;
    for (int m = 0; m < design_.n_clusters(); ++m) {
      if (cluster_size(m) < 2) continue;
      const int begin = design_.cluster_begin[m];
      const int end = design_.cluster_begin[m + 1];
      for (int j = begin; j < end; ++j) {
        for (int jp = begin; jp < end; ++jp) {
          if (jp == j) continue;
          const auto& ind = design_.individuals[j];
          const auto& indp = design_.individuals[jp];
          for (int i = 0; i < ind.n_rows; ++i) {
            const int r = ind.first_row + i;
            const int rp = indp.first_row + i;
            if (design_.a[r] != 0.0) continue;
            const int ajp = design_.a[rp] != 0.0 ? 1 : 0;
            const double w = pair_row_weight(r, rp, 0, ajp) * design_.y[r];
            (ajp == 1 ? mass01 : mass00) += w;
          }
        }
      }
    }
    if (!(mass01 > 0.0) || !(mass00 > 0.0))
      throw NumericError(
          "indirect effect unidentified (singular system): zero weighted outcome "
          "mass for pair arm " +
          std::string(mass01 > 0.0 ? "(0,0)" : "(0,1)"));
  }

  // Residuals and exp() terms shared by value and Jacobian.
  bool row_terms(const Eigen::VectorXd& theta, std::vector<double>& eg,
                 std::vector<double>& emf, std::string& offending) const {
    const int n = design_.n_rows();
    const int p = design_.p;
    const int q = design_.q;
    eg.resize(n);
    emf.resize(n);
    for (int r = 0; r < n; ++r) {
      const double* g = design_.g_row(r);
      const double* f = design_.f_row(r);
      double eta_g = 0.0;
      for (int k = 0; k < p; ++k) eta_g += g[k] * theta[k];
      double eta_f = 0.0;
      for (int k = 0; k < q; ++k) eta_f += f[k] * theta[p + k];
      if (std::fabs(eta_g) > kMaxExponent || std::fabs(eta_f) > kMaxExponent ||
          !std::isfinite(eta_g) || !std::isfinite(eta_f)) {
        offending = find_row_label(r);
        return false;
      }
      eg[r] = std::exp(eta_g);
      emf[r] = std::exp(-eta_f);
    }
    return true;
  }

  std::string find_row_label(int row) const {
    for (const auto& ind : design_.individuals)
      if (row >= ind.first_row && row < ind.first_row + ind.n_rows)
        return row_label(design_, ind, row);
    return "row " + std::to_string(row);
  }

  Output evaluate_direct(const Eigen::VectorXd& theta, bool want_jacobian,
                         std::vector<UnitBlock>* blocks) const {
    const int p = design_.p;
    const int q = design_.q;
    const int dim = dim_;
    Output out;
    out.value = Eigen::VectorXd::Zero(dim);
    if (want_jacobian) out.jacobian = Eigen::MatrixXd::Zero(dim, dim);
    out.unit_values.reserve(n_units_);

    std::vector<double> eg, emf;
    if (!row_terms(theta, eg, emf, out.offending_row)) {
      out.finite = false;
      return out;
    }

    std::vector<Kahan> mean_u(dim);
    std::vector<Kahan> mean_j(want_jacobian ? dim * dim : 0);
    std::vector<Kahan> unit_u(dim);
    std::vector<Kahan> unit_j(want_jacobian ? dim * dim : 0);
    std::vector<double> x(dim), dr(dim);

    const int n_clusters = design_.n_clusters();
    for (int m = 0; m < n_clusters; ++m) {
      const int begin = design_.cluster_begin[m];
      const int end = design_.cluster_begin[m + 1];
      if (!per_individual_units_)
        for (auto& acc : unit_u) acc = Kahan{};
      if (!per_individual_units_ && want_jacobian)
        for (auto& acc : unit_j) acc = Kahan{};

      for (int jj = begin; jj < end; ++jj) {
        const auto& ind = design_.individuals[jj];
        if (per_individual_units_) {
          for (auto& acc : unit_u) acc = Kahan{};
          if (want_jacobian)
            for (auto& acc : unit_j) acc = Kahan{};
        }
        UnitBlock block;
        if (blocks != nullptr) {
          block.unit_index = per_individual_units_ ? jj : static_cast<int>(out.unit_values.size());
          block.inv_group = per_individual_units_ ? 1.0 : 1.0 / (end - begin);
          block.x_weighted = Eigen::MatrixXd::Zero(dim, ind.n_rows);
          block.dresid = Eigen::MatrixXd::Zero(ind.n_rows, dim);
          block.resid = Eigen::VectorXd::Zero(ind.n_rows);
          block.label = ind.cluster_id + "/" + ind.individual_id;
        }

        for (int i = 0; i < ind.n_rows; ++i) {
          const int r = ind.first_row + i;
          const double a = design_.a[r];
          const double y = design_.y[r];
          const double w = row_weight(r);
          const double scale = a != 0.0 ? emf[r] : 1.0;
          const double resid = scale * y - eg[r];
          const double* g = design_.g_row(r);
          const double* f = design_.f_row(r);
          const double center = a - ptilde_[r];
          for (int k = 0; k < p; ++k) x[k] = g[k];
          for (int k = 0; k < q; ++k) x[p + k] = center * f[k];

          const double c = w * resid;
          for (int k = 0; k < dim; ++k) unit_u[k].add(c * x[k]);
          if (want_jacobian || blocks != nullptr) {
            for (int k = 0; k < p; ++k) dr[k] = -eg[r] * g[k];
            const double dscale = -a * y * scale;
            for (int k = 0; k < q; ++k) dr[p + k] = dscale * f[k];
            if (want_jacobian)
              for (int k = 0; k < dim; ++k) {
                const double wxk = w * x[k];
                for (int l = 0; l < dim; ++l) unit_j[k * dim + l].add(wxk * dr[l]);
              }
            if (blocks != nullptr) {
              for (int k = 0; k < dim; ++k) {
                block.x_weighted(k, i) = w * x[k];
                block.dresid(i, k) = -dr[k];
              }
              block.resid(i) = resid;
            }
          }
        }

        if (per_individual_units_) {
          flush_unit(out, mean_u, mean_j, unit_u, unit_j, 1.0, want_jacobian);
        }
        if (blocks != nullptr) blocks->push_back(std::move(block));
      }
      if (!per_individual_units_)
        flush_unit(out, mean_u, mean_j, unit_u, unit_j, 1.0 / (end - begin),
                   want_jacobian);
    }

    finalize(out, mean_u, mean_j, want_jacobian);
    return out;
  }

  Output evaluate_indirect(const Eigen::VectorXd& theta, bool want_jacobian,
                           std::vector<UnitBlock>* blocks) const {
    const int p = design_.p;
    const int q = design_.q;
    const int dim = dim_;
    Output out;
    out.value = Eigen::VectorXd::Zero(dim);
    if (want_jacobian) out.jacobian = Eigen::MatrixXd::Zero(dim, dim);
    out.unit_values.reserve(n_units_);

    std::vector<double> eg, emf;
    if (!row_terms(theta, eg, emf, out.offending_row)) {
      out.finite = false;
      return out;
    }

    std::vector<Kahan> mean_u(dim);
    std::vector<Kahan> mean_j(want_jacobian ? dim * dim : 0);
    std::vector<Kahan> unit_u(dim);
    std::vector<Kahan> unit_j(want_jacobian ? dim * dim : 0);
    std::vector<double> x(dim), dr(dim);

    for (int m = 0; m < design_.n_clusters(); ++m) {
      const int begin = design_.cluster_begin[m];
      const int end = design_.cluster_begin[m + 1];
      const int g_size = end - begin;
      if (g_size < 2) continue;
      for (auto& acc : unit_u) acc = Kahan{};
      if (want_jacobian)
        for (auto& acc : unit_j) acc = Kahan{};
      const double inv_pairs = 1.0 / (static_cast<double>(g_size) * (g_size - 1));

      for (int j = begin; j < end; ++j) {
        const auto& ind = design_.individuals[j];
        for (int jp = begin; jp < end; ++jp) {
          if (jp == j) continue;
          const auto& indp = design_.individuals[jp];
          UnitBlock block;
          if (blocks != nullptr) {
            block.unit_index = static_cast<int>(out.unit_values.size());
            block.inv_group = inv_pairs;
            block.x_weighted = Eigen::MatrixXd::Zero(dim, ind.n_rows);
            block.dresid = Eigen::MatrixXd::Zero(ind.n_rows, dim);
            block.resid = Eigen::VectorXd::Zero(ind.n_rows);
            block.label = ind.cluster_id + "/" + ind.individual_id + ":" +
                          indp.individual_id;
          }
          for (int i = 0; i < ind.n_rows; ++i) {
            const int r = ind.first_row + i;
            const int rp = indp.first_row + i;
            const int aj = design_.a[r] != 0.0 ? 1 : 0;
            const int ajp = design_.a[rp] != 0.0 ? 1 : 0;
            const double y = design_.y[r];
            const double w = pair_row_weight(r, rp, aj, ajp);
            const int b = (1 - aj) * ajp;
            const double scale = b != 0 ? emf[r] : 1.0;
            const double resid = scale * y - eg[r];
            const double* g = design_.g_row(r);
            const double* f = design_.f_row(r);
            const double center = (1.0 - aj) * (ajp - pair_pstar(rp));
            for (int k = 0; k < p; ++k) x[k] = g[k];
            for (int k = 0; k < q; ++k) x[p + k] = center * f[k];

            const double c = w * resid;
            for (int k = 0; k < dim; ++k) unit_u[k].add(c * x[k]);
            if (want_jacobian || blocks != nullptr) {
              for (int k = 0; k < p; ++k) dr[k] = -eg[r] * g[k];
              const double dscale = -b * y * scale;
              for (int k = 0; k < q; ++k) dr[p + k] = dscale * f[k];
              if (want_jacobian)
                for (int k = 0; k < dim; ++k) {
                  const double wxk = w * x[k];
                  for (int l = 0; l < dim; ++l) unit_j[k * dim + l].add(wxk * dr[l]);
                }
              if (blocks != nullptr) {
                for (int k = 0; k < dim; ++k) {
                  block.x_weighted(k, i) = w * x[k];
                  block.dresid(i, k) = -dr[k];
                }
                block.resid(i) = resid;
              }
            }
          }
          if (blocks != nullptr) blocks->push_back(std::move(block));
        }
      }
      flush_unit(out, mean_u, mean_j, unit_u, unit_j, inv_pairs, want_jacobian);
    }

    finalize(out, mean_u, mean_j, want_jacobian);
    return out;
  }

  void flush_unit(Output& out, std::vector<Kahan>& mean_u, std::vector<Kahan>& mean_j,
                  const std::vector<Kahan>& unit_u, const std::vector<Kahan>& unit_j,
                  double divisor_scale, bool want_jacobian) const {
    Eigen::VectorXd u(dim_);
    for (int k = 0; k < dim_; ++k) {
      u[k] = unit_u[k].sum * divisor_scale;
      mean_u[k].add(u[k]);
    }
    out.unit_values.push_back(std::move(u));
    if (want_jacobian)
      for (int k = 0; k < dim_ * dim_; ++k)
        mean_j[k].add(unit_j[k].sum * divisor_scale);
  }

  void finalize(Output& out, const std::vector<Kahan>& mean_u,
                const std::vector<Kahan>& mean_j, bool want_jacobian) const {
    for (int k = 0; k < dim_; ++k) {
      out.value[k] = mean_u[k].sum / n_units_;
      if (!std::isfinite(out.value[k])) out.finite = false;
    }
    if (want_jacobian)
      for (int k = 0; k < dim_; ++k)
        for (int l = 0; l < dim_; ++l)
          out.jacobian(k, l) = mean_j[k * dim_ + l].sum / n_units_;
  }

  const DesignRows& design_;
  const EstimatorOptions& options_;
  std::vector<double> ptilde_;
  std::vector<double> wlag_;
  JointTable joint_{};
  double pstar_const_ = 0.0;
  bool use_joint_table_ = false;
  bool indirect_ = false;
  bool per_individual_units_ = false;
  int dim_ = 0;
  int n_units_ = 0;
  int skipped_singletons_ = 0;
  std::vector<std::string> unit_labels_;
};

std::vector<double> numerator_column_values(const ClusterPanel& panel,
                                            const EstimatorOptions& options,
                                            const DesignRows& design) {
  const int col = panel.column_index(options.numerator.column);
  if (col < 0)
    throw DataError("unknown numerator column '" + options.numerator.column + "'");
  std::vector<double> values;
  values.reserve(design.n_rows());
  for (const auto& cluster : panel.clusters())
    for (const auto& member : cluster.members)
      for (int i = 0; i < design.rows_per_individual; ++i)
        values.push_back(member.rows[i].state[col]);
  return values;
}

FitResult solve(const DesignRows& design, Evaluator& evaluator,
                const EstimatorOptions& options) {
  const int dim = design.p + design.q;
  FitResult result;
  result.estimator = options.estimator;
  result.p = design.p;
  result.q = design.q;
  result.delta = design.delta;
  result.n_units = evaluator.n_units();
  result.unit_labels = evaluator.unit_labels();
  result.skipped_singleton_clusters = evaluator.skipped_singletons();

  if (evaluator.n_units() < 2)
    throw DataError("need at least 2 sandwich units (clusters or individuals)");

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  auto current = evaluator.evaluate(theta, true);
  if (!current.finite)
    throw NumericError("estimating function not finite at the initial point (" +
                       current.offending_row + ")");
  double norm = current.value.lpNorm<Eigen::Infinity>();

  const auto& solver = options.solver;
  int iter = 0;
  while (norm > solver.tolerance && iter < solver.max_iterations) {
    ++iter;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(current.jacobian);
    if (qr.rank() < dim) {
      const auto diag = qr.matrixR().diagonal().cwiseAbs();
      std::ostringstream os;
      os << "singular Jacobian at iteration " << iter
         << " (|R| diagonal min " << diag.minCoeff() << ", max " << diag.maxCoeff()
         << ")";
      throw NumericError(os.str());
    }
    const Eigen::VectorXd step = qr.solve(current.value);

    double scale = 1.0;
    Eigen::VectorXd accepted_theta;
    Evaluator::Output accepted;
    bool have_candidate = false;
    for (int h = 0; h <= solver.max_step_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd trial = theta - scale * step;
      auto eval = evaluator.evaluate(trial, true);
      if (!eval.finite) continue;
      const double trial_norm = eval.value.lpNorm<Eigen::Infinity>();
      if (trial_norm < norm || h == solver.max_step_halvings) {
        accepted_theta = std::move(trial);
        accepted = std::move(eval);
        norm = trial_norm;
        have_candidate = true;
        break;
      }
    }
    if (!have_candidate)
      throw NumericError("estimating function not finite along the Newton step");
    theta = std::move(accepted_theta);
    current = std::move(accepted);
  }

  result.alpha = theta.head(design.p);
  result.beta = theta.tail(design.q);
  result.iterations = iter;
  result.residual_norm = norm;
  result.converged = norm <= solver.tolerance;

  const bool retain = options.retain_unit_blocks || evaluator.n_units() < 50;
  std::vector<UnitBlock> blocks;
  auto final_eval = evaluator.evaluate(theta, true, retain ? &blocks : nullptr);
  result.bread = final_eval.jacobian;
  result.unit_scores = std::move(final_eval.unit_values);
  result.blocks = std::move(blocks);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(result.bread);
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  result.bread_condition = qr.rank() < dim
                               ? std::numeric_limits<double>::infinity()
                               : diag.maxCoeff() / diag.minCoeff();
  return result;
}

FitResult fit_impl(const ClusterPanel& panel, const FeatureSpec& moderator,
                   const FeatureSpec& control, EstimatorOptions options,
                   EstimatorKind kind) {
  options.estimator = kind;
  const DesignRows design = build_design(panel, moderator, control, options.delta,
                                         options.lag_outcome);
  std::vector<double> numer_col;
  const std::vector<double>* numer_ptr = nullptr;
  if (options.numerator.kind == NumeratorSpec::Kind::column) {
    numer_col = numerator_column_values(panel, options, design);
    numer_ptr = &numer_col;
  }
  Evaluator evaluator(design, options, numer_ptr);
  FitResult result = solve(design, evaluator, options);
  result.coefficient_names = coefficient_names(control, moderator);
  return result;
}

}  // namespace

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "emee") return EstimatorKind::emee;
  if (name == "cemee" || name == "cemee-direct") return EstimatorKind::cemee_direct;
  if (name == "cemee-indirect") return EstimatorKind::cemee_indirect;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string estimator_to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::emee: return "emee";
    case EstimatorKind::cemee_direct: return "cemee-direct";
    case EstimatorKind::cemee_indirect: return "cemee-indirect";
  }
  return "?";
}

Eigen::VectorXd FitResult::theta() const {
  Eigen::VectorXd th(p + q);
  th << alpha, beta;
  return th;
}

EvalResult estimating_function_direct(const DesignRows& design,
                                      const Eigen::VectorXd& theta,
                                      const EstimatorOptions& options) {
  EstimatorOptions opts = options;
  if (opts.estimator == EstimatorKind::cemee_indirect)
    opts.estimator = EstimatorKind::cemee_direct;
  if (theta.size() != design.p + design.q)
    throw DataError("theta dimension mismatch with design");
  Evaluator evaluator(design, opts, nullptr);
  auto out = evaluator.evaluate(theta, false);
  if (!out.finite)
    throw NumericError("estimating function overflow at " + out.offending_row);
  return {std::move(out.value), std::move(out.unit_values)};
}

EvalResult estimating_function_indirect(const DesignRows& design,
                                        const Eigen::VectorXd& theta,
                                        const EstimatorOptions& options) {
  EstimatorOptions opts = options;
  opts.estimator = EstimatorKind::cemee_indirect;
  if (theta.size() != design.p + design.q)
    throw DataError("theta dimension mismatch with design");
  Evaluator evaluator(design, opts, nullptr);
  auto out = evaluator.evaluate(theta, false);
  if (!out.finite)
    throw NumericError("estimating function overflow at " + out.offending_row);
  return {std::move(out.value), std::move(out.unit_values)};
}

FitResult fit_direct(const ClusterPanel& panel, const FeatureSpec& moderator,
                     const FeatureSpec& control, EstimatorOptions options) {
  return fit_impl(panel, moderator, control, std::move(options),
                  EstimatorKind::cemee_direct);
}

FitResult fit_emee(const ClusterPanel& panel, const FeatureSpec& moderator,
                   const FeatureSpec& control, EstimatorOptions options) {
  return fit_impl(panel, moderator, control, std::move(options), EstimatorKind::emee);
}

FitResult fit_indirect(const ClusterPanel& panel, const FeatureSpec& moderator,
                       const FeatureSpec& control, EstimatorOptions options) {
  return fit_impl(panel, moderator, control, std::move(options),
                  EstimatorKind::cemee_indirect);
}

FitResult fit(const ClusterPanel& panel, const FeatureSpec& moderator,
              const FeatureSpec& control, const EstimatorOptions& options) {
  return fit_impl(panel, moderator, control, options, options.estimator);
}

std::vector<std::string> coefficient_names(const FeatureSpec& control,
                                           const FeatureSpec& moderator) {
  std::vector<std::string> names;
  names.reserve(control.terms.size() + moderator.terms.size());
  for (const auto& term : control.terms) names.push_back("alpha[" + term.name() + "]");
  for (const auto& term : moderator.terms) names.push_back("beta[" + term.name() + "]");
  return names;
}

}  // namespace cemee
