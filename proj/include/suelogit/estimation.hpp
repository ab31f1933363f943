#pragma once

#include "suelogit/core.hpp"
#include "suelogit/equilibrium.hpp"
#include "suelogit/network.hpp"
#include "suelogit/paths.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace suelogit {

/// Traffic counts on a subset of links.
class ObservedCounts {
 public:
  ObservedCounts() = default;

  ObservedCounts(const Network& network, const std::vector<std::pair<int, double>>& entries) {
    if (entries.empty()) throw DegreesOfFreedomError("no observed link counts");
    std::set<int> seen;
    for (const auto& [id, count] : entries) {
      if (!seen.insert(id).second) throw StructuralError("duplicate count for link " + std::to_string(id));
      if (!std::isfinite(count)) throw StructuralError("non-finite count for link " + std::to_string(id));
      ids_.push_back(id);
      index_.push_back(network.index_of(id));
    }
    values_.resize(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) values_[static_cast<Eigen::Index>(i)] = entries[i].second;
  }

  /// Counts on links given by index.
  static ObservedCounts from_indices(const Network& network, const std::vector<LinkIndex>& links, const Vector& values) {
    if (static_cast<Eigen::Index>(links.size()) != values.size()) throw StructuralError("count size mismatch");
    std::vector<std::pair<int, double>> entries;
    for (std::size_t i = 0; i < links.size(); ++i) {
      entries.emplace_back(network.link(links[i]).id, values[static_cast<Eigen::Index>(i)]);
    }
    return ObservedCounts(network, entries);
  }

  std::size_t size() const noexcept { return index_.size(); }
  const std::vector<int>& link_ids() const noexcept { return ids_; }
  const std::vector<LinkIndex>& link_indices() const noexcept { return index_; }
  const Vector& values() const noexcept { return values_; }

  Vector restrict(const Vector& link_values) const {
    Vector r(static_cast<Eigen::Index>(index_.size()));
    for (std::size_t i = 0; i < index_.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = link_values[static_cast<Eigen::Index>(index_[i])];
    }
    return r;
  }

  std::vector<std::pair<int, double>> entries() const {
    std::vector<std::pair<int, double>> e;
    for (std::size_t i = 0; i < ids_.size(); ++i) e.emplace_back(ids_[i], values_[static_cast<Eigen::Index>(i)]);
    return e;
  }

 private:
  std::vector<int> ids_;
  std::vector<LinkIndex> index_;
  Vector values_;
};

/// ‖x_obs − x̄‖².
inline double outer_objective(const Vector& x, const ObservedCounts& counts) {
  return (counts.restrict(x) - counts.values()).squaredNorm();
}

/// Path-level attributes [Δ_xᵀt, Δ_xᵀZ], one column per coefficient.
inline Matrix path_attributes(const IncidenceData& inc, const Vector& t, const Matrix& z) {
  Matrix a(static_cast<Eigen::Index>(inc.path_count()), z.cols() + 1);
  a.col(0) = inc.link_path.transpose() * t;
  if (z.cols() > 0) a.rightCols(z.cols()) = inc.link_path.transpose() * z;
  return a;
}

/// ∂p/∂θ_d: per OD, p_h (Z_h − Σ_j p_j Z_j).
inline Vector probability_jacobian_column(const Vector& p, const IncidenceData& inc, const Vector& z_d) {
  if (p.size() != static_cast<Eigen::Index>(inc.path_count()) || z_d.size() != p.size()) {
    throw StructuralError("probability_jacobian_column: size mismatch");
  }
  Vector dp(p.size());
  for (std::size_t w = 0; w < inc.od_count(); ++w) {
    const auto b = static_cast<Eigen::Index>(inc.od_offsets[w]);
    const auto n = static_cast<Eigen::Index>(inc.od_offsets[w + 1]) - b;
    const double mean = p.segment(b, n).dot(z_d.segment(b, n));
    dp.segment(b, n) = p.segment(b, n).cwiseProduct((z_d.segment(b, n).array() - mean).matrix());
  }
  return dp;
}

/// ∂²p/∂θ_d² given ∂p/∂θ_d.
inline Vector probability_second_derivative(const Vector& p, const Vector& dp, const IncidenceData& inc,
                                            const Vector& z_d) {
  Vector d2(p.size());
  for (std::size_t w = 0; w < inc.od_count(); ++w) {
    const auto b = static_cast<Eigen::Index>(inc.od_offsets[w]);
    const auto n = static_cast<Eigen::Index>(inc.od_offsets[w + 1]) - b;
    const double mean = p.segment(b, n).dot(z_d.segment(b, n));
    const double dmean = dp.segment(b, n).dot(z_d.segment(b, n));
    d2.segment(b, n) = dp.segment(b, n).cwiseProduct((z_d.segment(b, n).array() - mean).matrix()) -
                       dmean * p.segment(b, n);
  }
  return d2;
}

/// Observed-link Jacobian of x with respect to the coefficients in `free` (indices into [θ_t, θ_Z]).
inline Matrix flow_jacobian(const IncidenceData& inc, const Vector& q, const Vector& p, const Matrix& path_attrs,
                            const ObservedCounts& counts, const std::vector<std::size_t>& free) {
  const Vector qh = path_demands(inc, q);
  Matrix j(static_cast<Eigen::Index>(counts.size()), static_cast<Eigen::Index>(free.size()));
  for (std::size_t c = 0; c < free.size(); ++c) {
    const Vector dp = probability_jacobian_column(p, inc, path_attrs.col(static_cast<Eigen::Index>(free[c])));
    const Vector dx = inc.link_path * qh.cwiseProduct(dp);
    j.col(static_cast<Eigen::Index>(c)) = counts.restrict(dx);
  }
  return j;
}

/// 2 Jᵀ(x − x̄).
inline Vector outer_gradient(const Matrix& jacobian, const Vector& x, const ObservedCounts& counts) {
  return 2.0 * jacobian.transpose() * (counts.restrict(x) - counts.values());
}

/// ∂²ℓ/∂θ_d² = 2 Σ_i [(∂x_i/∂θ_d)² + (x_i − x̄_i) ∂²x_i/∂θ_d²].
inline Vector second_derivative_diag(const IncidenceData& inc, const Vector& q, const Vector& p,
                                     const Matrix& path_attrs, const Vector& x, const ObservedCounts& counts,
                                     const std::vector<std::size_t>& free) {
  const Vector qh = path_demands(inc, q);
  const Vector residual = counts.restrict(x) - counts.values();
  Vector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t c = 0; c < free.size(); ++c) {
    const Vector z_d = path_attrs.col(static_cast<Eigen::Index>(free[c]));
    const Vector dp = probability_jacobian_column(p, inc, z_d);
    const Vector d2p = probability_second_derivative(p, dp, inc, z_d);
    const Vector dx = counts.restrict(inc.link_path * qh.cwiseProduct(dp));
    const Vector d2x = counts.restrict(inc.link_path * qh.cwiseProduct(d2p));
    out[static_cast<Eigen::Index>(c)] = 2.0 * (dx.squaredNorm() + residual.dot(d2x));
  }
  return out;
}

struct NgdStep {
  Vector theta;
  bool stationary = false;
};

/// θ − η g/‖g‖.
inline NgdStep ngd_step(const Vector& theta, const Vector& gradient, double eta) {
  if (!(eta > 0.0)) throw DomainError("ngd_step: learning rate must be positive");
  const double norm = gradient.norm();
  if (!(norm > 0.0)) return {theta, true};
  return {theta - eta * gradient / norm, false};
}

struct LmStep {
  Vector theta;
  bool pseudo_inverse = false;  // singular normal matrix at δ = 0
};

/// θ + (JᵀJ + δI)⁻¹ Jᵀ r with r = x̄ − x.
inline LmStep lm_step(const Vector& theta, const Matrix& jacobian, const Vector& residual, double damping) {
  if (damping < 0.0) throw DomainError("lm_step: damping must be nonnegative");
  if (jacobian.rows() != residual.size() || jacobian.cols() != theta.size()) {
    throw StructuralError("lm_step: dimension mismatch");
  }
  const Matrix a = jacobian.transpose() * jacobian +
                   damping * Matrix::Identity(theta.size(), theta.size());
  const Vector b = jacobian.transpose() * residual;
  if (damping > 0.0) return {theta + a.ldlt().solve(b), false};
  Eigen::FullPivLU<Matrix> lu(a);
  if (lu.isInvertible()) return {theta + lu.solve(b), false};
  return {theta + Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(b), true};
}

enum class OptimizerOrder { ngd_then_lm, lm_then_ngd };

struct EstimationOptions {
  int ngd_iterations = 10;  // T1: length of the first stage
  int lm_iterations = 10;   // T2: length of the second stage
  double eta = 2.0;
  double lm_damping = 1.0;
  int bilevel_iterations = 10;  // I
  OptimizerOrder order = OptimizerOrder::ngd_then_lm;
  std::vector<int> sign_constraints;   // per coefficient: −1 (≤ 0), +1 (≥ 0), 0 free; empty means none
  std::vector<bool> estimate;          // per coefficient; empty means all
  SueOptions sue;
  std::optional<Vector> exogenous_times;  // inner level becomes one loading at these times
  bool column_generation = false;
  std::size_t paths_per_generation = 2;  // k_g
  double od_coverage = 0.3;
  double od_per_iteration = 0.03;
  bool path_selection = false;
  std::size_t max_paths_per_od = 10;  // k_s

  void validate(std::size_t coefficient_count) const {
    if (ngd_iterations < 0 || lm_iterations < 0 || bilevel_iterations < 0) {
      throw DomainError("iteration counts must be nonnegative");
    }
    if (!(eta > 0.0)) throw DomainError("eta must be positive");
    if (lm_damping < 0.0) throw DomainError("LM damping must be nonnegative");
    if (!sign_constraints.empty() && sign_constraints.size() != coefficient_count) {
      throw StructuralError("sign constraint count differs from coefficient count");
    }
    if (!estimate.empty() && estimate.size() != coefficient_count) {
      throw StructuralError("estimate mask size differs from coefficient count");
    }
  }
};

struct TraceRecord {
  int iteration = 0;
  std::string stage;  // equilibrium, ngd, lm
  Vector theta;
  double objective = 0.0;
  std::size_t paths_added = 0;
  std::size_t paths_removed = 0;
};

using ConvergenceTrace = std::vector<TraceRecord>;

/// Outer-level problem at frozen travel times: x(θ) comes from one loading per evaluation.
class OuterProblem {
 public:
  OuterProblem(const Network& network, const IncidenceData& inc, Vector q, Vector t, const ObservedCounts& counts,
               double psl_beta)
      : network_(&network), inc_(&inc), q_(std::move(q)), t_(std::move(t)), counts_(&counts), psl_beta_(psl_beta) {
    path_attrs_ = path_attributes(inc, t_, network.attributes());
  }

  std::size_t coefficient_count() const noexcept { return static_cast<std::size_t>(path_attrs_.cols()); }
  const Matrix& path_attrs() const noexcept { return path_attrs_; }
  const ObservedCounts& counts() const noexcept { return *counts_; }

  LoadingResult load(const Vector& theta) const {
    return stochastic_network_loading(Coefficients::from_vector(theta, psl_beta_), *inc_, q_, t_,
                                      network_->attributes());
  }

  double objective(const Vector& theta) const { return outer_objective(load(theta).x, *counts_); }

  Matrix jacobian(const Vector& theta, const std::vector<std::size_t>& free) const {
    return jacobian(load(theta), free);
  }

  Matrix jacobian(const LoadingResult& loading, const std::vector<std::size_t>& free) const {
    return flow_jacobian(*inc_, q_, loading.p, path_attrs_, *counts_, free);
  }

  Vector gradient(const Vector& theta, const std::vector<std::size_t>& free) const {
    const LoadingResult l = load(theta);
    return outer_gradient(flow_jacobian(*inc_, q_, l.p, path_attrs_, *counts_, free), l.x, *counts_);
  }

  Vector second_derivatives(const Vector& theta, const std::vector<std::size_t>& free) const {
    const LoadingResult l = load(theta);
    return second_derivative_diag(*inc_, q_, l.p, path_attrs_, l.x, *counts_, free);
  }

  /// Coefficients whose path attribute is constant within every demand-bearing OD.
  std::vector<std::size_t> structurally_unidentified() const {
    std::vector<std::size_t> out;
    for (Eigen::Index d = 0; d < path_attrs_.cols(); ++d) {
      const double scale = 1.0 + path_attrs_.col(d).cwiseAbs().maxCoeff();
      bool constant = true;
      for (std::size_t w = 0; w < inc_->od_count() && constant; ++w) {
        if (q_[static_cast<Eigen::Index>(w)] <= 0.0) continue;
        const auto b = static_cast<Eigen::Index>(inc_->od_offsets[w]);
        const auto n = static_cast<Eigen::Index>(inc_->od_offsets[w + 1]) - b;
        if (n < 2) continue;
        const auto seg = path_attrs_.col(d).segment(b, n);
        constant = seg.maxCoeff() - seg.minCoeff() <= 1e-12 * scale;
      }
      if (constant) out.push_back(static_cast<std::size_t>(d));
    }
    return out;
  }

 private:
  const Network* network_;
  const IncidenceData* inc_;
  Vector q_;
  Vector t_;
  const ObservedCounts* counts_;
  double psl_beta_;
  Matrix path_attrs_;
};

struct OuterResult {
  Vector theta;
  double objective = 0.0;
  ConvergenceTrace trace;
  std::vector<std::size_t> frozen;
  std::vector<std::string> warnings;
};

namespace detail {

inline void project_signs(Vector& theta, const std::vector<int>& signs) {
  for (std::size_t d = 0; d < signs.size(); ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    if ((signs[d] < 0 && theta[i] > 0.0) || (signs[d] > 0 && theta[i] < 0.0)) theta[i] = 0.0;
  }
}

}  // namespace detail

/// T1 steps of the first optimizer then T2 of the second, restarting from the best iterate;
/// returns the iterate with the lowest objective (θ0 included).
inline OuterResult outer_level_optimization(const OuterProblem& problem, const Vector& theta0,
                                            const EstimationOptions& options, int iteration = 0,
                                            const std::vector<std::string>& names = {}) {
  const std::size_t k = problem.coefficient_count();
  if (static_cast<std::size_t>(theta0.size()) != k) throw StructuralError("theta0 size mismatch");
  options.validate(k);
  OuterResult r;
  std::set<std::size_t> frozen_set;
  for (std::size_t d : problem.structurally_unidentified()) {
    if (options.estimate.empty() || options.estimate[d]) {
      frozen_set.insert(d);
      r.frozen.push_back(d);
      r.warnings.push_back("coefficient '" + (d < names.size() ? names[d] : std::to_string(d)) +
                           "' is not identifiable (attribute constant within every OD); held fixed");
    }
  }
  std::vector<std::size_t> free;
  for (std::size_t d = 0; d < k; ++d) {
    if ((options.estimate.empty() || options.estimate[d]) && !frozen_set.count(d)) free.push_back(d);
  }

  Vector theta = theta0;
  r.theta = theta0;
  r.objective = problem.objective(theta0);
  auto record = [&](const std::string& stage, const Vector& th, double value) {
    r.trace.push_back({iteration, stage, th, value, 0, 0});
    if (value < r.objective) {
      r.objective = value;
      r.theta = th;
    }
  };
  if (free.empty()) return r;

  auto scatter = [&](const Vector& sub) {
    Vector full = theta;
    for (std::size_t c = 0; c < free.size(); ++c) full[static_cast<Eigen::Index>(free[c])] = sub[static_cast<Eigen::Index>(c)];
    return full;
  };
  auto gather = [&](const Vector& full) {
    Vector sub(static_cast<Eigen::Index>(free.size()));
    for (std::size_t c = 0; c < free.size(); ++c) sub[static_cast<Eigen::Index>(c)] = full[static_cast<Eigen::Index>(free[c])];
    return sub;
  };

  auto run_ngd = [&](int steps) {
    for (int s = 0; s < steps; ++s) {
      const NgdStep step = ngd_step(gather(theta), problem.gradient(theta, free), options.eta);
      if (step.stationary) {
        r.warnings.push_back("zero gradient: normalized gradient descent stopped");
        break;
      }
      theta = scatter(step.theta);
      detail::project_signs(theta, options.sign_constraints);
      record("ngd", theta, problem.objective(theta));
    }
  };
  auto run_lm = [&](int steps) {
    for (int s = 0; s < steps; ++s) {
      const LoadingResult l = problem.load(theta);
      const Matrix j = problem.jacobian(l, free);
      const LmStep step = lm_step(gather(theta), j, problem.counts().values() - problem.counts().restrict(l.x),
                                  options.lm_damping);
      if (step.pseudo_inverse) r.warnings.push_back("singular Gauss-Newton system: pseudo-inverse used");
      theta = scatter(step.theta);
      detail::project_signs(theta, options.sign_constraints);
      record("lm", theta, problem.objective(theta));
    }
  };

  if (options.order == OptimizerOrder::ngd_then_lm) {
    run_ngd(options.ngd_iterations);
    theta = r.theta;
    run_lm(options.lm_iterations);
  } else {
    run_lm(options.ngd_iterations);
    theta = r.theta;
    run_ngd(options.lm_iterations);
  }
  return r;
}

struct EstimationResult {
  Coefficients theta;
  double objective = 0.0;
  EquilibriumState equilibrium;
  PathSet paths;
  IncidenceData incidence;
  ConvergenceTrace trace;
  std::vector<std::size_t> frozen;  // coefficients held fixed as non-identifiable
  std::vector<std::string> warnings;
  bool inner_converged = true;  // every inner solve converged
  int best_iteration = 0;
};

namespace detail {

inline EquilibriumState inner_level(const Network& network, const ODDemand& od, const IncidenceData& inc,
                                    const Coefficients& theta, const EstimationOptions& options) {
  if (!options.exogenous_times) return solve_sue_logit(network, od, inc, theta, options.sue);
  EquilibriumState s;
  const LoadingResult l = stochastic_network_loading(theta, inc, od.vector(), *options.exogenous_times,
                                                     network.attributes());
  s.x = l.x;
  s.f = l.f;
  s.p = l.p;
  s.t = *options.exogenous_times;
  s.iterations = 1;
  s.converged = true;
  return s;
}

}  // namespace detail

/// Alternating optimization: inner level (column generation, equilibrium, path selection)
/// then the outer level on every iteration except the last. Returns the lowest-objective
/// iterate together with the equilibrium computed at it.
inline EstimationResult bilevel_optimization(const Network& network, const ODDemand& od, const PathSet& initial_paths,
                                             const ObservedCounts& counts, const Coefficients& theta0,
                                             const EstimationOptions& options) {
  theta0.validate();
  const std::size_t k = network.attribute_count() + 1;
  if (static_cast<std::size_t>(theta0.theta_z.size()) + 1 != k) throw StructuralError("theta0 size mismatch");
  options.validate(k);
  if (options.bilevel_iterations < 1) throw DomainError("bilevel_iterations must be at least 1");
  if (options.exogenous_times && options.exogenous_times->size() != static_cast<Eigen::Index>(network.link_count())) {
    throw StructuralError("exogenous travel time vector size mismatch");
  }
  od.validate_against(network);
  initial_paths.validate(network, od);

  const std::vector<std::string> names = coefficient_names(network);
  std::optional<ODSelectionSchedule> schedule;
  if (options.column_generation) schedule.emplace(od, options.od_coverage, options.od_per_iteration);

  EstimationResult best;
  best.objective = std::numeric_limits<double>::infinity();
  PathSet paths = initial_paths;
  Vector theta = theta0.vector();
  Vector last_times = options.exogenous_times ? *options.exogenous_times : network.free_flow_times();
  std::vector<std::string> warnings;
  std::set<std::size_t> frozen;
  bool all_converged = true;

  for (int i = 1; i <= options.bilevel_iterations; ++i) {
    const Coefficients current = Coefficients::from_vector(theta, theta0.psl_beta);
    std::size_t added = 0;
    std::size_t removed = 0;
    if (schedule) {
      ColumnGenerationResult cg = column_generation_step(network, od, paths, current, last_times,
                                                         schedule->at(static_cast<std::size_t>(i - 1)),
                                                         options.paths_per_generation);
      paths = std::move(cg.paths);
      added = cg.added;
    }
    IncidenceData inc = build_incidence(network, paths, od);
    EquilibriumState state = detail::inner_level(network, od, inc, current, options);
    if (options.path_selection) {
      PathSelectionResult sel = path_selection_step(network, paths, current, state.t, options.max_paths_per_od);
      if (sel.removed > 0) {
        paths = std::move(sel.paths);
        removed = sel.removed;
        inc = build_incidence(network, paths, od);
        state = detail::inner_level(network, od, inc, current, options);
      }
    }
    if (!state.converged) {
      all_converged = false;
      warnings.push_back("inner level did not converge at bilevel iteration " + std::to_string(i));
    }
    last_times = state.t;
    const double value = outer_objective(state.x, counts);
    best.trace.push_back({i, "equilibrium", theta, value, added, removed});
    if (value < best.objective) {
      best.objective = value;
      best.theta = current;
      best.equilibrium = state;
      best.paths = paths;
      best.incidence = inc;
      best.best_iteration = i;
    }
    if (i == options.bilevel_iterations) break;

    const OuterProblem problem(network, inc, od.vector(), state.t, counts, theta0.psl_beta);
    OuterResult outer = outer_level_optimization(problem, theta, options, i, names);
    frozen.insert(outer.frozen.begin(), outer.frozen.end());
    for (const auto& w : outer.warnings) {
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
    }
    best.trace.insert(best.trace.end(), outer.trace.begin(), outer.trace.end());
    theta = outer.theta;
  }
  best.frozen.assign(frozen.begin(), frozen.end());
  best.warnings = std::move(warnings);
  best.inner_converged = all_converged;
  return best;
}

}  // namespace suelogit
