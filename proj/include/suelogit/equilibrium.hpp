#pragma once

#include "suelogit/core.hpp"
#include "suelogit/network.hpp"
#include "suelogit/paths.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace suelogit {

/// Utility weights: travel time first, then one weight per exogenous attribute.
struct Coefficients {
  double theta_t = 0.0;
  Vector theta_z;
  double psl_beta = 1.0;

  Coefficients() = default;
  Coefficients(double t, Vector z, double beta = 1.0) : theta_t(t), theta_z(std::move(z)), psl_beta(beta) {
    validate();
  }

  void validate() const {
    if (!std::isfinite(theta_t) || !theta_z.allFinite() || !std::isfinite(psl_beta)) {
      throw DomainError("coefficients must be finite");
    }
    if (psl_beta < 0.0) throw DomainError("psl_beta must be nonnegative");
  }

  /// Stacked [theta_t, theta_z].
  Vector vector() const {
    Vector v(theta_z.size() + 1);
    v[0] = theta_t;
    v.tail(theta_z.size()) = theta_z;
    return v;
  }

  static Coefficients from_vector(const Vector& v, double psl_beta = 1.0) {
    if (v.size() < 1) throw StructuralError("coefficient vector must contain theta_t");
    return Coefficients(v[0], v.tail(v.size() - 1), psl_beta);
  }
};

/// Name used for the travel-time coefficient in reports.
inline const std::string kTravelTimeName = "tt";

inline std::vector<std::string> coefficient_names(const Network& network) {
  std::vector<std::string> names{kTravelTimeName};
  names.insert(names.end(), network.attribute_names().begin(), network.attribute_names().end());
  return names;
}

struct EquilibriumState {
  Vector x;  // link flows
  Vector f;  // path flows
  Vector p;  // path probabilities
  Vector t;  // link travel times at x
  std::vector<double> objective_trace;
  std::vector<double> gap_trace;  // relative fixed-point gap per iteration
  int iterations = 0;
  bool converged = false;
};

inline Vector link_utilities(const Coefficients& theta, const Vector& t, const Matrix& z) {
  if (z.rows() != t.size()) throw StructuralError("link_utilities: attribute rows differ from link count");
  if (z.cols() != theta.theta_z.size()) {
    throw StructuralError("link_utilities: attribute count differs from coefficient count");
  }
  Vector v = theta.theta_t * t;
  if (z.cols() > 0) v.noalias() += z * theta.theta_z;
  return v;
}

/// Per-OD logit shares of V = link_pathᵀ v + psl_beta * ln PS, with max-shift.
inline Vector path_probabilities(const Vector& v, const IncidenceData& inc, const Vector& ps_log, double psl_beta) {
  if (v.size() != inc.link_path.rows()) throw StructuralError("path_probabilities: utility size mismatch");
  if (ps_log.size() != static_cast<Eigen::Index>(inc.path_count())) {
    throw StructuralError("path_probabilities: path-size vector size mismatch");
  }
  Vector util = inc.link_path.transpose() * v;
  if (psl_beta != 0.0) util += psl_beta * ps_log;
  Vector p(util.size());
  for (std::size_t w = 0; w < inc.od_count(); ++w) {
    const auto b = static_cast<Eigen::Index>(inc.od_offsets[w]);
    const auto n = static_cast<Eigen::Index>(inc.od_offsets[w + 1]) - b;
    if (n == 0) throw StructuralError("path_probabilities: OD pair " + std::to_string(w) + " has no path");
    auto seg = util.segment(b, n);
    const double m = seg.maxCoeff();
    auto e = (seg.array() - m).exp();
    p.segment(b, n) = e / e.sum();
  }
  return p;
}

inline Vector path_probabilities(const Vector& v, const IncidenceData& inc, double psl_beta = 1.0) {
  return path_probabilities(v, inc, inc.path_size_log, psl_beta);
}

struct LoadingResult {
  Vector x;
  Vector f;
  Vector p;
};

/// Demand of the OD each path belongs to (Δ_qᵀ q).
inline Vector path_demands(const IncidenceData& inc, const Vector& q) {
  if (q.size() != static_cast<Eigen::Index>(inc.od_count())) throw StructuralError("demand size mismatch");
  return inc.od_path.transpose() * q;
}

inline LoadingResult stochastic_network_loading(const Coefficients& theta, const IncidenceData& inc, const Vector& q,
                                                const Vector& t, const Matrix& z) {
  LoadingResult r;
  r.p = path_probabilities(link_utilities(theta, t, z), inc, theta.psl_beta);
  r.f = path_demands(inc, q).cwiseProduct(r.p);
  r.x = inc.link_path * r.f;
  return r;
}

/// Σ_a ∫ v_a + Σ_h f_h psl_beta ln PS_h − Σ_h f_h ln f_h, maximized by the SUE-logit path flows.
inline double inner_objective(const Vector& x, const Vector& f, const Coefficients& theta, const Network& network,
                              const Vector& ps_log = Vector()) {
  if (x.size() != static_cast<Eigen::Index>(network.link_count())) {
    throw StructuralError("inner_objective: link flow size mismatch");
  }
  double value = 0.0;
  const Matrix& z = network.attributes();
  const Vector zt = z.cols() > 0 ? Vector(z * theta.theta_z) : Vector::Zero(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    value += theta.theta_t * bpr_integral(network.link(static_cast<LinkIndex>(a)), std::max(0.0, x[a]));
    value += x[a] * zt[a];
  }
  for (Eigen::Index h = 0; h < f.size(); ++h) {
    if (f[h] > 0.0) value -= f[h] * std::log(f[h]);
  }
  if (ps_log.size() == f.size() && theta.psl_beta != 0.0) value += theta.psl_beta * f.dot(ps_log);
  return value;
}

enum class SueMethod { frank_wolfe, msa };

inline std::string to_string(SueMethod m) { return m == SueMethod::msa ? "msa" : "fw"; }

struct SueOptions {
  SueMethod method = SueMethod::frank_wolfe;
  double line_search_step = 0.01;  // λ grid granularity on [0,1]
  bool refine_line_search = true;  // bisection on the directional derivative around the grid optimum
  int max_iterations = 500;
  double objective_tolerance = 0.0;  // relative objective change; 0 disables
  double flow_tolerance = 1e-6;      // relative ‖x_aux − x‖ / ‖x‖
  std::optional<Vector> initial_path_flows;
};

namespace detail {

// Path-level marginal utility of the inner objective along f, without the per-OD constant.
inline Vector inner_gradient(const Vector& f, const Coefficients& theta, const Network& network,
                             const IncidenceData& inc) {
  const Vector x = inc.link_path * f;
  const Vector t = network.travel_times(x);
  Vector g = inc.link_path.transpose() * link_utilities(theta, t, network.attributes());
  if (theta.psl_beta != 0.0) g += theta.psl_beta * inc.path_size_log;
  for (Eigen::Index h = 0; h < f.size(); ++h) g[h] -= f[h] > 0.0 ? std::log(f[h]) : -700.0;
  return g;
}

// Maximizes the concave objective along f(λ) = λ f_prev + (1 − λ) f_aux.
inline double line_search(const Vector& f_prev, const Vector& f_aux, const Coefficients& theta,
                          const Network& network, const IncidenceData& inc, const SueOptions& opt) {
  const Vector d = f_prev - f_aux;
  auto at = [&](double lambda) { return Vector(f_aux + lambda * d); };
  double best = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  if (opt.line_search_step > 0.0) {
    const int cells = std::max(1, static_cast<int>(std::lround(1.0 / opt.line_search_step)));
    double best_value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= cells; ++k) {
      const double lambda = static_cast<double>(k) / cells;
      const Vector f = at(lambda);
      const double value = inner_objective(inc.link_path * f, f, theta, network, inc.path_size_log);
      if (value > best_value) {
        best_value = value;
        best = lambda;
      }
    }
    lo = std::max(0.0, best - 1.0 / cells);
    hi = std::min(1.0, best + 1.0 / cells);
    if (!opt.refine_line_search) return best;
  }
  auto slope = [&](double lambda) { return inner_gradient(at(lambda), theta, network, inc).dot(d); };
  if (slope(lo) <= 0.0) return lo;
  if (slope(hi) >= 0.0) return hi;
  for (int k = 0; k < 60 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// SUE-logit fixed point by Frank-Wolfe-style line search or MSA on path flows.
inline EquilibriumState solve_sue_logit(const Network& network, const ODDemand& od, const IncidenceData& inc,
                                        const Coefficients& theta, const SueOptions& opt = {}) {
  theta.validate();
  if (opt.max_iterations < 1) throw DomainError("solve_sue_logit: max_iterations must be positive");
  const Vector q = od.vector();
  const Matrix& z = network.attributes();
  const Vector qh = path_demands(inc, q);

  EquilibriumState s;
  if (opt.initial_path_flows) {
    s.f = *opt.initial_path_flows;
    if (s.f.size() != static_cast<Eigen::Index>(inc.path_count())) {
      throw StructuralError("solve_sue_logit: initial path flow size mismatch");
    }
    if ((s.f.array() < 0.0).any()) throw DomainError("solve_sue_logit: negative initial path flow");
    const Vector residual = inc.od_path * s.f - q;
    if (residual.norm() > 1e-8 * std::max(1.0, q.norm())) {
      throw DomainError("solve_sue_logit: initial path flows do not satisfy demand");
    }
  } else {
    s.f = stochastic_network_loading(theta, inc, q, network.free_flow_times(), z).f;
  }
  s.x = inc.link_path * s.f;
  s.objective_trace.push_back(inner_objective(s.x, s.f, theta, network, inc.path_size_log));

  for (int i = 1; i <= opt.max_iterations; ++i) {
    s.iterations = i;
    const Vector t = network.travel_times(s.x);
    const LoadingResult aux = stochastic_network_loading(theta, inc, q, t, z);
    const double scale = std::max(s.x.norm(), 1e-12);
    const double gap = (aux.x - s.x).norm() / scale;
    s.gap_trace.push_back(gap);
    if (gap < opt.flow_tolerance) {
      s.converged = true;
      break;
    }
    double lambda = 0.0;
    if (opt.method == SueMethod::msa) {
      lambda = 1.0 - 1.0 / (i + 1.0);
    } else {
      lambda = detail::line_search(s.f, aux.f, theta, network, inc, opt);
    }
    s.f = lambda * s.f + (1.0 - lambda) * aux.f;
    s.x = inc.link_path * s.f;
    const double prev = s.objective_trace.back();
    const double value = inner_objective(s.x, s.f, theta, network, inc.path_size_log);
    s.objective_trace.push_back(value);
    if (opt.objective_tolerance > 0.0 &&
        std::abs(value - prev) <= opt.objective_tolerance * std::max(std::abs(prev), 1e-12) &&
        opt.method == SueMethod::frank_wolfe && lambda < 1.0) {
      s.converged = true;
      break;
    }
  }
  s.t = network.travel_times(s.x);
  // Report probabilities consistent with the returned path flows.
  s.p = Vector(s.f.size());
  for (Eigen::Index h = 0; h < s.f.size(); ++h) s.p[h] = qh[h] > 0.0 ? s.f[h] / qh[h] : 0.0;
  for (std::size_t w = 0; w < inc.od_count(); ++w) {
    if (q[static_cast<Eigen::Index>(w)] > 0.0) continue;
    const auto b = static_cast<Eigen::Index>(inc.od_offsets[w]);
    const auto n = static_cast<Eigen::Index>(inc.od_offsets[w + 1]) - b;
    s.p.segment(b, n) = path_probabilities(link_utilities(theta, s.t, z), inc, theta.psl_beta).segment(b, n);
  }
  return s;
}

/// Demand-ranked OD batches for column generation.
///
/// The top round(coverage·|W|) pairs by demand are split into
/// round(coverage / per_iteration) contiguous chunks visited cyclically.
class ODSelectionSchedule {
 public:
  ODSelectionSchedule(const ODDemand& od, double coverage, double per_iteration) {
    if (coverage < 0.0 || coverage > 1.0 || per_iteration <= 0.0) {
      throw DomainError("OD selection fractions must satisfy 0 <= coverage <= 1 and per_iteration > 0");
    }
    std::vector<std::size_t> order(od.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return od.pair(a).demand > od.pair(b).demand; });
    const auto top = static_cast<std::size_t>(std::lround(coverage * static_cast<double>(od.size())));
    ranked_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(top, order.size())));
    chunks_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(coverage / per_iteration)));
    chunks_ = std::min(chunks_, std::max<std::size_t>(1, ranked_.size()));
  }

  std::size_t chunk_count() const noexcept { return chunks_; }
  const std::vector<std::size_t>& ranked() const noexcept { return ranked_; }

  /// OD indices selected at (0-based) bilevel iteration `i`.
  std::vector<std::size_t> at(std::size_t i) const {
    if (ranked_.empty()) return {};
    const std::size_t c = i % chunks_;
    const std::size_t n = ranked_.size();
    return {ranked_.begin() + static_cast<std::ptrdiff_t>(c * n / chunks_),
            ranked_.begin() + static_cast<std::ptrdiff_t>((c + 1) * n / chunks_)};
  }

 private:
  std::vector<std::size_t> ranked_;
  std::size_t chunks_ = 1;
};

struct ColumnGenerationResult {
  PathSet paths;
  std::size_t added = 0;
  std::vector<PathSearchWarning> warnings;
};

/// Merges the k_g best paths under current link utilities into the selected OD sets.
inline ColumnGenerationResult column_generation_step(const Network& network, const ODDemand& od, const PathSet& paths,
                                                     const Coefficients& theta, const Vector& t,
                                                     const std::vector<std::size_t>& od_subset, std::size_t k_g) {
  ColumnGenerationResult r{paths, 0, {}};
  if (k_g == 0 || od_subset.empty()) return r;
  const Vector cost = -link_utilities(theta, t, network.attributes());
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t w : od_subset) pairs.emplace_back(od.pair(w).origin, od.pair(w).destination);
  KShortestResult found = k_shortest_paths(network, cost, pairs, k_g);
  for (std::size_t j = 0; j < od_subset.size(); ++j) {
    for (const Path& p : found.paths[j]) r.added += r.paths.add(od_subset[j], p) ? 1 : 0;
  }
  r.warnings = std::move(found.warnings);
  return r;
}

struct PathSelectionResult {
  PathSet paths;
  std::size_t removed = 0;
};

/// Keeps the k_s highest-utility paths of every OD (relative order preserved).
inline PathSelectionResult path_selection_step(const Network& network, const PathSet& paths,
                                               const Coefficients& theta, const Vector& t, std::size_t k_s) {
  if (k_s < 1) throw DomainError("path_selection_step: k_s must be positive");
  const Vector v = link_utilities(theta, t, network.attributes());
  const Vector lengths = network.lengths();
  PathSelectionResult r{paths, 0};
  for (std::size_t w = 0; w < paths.od_count(); ++w) {
    auto& set = r.paths.paths(w);
    if (set.size() <= k_s) continue;
    const auto ps = path_size_factors(set, lengths);
    std::vector<double> util(set.size());
    for (std::size_t h = 0; h < set.size(); ++h) util[h] = path_cost(set[h], v) + theta.psl_beta * std::log(ps[h]);
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (util[a] != util[b]) return util[a] > util[b];
      return path_id_less(network, set[a], set[b]);
    });
    order.resize(k_s);
    std::sort(order.begin(), order.end());
    std::vector<Path> kept;
    for (std::size_t h : order) kept.push_back(set[h]);
    r.removed += set.size() - kept.size();
    set = std::move(kept);
  }
  return r;
}

}  // namespace suelogit
