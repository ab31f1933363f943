#pragma once

#include "suelogit/core.hpp"
#include "suelogit/data/siouxfalls.hpp"
#include "suelogit/equilibrium.hpp"
#include "suelogit/estimation.hpp"
#include "suelogit/inference.hpp"
#include "suelogit/io.hpp"
#include "suelogit/network.hpp"
#include "suelogit/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace suelogit {

struct BuiltinNetwork {
  std::string name;
  Network network;
  ODDemand od;
  PathSet paths;
};

namespace detail {

// (from, to, free-flow minutes, capacity); ids follow row order.
using LinkRow = std::tuple<NodeId, NodeId, double, double>;

inline std::vector<Link> make_links(const std::vector<LinkRow>& rows) {
  std::vector<Link> links;
  for (const auto& [from, to, t0, cap] : rows) {
    Link l;
    l.id = static_cast<int>(links.size()) + 1;
    l.from_node = from;
    l.to_node = to;
    l.free_flow_time = t0;
    l.capacity = cap;
    links.push_back(l);
  }
  return links;
}

inline BuiltinNetwork exhaustive(std::string name, std::vector<Link> links, std::vector<ODPair> pairs) {
  Network net(std::move(links), Matrix(), {});
  ODDemand od(std::move(pairs));
  PathSet paths = enumerate_all_paths(net, od);
  return {std::move(name), std::move(net), std::move(od), std::move(paths)};
}

}  // namespace detail

/// Two OD pairs feeding a shared pair of parallel links a3, a4 between nodes 3 and 4.
/// `symmetric` makes a3 and a4 identical, which leaves θ_t unidentifiable.
inline BuiltinNetwork toy_network(bool symmetric = false) {
  std::vector<detail::LinkRow> rows{{1, 3, 4.0, 80.0}, {2, 3, 6.0, 120.0}, {3, 4, 10.0, 180.0},
                                    {3, 4, symmetric ? 10.0 : 12.0, symmetric ? 180.0 : 240.0}};
  return detail::exhaustive(symmetric ? "toy-symmetric" : "toy", detail::make_links(rows),
                            {{1, 4, 50.0}, {2, 4, 100.0}, {3, 4, 150.0}});
}

/// Four-node bidirectional ring; every ordered pair has exactly two routes.
inline BuiltinNetwork wang_network() {
  std::vector<detail::LinkRow> rows{{2, 1, 4.0, 300.0}, {1, 2, 3.25, 280.0}, {3, 4, 3.75, 260.0},
                                    {4, 3, 4.0, 300.0}, {4, 1, 5.0, 240.0}, {1, 4, 5.25, 320.0},
                                    {2, 3, 4.25, 300.0}, {3, 2, 6.5, 260.0}};
  std::vector<ODPair> od{{1, 2, 60.0}, {1, 3, 80.0}, {1, 4, 50.0}, {2, 1, 70.0}, {2, 3, 40.0}, {2, 4, 90.0},
                         {3, 1, 60.0}, {3, 2, 50.0}, {3, 4, 70.0}, {4, 1, 40.0}, {4, 2, 80.0}, {4, 3, 60.0}};
  return detail::exhaustive("wang", detail::make_links(rows), std::move(od));
}

/// 2×3 grid (top 1-2-3, bottom 4-5-6) with a middle rung 2-5; OD pairs among the corners.
inline BuiltinNetwork lochan_network() {
  std::vector<detail::LinkRow> rows{{1, 2, 1.0, 300.0}, {2, 1, 1.0, 320.0}, {2, 3, 1.0, 280.0}, {3, 2, 1.5, 300.0},
                                    {3, 6, 1.75, 260.0}, {6, 3, 1.5, 280.0}, {6, 5, 1.0, 300.0}, {5, 6, 1.0, 300.0},
                                    {5, 4, 0.75, 320.0}, {4, 5, 1.25, 280.0}, {4, 1, 1.75, 260.0}, {1, 4, 1.25, 300.0},
                                    {2, 5, 0.5, 240.0}, {5, 2, 0.75, 240.0}};
  std::vector<ODPair> od{{1, 3, 90.0}, {1, 4, 60.0}, {1, 6, 120.0}, {3, 1, 80.0}, {3, 4, 100.0}, {3, 6, 50.0},
                         {4, 1, 70.0}, {4, 3, 110.0}, {4, 6, 60.0}, {6, 1, 130.0}, {6, 3, 40.0}, {6, 4, 80.0}};
  return detail::exhaustive("lochan", detail::make_links(rows), std::move(od));
}

/// OD order used by both Yang demand vectors: origins {1,2,4} × destinations {6,8,9}.
inline ODDemand yang_od(const Vector& q) {
  const NodeId origins[] = {1, 2, 4};
  const NodeId dests[] = {6, 8, 9};
  std::vector<ODPair> pairs;
  Eigen::Index k = 0;
  for (NodeId o : origins) {
    for (NodeId d : dests) pairs.push_back({o, d, q[k++]});
  }
  return ODDemand(std::move(pairs));
}

inline Vector yang_true_demand() {
  return (Vector(9) << 120, 150, 100, 130, 200, 90, 80, 180, 110).finished();
}

inline Vector yang_distorted_demand() {
  return (Vector(9) << 100, 130, 120, 120, 170, 140, 110, 170, 105).finished();
}

/// 3×3 grid with two diagonals out of node 5.
inline BuiltinNetwork yang_network() {
  std::vector<detail::LinkRow> rows{{1, 2, 5.0, 300.0}, {1, 4, 6.0, 280.0}, {1, 5, 8.0, 250.0}, {2, 3, 4.0, 260.0},
                                    {2, 5, 5.0, 300.0}, {3, 6, 6.0, 280.0}, {4, 5, 4.0, 300.0}, {4, 7, 5.0, 260.0},
                                    {5, 6, 5.0, 320.0}, {5, 8, 4.0, 300.0}, {5, 9, 7.0, 260.0}, {6, 9, 4.0, 300.0},
                                    {7, 8, 5.0, 280.0}, {8, 9, 6.0, 300.0}};
  Network net(detail::make_links(rows), Matrix(), {});
  ODDemand od = yang_od(yang_true_demand());
  PathSet paths = enumerate_all_paths(net, od);
  return {"yang", std::move(net), std::move(od), std::move(paths)};
}

/// Sioux Falls: 24 nodes, 76 links, 528 OD pairs, 3 shortest paths by length per pair.
inline BuiltinNetwork siouxfalls_network(std::size_t k_paths = 3) {
  std::istringstream net_in(data::kSiouxFallsNet);
  std::istringstream trips_in(data::kSiouxFallsTrips);
  std::istringstream attr_in(data::kSiouxFallsAttributes);
  Network net = io::assemble_network(io::read_tntp_network(net_in, "siouxfalls/net"),
                                     io::read_attributes_csv(attr_in, "siouxfalls/attributes"));
  ODDemand od = io::read_tntp_trips(trips_in, "siouxfalls/trips");
  PathSet paths = k_shortest_path_set(net, od, net.lengths(), k_paths);
  return {"siouxfalls", std::move(net), std::move(od), std::move(paths)};
}

inline const std::vector<std::string>& builtin_network_names() {
  static const std::vector<std::string> names{"toy", "wang", "lochan", "yang", "siouxfalls"};
  return names;
}

inline BuiltinNetwork builtin_network(const std::string& name) {
  if (name == "toy") return toy_network();
  if (name == "wang") return wang_network();
  if (name == "lochan") return lochan_network();
  if (name == "yang") return yang_network();
  if (name == "siouxfalls") return siouxfalls_network();
  throw StructuralError("unknown builtin network '" + name + "'");
}

/// Ground-truth utility weights for Sioux Falls over (tt, c, s).
inline Coefficients siouxfalls_truth() { return Coefficients(-1.0, (Vector(2) << -6.0, -3.0).finished()); }

using Rng = std::mt19937_64;

/// Appends `count` standard-normal attribute columns named irr1, irr2, ...
inline Network add_irrelevant_attributes(const Network& network, std::size_t count, Rng& rng) {
  const auto a = static_cast<Eigen::Index>(network.link_count());
  Matrix z(a, network.attributes().cols() + static_cast<Eigen::Index>(count));
  z.leftCols(network.attributes().cols()) = network.attributes();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    for (Eigen::Index i = 0; i < a; ++i) z(i, network.attributes().cols() + static_cast<Eigen::Index>(k)) = normal(rng);
  }
  std::vector<std::string> names = network.attribute_names();
  for (std::size_t k = 0; k < count; ++k) names.push_back("irr" + std::to_string(k + 1));
  return network.with_attributes(std::move(z), std::move(names));
}

struct DGPConfig {
  Coefficients theta_true;
  double noise_std_fraction = 0.10;
  double sensor_coverage = 1.0;
  double od_noise_fraction = 0.0;
  double od_scale_factor = 1.0;
  std::uint64_t seed = 0;
  std::size_t irrelevant_attribute_count = 0;

  void validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(noise_std_fraction) || !in_unit(sensor_coverage) || !in_unit(od_noise_fraction)) {
      throw DomainError("DGP fractions must lie in [0, 1]");
    }
    if (!(od_scale_factor > 0.0)) throw DomainError("OD scale factor must be positive");
  }
};

/// round(coverage·|A|) distinct link indices, in ascending order.
inline std::vector<LinkIndex> sample_observed_links(std::size_t link_count, double coverage, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::lround(coverage * static_cast<double>(link_count)));
  std::vector<LinkIndex> all(link_count);
  std::iota(all.begin(), all.end(), LinkIndex{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n);
  std::sort(all.begin(), all.end());
  return all;
}

/// Noisy counts from a known equilibrium. Negative draws are kept.
inline ObservedCounts counts_from_flows(const Network& network, const Vector& true_flows, const DGPConfig& dgp,
                                        Rng& rng) {
  const std::vector<LinkIndex> observed = sample_observed_links(network.link_count(), dgp.sensor_coverage, rng);
  if (observed.empty()) throw DegreesOfFreedomError("sensor coverage selects no link");
  Vector values(static_cast<Eigen::Index>(observed.size()));
  for (std::size_t i = 0; i < observed.size(); ++i) {
    values[static_cast<Eigen::Index>(i)] = true_flows[static_cast<Eigen::Index>(observed[i])];
  }
  const double sigma = dgp.noise_std_fraction * values.mean();
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] += noise(rng);
  }
  return ObservedCounts::from_indices(network, observed, values);
}

struct GeneratedCounts {
  ObservedCounts counts;
  EquilibriumState truth;
};

/// Solves SUE-logit at the true coefficients (or loads at `exogenous_times`) and draws counts.
inline GeneratedCounts generate_counts(const Network& network, const ODDemand& od, const IncidenceData& inc,
                                       const DGPConfig& dgp, const SueOptions& sue = {},
                                       const std::optional<Vector>& exogenous_times = std::nullopt) {
  dgp.validate();
  Rng rng(dgp.seed);
  EstimationOptions opt;
  opt.sue = sue;
  opt.exogenous_times = exogenous_times;
  GeneratedCounts g;
  if (exogenous_times) {
    const LoadingResult l =
        stochastic_network_loading(dgp.theta_true, inc, od.vector(), *exogenous_times, network.attributes());
    g.truth.x = l.x;
    g.truth.f = l.f;
    g.truth.p = l.p;
    g.truth.t = *exogenous_times;
    g.truth.converged = true;
  } else {
    g.truth = solve_sue_logit(network, od, inc, dgp.theta_true, sue);
  }
  g.counts = counts_from_flows(network, g.truth.x, dgp, rng);
  return g;
}

/// Gaussian cell noise with σ = fraction·mean(q), truncated at zero.
inline ODDemand perturb_od(const ODDemand& od, double fraction, Rng& rng) {
  if (fraction < 0.0) throw DomainError("perturb_od: fraction must be nonnegative");
  if (fraction == 0.0 || od.size() == 0) return od;
  Vector q = od.vector();
  std::normal_distribution<double> noise(0.0, fraction * q.mean());
  for (Eigen::Index w = 0; w < q.size(); ++w) q[w] = std::max(0.0, q[w] + noise(rng));
  return od.with_demands(q);
}

inline ODDemand scale_od(const ODDemand& od, double factor) {
  if (!(factor > 0.0)) throw DomainError("scale_od: factor must be positive");
  return od.with_demands(od.vector() * factor);
}

/// Estimate plus inference, shared by the CLI and the Monte Carlo harness.
struct EstimationReport {
  EstimationResult result;
  InferenceReport inference;
  std::vector<std::string> coefficient_names;  // all coefficients, in θ order
  std::vector<std::size_t> estimated;          // indices with inference
};

inline EstimationReport estimate_with_inference(const Network& network, const ODDemand& od, const PathSet& paths,
                                                const ObservedCounts& counts, const Coefficients& theta0,
                                                const EstimationOptions& options, double alpha = 0.1) {
  EstimationReport rep;
  rep.coefficient_names = coefficient_names(network);
  rep.result = bilevel_optimization(network, od, paths, counts, theta0, options);
  const EstimationResult& r = rep.result;
  for (std::size_t d = 0; d < rep.coefficient_names.size(); ++d) {
    const bool wanted = options.estimate.empty() || options.estimate[d];
    const bool frozen = std::find(r.frozen.begin(), r.frozen.end(), d) != r.frozen.end();
    if (wanted && !frozen) rep.estimated.push_back(d);
  }
  const Vector theta = r.theta.vector();
  const Matrix path_attrs = path_attributes(r.incidence, r.equilibrium.t, network.attributes());
  const Matrix j = flow_jacobian(r.incidence, od.vector(), r.equilibrium.p, path_attrs, counts, rep.estimated);
  const Vector residuals = counts.restrict(r.equilibrium.x) - counts.values();
  Coefficients zero = r.theta;
  zero.theta_t = 0.0;
  zero.theta_z.setZero();
  const LoadingResult null_loading =
      stochastic_network_loading(zero, r.incidence, od.vector(), r.equilibrium.t, network.attributes());
  const double rss_null = outer_objective(null_loading.x, counts);
  std::vector<std::string> names;
  Vector estimates(static_cast<Eigen::Index>(rep.estimated.size()));
  for (std::size_t c = 0; c < rep.estimated.size(); ++c) {
    names.push_back(rep.coefficient_names[rep.estimated[c]]);
    estimates[static_cast<Eigen::Index>(c)] = theta[static_cast<Eigen::Index>(rep.estimated[c])];
  }
  rep.inference = build_inference(names, estimates, j, residuals, counts.values(), rss_null, alpha);
  for (std::size_t d : r.frozen) {
    CoefficientInference c;
    c.name = rep.coefficient_names[d];
    c.estimate = theta[static_cast<Eigen::Index>(d)];
    c.identified = false;
    rep.inference.coefficients.push_back(c);
  }
  return rep;
}

struct MonteCarloConfig {
  std::size_t replicates = 30;
  DGPConfig dgp;
  EstimationOptions estimation;
  double theta0_half_width = 1.0;  // θ0 ~ U(truth ± half width)
  bool exogenous_times = true;     // estimate against the true equilibrium travel times
  double alpha = 0.1;
  std::size_t jobs = 1;
};

struct ReplicateResult {
  std::size_t id = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  Vector estimates;
  Vector t_stats;
  Vector p_values;
  double nrmse = 0.0;
  double objective = 0.0;
};

struct MonteCarloSummary {
  std::vector<std::string> coefficient_names;
  Vector truth;
  std::vector<ReplicateResult> replicates;  // sorted by id
  std::size_t failures = 0;
  Vector bias;  // mean estimate − truth
  double vot_bias = std::numeric_limits<double>::quiet_NaN();  // 60·θ_t/θ_c units per hour
  double mean_nrmse = 0.0;
  double false_negative_rate = std::numeric_limits<double>::quiet_NaN();
  double false_positive_rate = std::numeric_limits<double>::quiet_NaN();
};

/// Replicates of count generation and estimation with per-replicate seeds base + index.
///
/// Irrelevant attributes are drawn once from the base seed, so the design matrix is shared
/// and replicates differ only in count noise, link sampling, OD perturbation and θ0.
inline MonteCarloSummary run_monte_carlo(const Network& base_network, const ODDemand& od, const PathSet& paths,
                                         const MonteCarloConfig& config) {
  if (config.replicates < 1) throw DomainError("run_monte_carlo: at least one replicate is required");
  config.dgp.validate();
  Rng design_rng(config.dgp.seed ^ 0x9e3779b97f4a7c15ULL);
  const Network network = config.dgp.irrelevant_attribute_count > 0
                              ? add_irrelevant_attributes(base_network, config.dgp.irrelevant_attribute_count,
                                                          design_rng)
                              : base_network;
  Vector truth = Vector::Zero(static_cast<Eigen::Index>(network.attribute_count()) + 1);
  const Vector given = config.dgp.theta_true.vector();
  if (given.size() > truth.size()) throw StructuralError("true coefficient vector longer than attribute list");
  truth.head(given.size()) = given;
  const Coefficients theta_true = Coefficients::from_vector(truth, config.dgp.theta_true.psl_beta);

  const IncidenceData inc = build_incidence(network, paths, od);
  EquilibriumState truth_state = solve_sue_logit(network, od, inc, theta_true, config.estimation.sue);
  if (config.exogenous_times) {
    // Counts must be the exact loading at the times the estimator will hold fixed.
    truth_state.x = stochastic_network_loading(theta_true, inc, od.vector(), truth_state.t, network.attributes()).x;
  }

  MonteCarloSummary s;
  s.coefficient_names = coefficient_names(network);
  s.truth = truth;
  s.replicates.resize(config.replicates);
  const std::size_t k = s.coefficient_names.size();
  std::vector<bool> estimate = config.estimation.estimate;
  if (estimate.empty()) estimate.assign(k, true);
  if (estimate.size() != k) throw StructuralError("estimate mask size differs from coefficient count");

  auto run_one = [&](std::size_t r) {
    ReplicateResult out;
    out.id = r;
    out.seed = config.dgp.seed + r;
    try {
      Rng rng(out.seed);
      const ObservedCounts counts = counts_from_flows(network, truth_state.x, config.dgp, rng);
      ODDemand od_used = perturb_od(od, config.dgp.od_noise_fraction, rng);
      if (config.dgp.od_scale_factor != 1.0) od_used = scale_od(od_used, config.dgp.od_scale_factor);
      std::uniform_real_distribution<double> offset(-config.theta0_half_width, config.theta0_half_width);
      Vector theta0 = truth;
      for (std::size_t d = 0; d < k; ++d) {
        if (estimate[d]) theta0[static_cast<Eigen::Index>(d)] += offset(rng);
      }
      EstimationOptions opt = config.estimation;
      opt.estimate = estimate;
      if (config.exogenous_times) {
        opt.exogenous_times = truth_state.t;
        opt.bilevel_iterations = 2;
      }
      const EstimationReport rep = estimate_with_inference(
          network, od_used, paths, counts, Coefficients::from_vector(theta0, theta_true.psl_beta), opt, config.alpha);
      out.estimates = rep.result.theta.vector();
      out.t_stats = Vector::Constant(static_cast<Eigen::Index>(k), std::numeric_limits<double>::quiet_NaN());
      out.p_values = out.t_stats;
      for (const auto& c : rep.inference.coefficients) {
        const auto it = std::find(s.coefficient_names.begin(), s.coefficient_names.end(), c.name);
        const auto d = static_cast<Eigen::Index>(it - s.coefficient_names.begin());
        out.t_stats[d] = c.t_stat;
        out.p_values[d] = c.p_value;
      }
      out.nrmse = rep.inference.fit.nrmse;
      out.objective = rep.result.objective;
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    s.replicates[r] = std::move(out);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, config.replicates));
  if (jobs == 1) {
    for (std::size_t r = 0; r < config.replicates; ++r) run_one(r);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next >= config.replicates) return;
            r = next++;
          }
          run_one(r);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Aggregates in replicate-id order.
  s.bias = Vector::Zero(static_cast<Eigen::Index>(k));
  std::size_t ok = 0;
  std::size_t fn = 0, fn_total = 0, fp = 0, fp_total = 0;
  double vot_sum = 0.0;
  std::size_t vot_n = 0;
  const auto c_index = std::find(s.coefficient_names.begin(), s.coefficient_names.end(), "c");
  for (const auto& rep : s.replicates) {
    if (rep.failed) {
      ++s.failures;
      continue;
    }
    ++ok;
    s.bias += rep.estimates - truth;
    s.mean_nrmse += rep.nrmse;
    for (std::size_t d = 0; d < k; ++d) {
      if (!estimate[d]) continue;
      const double p = rep.p_values[static_cast<Eigen::Index>(d)];
      const bool reject = !std::isnan(p) && p < config.alpha;
      if (truth[static_cast<Eigen::Index>(d)] != 0.0) {
        ++fn_total;
        fn += reject ? 0 : 1;
      } else {
        ++fp_total;
        fp += reject ? 1 : 0;
      }
    }
    if (c_index != s.coefficient_names.end()) {
      const auto ci = static_cast<Eigen::Index>(c_index - s.coefficient_names.begin());
      if (rep.estimates[ci] != 0.0 && truth[ci] != 0.0) {
        vot_sum += 60.0 * (rep.estimates[0] / rep.estimates[ci] - truth[0] / truth[ci]);
        ++vot_n;
      }
    }
  }
  if (ok > 0) {
    s.bias /= static_cast<double>(ok);
    s.mean_nrmse /= static_cast<double>(ok);
  }
  if (vot_n > 0) s.vot_bias = vot_sum / static_cast<double>(vot_n);
  if (fn_total > 0) s.false_negative_rate = static_cast<double>(fn) / static_cast<double>(fn_total);
  if (fp_total > 0) s.false_positive_rate = static_cast<double>(fp) / static_cast<double>(fp_total);
  return s;
}

}  // namespace suelogit
