#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace suelogit;
using suelogit::testing::make_link;

namespace {

SueOptions tight() {
  SueOptions o;
  o.flow_tolerance = 1e-11;
  o.objective_tolerance = 0.0;
  o.max_iterations = 2000;
  return o;
}

void expect_invariants(const Network& net, const ODDemand& od, const IncidenceData& inc, const EquilibriumState& s) {
  EXPECT_LE((inc.link_path * s.f - s.x).norm(), 1e-8 * std::max(1.0, s.x.norm()));
  EXPECT_LE((inc.od_path * s.f - od.vector()).norm(), 1e-8 * std::max(1.0, od.vector().norm()));
  for (std::size_t w = 0; w < inc.od_count(); ++w) {
    const auto b = static_cast<Eigen::Index>(inc.od_offsets[w]);
    const auto n = static_cast<Eigen::Index>(inc.od_offsets[w + 1]) - b;
    EXPECT_NEAR(s.p.segment(b, n).sum(), 1.0, 1e-10);
  }
  EXPECT_GE(s.x.minCoeff(), 0.0);
  EXPECT_LE(s.x.maxCoeff(), od.total() * (1 + 1e-12));
  EXPECT_LE((s.t - net.travel_times(s.x)).norm(), 1e-12 * s.t.norm());
}

// Network of three parallel links 1 -> 2 with free-flow times 1, 2, 3.
BuiltinNetwork parallel_three(double demand = 10.0) {
  Network net({make_link(1, 1, 2, 1, 1e6), make_link(2, 1, 2, 2, 1e6), make_link(3, 1, 2, 3, 1e6)}, Matrix(), {});
  ODDemand od({{1, 2, demand}});
  PathSet paths({{Path{0}, Path{1}, Path{2}}});
  return {"parallel", net, od, paths};
}

}  // namespace

TEST(LinkUtilities, ZeroCoefficientsGiveZero) {
  const Vector v = link_utilities(Coefficients(0.0, Vector::Zero(1)), Vector::Ones(3), Matrix::Ones(3, 1));
  EXPECT_TRUE(v.isZero());
}

TEST(LinkUtilities, TimeAndCostCombination) {
  const Vector v = link_utilities(Coefficients(-1.0, (Vector(1) << -6.0).finished()), (Vector(2) << 10, 12).finished(),
                                  (Matrix(2, 1) << 1, 0).finished());
  EXPECT_DOUBLE_EQ(v[0], -16.0);
  EXPECT_DOUBLE_EQ(v[1], -12.0);
}

TEST(LinkUtilities, TravelTimeOnlyIsNegativeFreeFlow) {
  const BuiltinNetwork b = builtin_network("yang");
  const Vector t0 = b.network.free_flow_times();
  EXPECT_EQ(link_utilities(Coefficients(-1.0, Vector()), t0, b.network.attributes()), -t0);
}

TEST(LinkUtilities, DimensionMismatch) {
  EXPECT_THROW(link_utilities(Coefficients(-1.0, Vector::Zero(2)), Vector::Ones(3), Matrix::Ones(3, 1)),
               StructuralError);
  EXPECT_THROW(link_utilities(Coefficients(-1.0, Vector::Zero(1)), Vector::Ones(2), Matrix::Ones(3, 1)),
               StructuralError);
}

TEST(PathProbabilities, EqualUtilitiesSplitEvenly) {
  Network net({make_link(1, 1, 2, 1, 10), make_link(2, 1, 2, 1, 10)}, Matrix(), {});
  const IncidenceData inc = build_incidence(net, PathSet({{Path{0}, Path{1}}}), ODDemand({{1, 2, 1.0}}));
  const Vector p = path_probabilities(Vector::Constant(2, -3.0), inc);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PathProbabilities, TwoPathTollIsSigmoid) {
  Network net({make_link(1, 1, 2, 1, 10), make_link(2, 1, 2, 1, 10)}, (Matrix(2, 1) << 1, 0).finished(), {"c"});
  const IncidenceData inc = build_incidence(net, PathSet({{Path{0}, Path{1}}}), ODDemand({{1, 2, 1.0}}));
  for (double theta_c : {0.0, -1.0, 0.7, -4.0}) {
    const Vector v = link_utilities(Coefficients(0.0, (Vector(1) << theta_c).finished()), net.free_flow_times(),
                                    net.attributes());
    const Vector p = path_probabilities(v, inc);
    EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-theta_c)), 1e-14);
  }
}

TEST(PathProbabilities, ThreePathSoftmax) {
  const BuiltinNetwork b = parallel_three();
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const Vector p = path_probabilities((Vector(3) << -1, -2, -3).finished(), inc);
  const double z = std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0);
  EXPECT_NEAR(p[0], std::exp(-1.0) / z, 1e-14);
  EXPECT_NEAR(p[1], std::exp(-2.0) / z, 1e-14);
  EXPECT_NEAR(p[2], std::exp(-3.0) / z, 1e-14);
  EXPECT_NEAR(p[0], 0.66524, 1e-5);
  EXPECT_NEAR(p[1], 0.24473, 1e-5);
  EXPECT_NEAR(p[2], 0.09003, 1e-5);
}

TEST(PathProbabilities, ExtremeUtilitiesDoNotOverflow) {
  const BuiltinNetwork b = parallel_three();
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const Vector p = path_probabilities((Vector(3) << 1000, 999, -1000).finished(), inc);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
}

TEST(PathProbabilities, EmptyOdIsStructuralError) {
  Network net({make_link(1, 1, 2, 1, 10)}, Matrix(), {});
  const IncidenceData inc =
      build_incidence(net, PathSet({{Path{0}}, {}}), ODDemand({{1, 2, 1.0}, {2, 1, 0.0}}));
  EXPECT_THROW(path_probabilities(Vector::Zero(1), inc), StructuralError);
}

TEST(PathProbabilitiesProperty, TranslationInvariantWithinOd) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 3.0);
  const BuiltinNetwork b = builtin_network("lochan");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  for (int rep = 0; rep < 50; ++rep) {
    Vector ps_log(static_cast<Eigen::Index>(inc.path_count()));
    for (Eigen::Index h = 0; h < ps_log.size(); ++h) ps_log[h] = n(rng);
    Vector v(14);
    for (Eigen::Index a = 0; a < 14; ++a) v[a] = n(rng);
    const Vector p = path_probabilities(v, inc, ps_log, 1.0);
    Vector shifted = ps_log;
    for (std::size_t w = 0; w < inc.od_count(); ++w) {
      const double c = 50.0 * n(rng);
      for (std::size_t h = inc.od_offsets[w]; h < inc.od_offsets[w + 1]; ++h) shifted[static_cast<Eigen::Index>(h)] += c;
    }
    EXPECT_LT((path_probabilities(v, inc, shifted, 1.0) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// With exactly two paths per OD, each probability is monotone in every coefficient.
TEST(PathProbabilitiesProperty, TwoPathMonotonicityOverThetaGrid) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    BuiltinNetwork b = builtin_network("wang");
    Matrix z(8, 2);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = u(rng);
    const Network net = b.network.with_attributes(z, {"z0", "z1"});
    const IncidenceData inc = build_incidence(net, b.paths, b.od);
    Vector base(3);
    base << -u(rng), 2 * u(rng) - 1, 2 * u(rng) - 1;
    for (Eigen::Index d = 0; d < 3; ++d) {
      std::vector<Vector> ps;
      for (double g = -5.0; g <= 5.0; g += 0.25) {
        Vector th = base;
        th[d] = g;
        ps.push_back(stochastic_network_loading(Coefficients::from_vector(th), inc, b.od.vector(),
                                                net.free_flow_times(), net.attributes()).p);
      }
      for (Eigen::Index h = 0; h < ps[0].size(); ++h) {
        int sign = 0;
        for (std::size_t i = 1; i < ps.size(); ++i) {
          const double diff = ps[i][h] - ps[i - 1][h];
          if (std::abs(diff) < 1e-14) continue;
          const int s = diff > 0 ? 1 : -1;
          if (sign == 0) sign = s;
          EXPECT_EQ(s, sign) << "path " << h << " coefficient " << d;
        }
      }
    }
  }
}

TEST(StochasticNetworkLoading, ToyFeederLinksAreThetaInvariant) {
  const BuiltinNetwork b = builtin_network("toy");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  for (double theta_t : {-15.0, -1.0, 0.0, 3.0}) {
    const LoadingResult r = stochastic_network_loading(Coefficients(theta_t, Vector()), inc, b.od.vector(),
                                                       b.network.free_flow_times(), b.network.attributes());
    EXPECT_NEAR(r.x[0], 50.0, 1e-9);
    EXPECT_NEAR(r.x[1], 100.0, 1e-9);
  }
}

TEST(StochasticNetworkLoading, ZeroCoefficientsSplitParallelLinksEvenly) {
  const BuiltinNetwork b = toy_network(true);
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const LoadingResult r = stochastic_network_loading(Coefficients(0.0, Vector()), inc, b.od.vector(),
                                                     b.network.free_flow_times(), b.network.attributes());
  EXPECT_NEAR(r.x[2], 150.0, 1e-9);
  EXPECT_NEAR(r.x[3], 150.0, 1e-9);
  // The asymmetric toy splits evenly too once the path-size correction is off.
  const BuiltinNetwork a = builtin_network("toy");
  const IncidenceData inc_a = build_incidence(a.network, a.paths, a.od);
  const LoadingResult ra = stochastic_network_loading(Coefficients(0.0, Vector(), 0.0), inc_a, a.od.vector(),
                                                      a.network.free_flow_times(), a.network.attributes());
  EXPECT_NEAR(ra.x[2], 150.0, 1e-9);
}

TEST(StochasticNetworkLoading, SinglePathCarriesAllDemand) {
  Network net({make_link(1, 1, 2, 1, 10), make_link(2, 2, 3, 1, 10)}, Matrix(), {});
  ODDemand od({{1, 3, 100.0}});
  const IncidenceData inc = build_incidence(net, PathSet({{Path{0, 1}}}), od);
  const LoadingResult r =
      stochastic_network_loading(Coefficients(-1.0, Vector()), inc, od.vector(), net.free_flow_times(), Matrix(2, 0));
  EXPECT_DOUBLE_EQ(r.f[0], 100.0);
  EXPECT_DOUBLE_EQ(r.x[0], 100.0);
  EXPECT_DOUBLE_EQ(r.x[1], 100.0);
}

TEST(InnerObjective, PureEntropyAtZeroCoefficients) {
  const BuiltinNetwork b = builtin_network("wang");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const Vector f = path_demands(inc, b.od.vector()) * 0.5;
  const double expected = -(f.array() * f.array().log()).sum();
  EXPECT_NEAR(inner_objective(inc.link_path * f, f, Coefficients(0.0, Vector(), 0.0), b.network), expected, 1e-9);
}

TEST(InnerObjective, MatchesQuadratureOfBprIntegrand) {
  Network net({make_link(1, 1, 2, 10, 100), make_link(2, 1, 2, 12, 150)}, Matrix(), {});
  ODDemand od({{1, 2, 220.0}});
  const IncidenceData inc = build_incidence(net, PathSet({{Path{0}, Path{1}}}), od);
  const Coefficients theta(-1.0, Vector());
  const LoadingResult r = stochastic_network_loading(theta, inc, od.vector(), net.free_flow_times(), Matrix(2, 0));
  // Composite Simpson rule on the link cost integrand, independent of the closed form.
  auto simpson = [&](const Link& l, double x) {
    const int n = 2000;
    const double h = x / n;
    double s = bpr_travel_time(l, 0) + bpr_travel_time(l, x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * bpr_travel_time(l, i * h);
    return s * h / 3;
  };
  double expected = 0;
  for (int a = 0; a < 2; ++a) expected += -simpson(net.link(static_cast<LinkIndex>(a)), r.x[a]);
  for (int h = 0; h < 2; ++h) expected -= r.f[h] * std::log(r.f[h]);
  EXPECT_NEAR(inner_objective(r.x, r.f, theta, net, inc.path_size_log), expected, 1e-8 * std::abs(expected));
}

TEST(InnerObjective, ZeroPathFlowUsesContinuity) {
  Network net({make_link(1, 1, 2, 1, 10), make_link(2, 1, 2, 1, 10)}, Matrix(), {});
  const Vector f = (Vector(2) << 5.0, 0.0).finished();
  const double v = inner_objective((Vector(2) << 5.0, 0.0).finished(), f, Coefficients(0.0, Vector(), 0.0), net);
  EXPECT_NEAR(v, -5.0 * std::log(5.0), 1e-12);
}

TEST(LineSearch, OptimumNotWorseThanEndpoints) {
  const BuiltinNetwork b = builtin_network("yang");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const Coefficients theta(-1.0, Vector());
  const Vector q = b.od.vector();
  const Vector f0 = stochastic_network_loading(theta, inc, q, b.network.free_flow_times(), b.network.attributes()).f;
  const Vector faux =
      stochastic_network_loading(theta, inc, q, b.network.travel_times(inc.link_path * f0), b.network.attributes()).f;
  for (bool refine : {false, true}) {
    SueOptions o;
    o.refine_line_search = refine;
    const double lambda = suelogit::detail::line_search(f0, faux, theta, b.network, inc, o);
    auto value = [&](double l) {
      const Vector f = l * f0 + (1 - l) * faux;
      return inner_objective(inc.link_path * f, f, theta, b.network, inc.path_size_log);
    };
    EXPECT_GE(value(lambda), value(0.0) - 1e-9);
    EXPECT_GE(value(lambda), value(1.0) - 1e-9);
  }
}

TEST(SolveSue, UncongestedMatchesFreeFlowLoading) {
  BuiltinNetwork b = builtin_network("lochan");
  const ODDemand od = b.od.with_demands(b.od.vector() * 1e-4);
  const IncidenceData inc = build_incidence(b.network, b.paths, od);
  const Coefficients theta(-1.0, Vector());
  const EquilibriumState s = solve_sue_logit(b.network, od, inc, theta);
  const LoadingResult r =
      stochastic_network_loading(theta, inc, od.vector(), b.network.free_flow_times(), b.network.attributes());
  EXPECT_TRUE(s.converged);
  EXPECT_LE(s.iterations, 1);
  EXPECT_LT((s.x - r.x).norm(), 1e-9 * r.x.norm());
}

TEST(SolveSue, SymmetricParallelLinksSplitEvenlyForAnyTheta) {
  const BuiltinNetwork b = toy_network(true);
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  for (double theta_t : {-14.0, -1.0, -0.1, 2.0}) {
    const EquilibriumState s = solve_sue_logit(b.network, b.od, inc, Coefficients(theta_t, Vector()), tight());
    EXPECT_NEAR(s.x[2], 150.0, 1e-6);
    EXPECT_NEAR(s.x[3], 150.0, 1e-6);
  }
}

TEST(SolveSue, ExogenousTimesEqualSingleLoadingExactly) {
  BuiltinNetwork b = builtin_network("yang");
  std::vector<Link> links = b.network.links();
  for (auto& l : links) l.bpr_alpha = 0.0;
  const Network net(links, Matrix(), {});
  const IncidenceData inc = build_incidence(net, b.paths, b.od);
  const Coefficients theta(-0.7, Vector());
  const EquilibriumState s = solve_sue_logit(net, b.od, inc, theta);
  const LoadingResult r = stochastic_network_loading(theta, inc, b.od.vector(), net.free_flow_times(), Matrix(14, 0));
  EXPECT_EQ(s.f, r.f);
  EXPECT_EQ(s.x, r.x);
}

TEST(SolveSue, FixedPointAndInvariantsOnAllBuiltins) {
  for (const auto& name : builtin_network_names()) {
    const BuiltinNetwork b = builtin_network(name);
    const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
    const Coefficients theta = name == "siouxfalls" ? siouxfalls_truth() : Coefficients(-1.0, Vector());
    SueOptions o = tight();
    o.flow_tolerance = 1e-9;
    const EquilibriumState s = solve_sue_logit(b.network, b.od, inc, theta, o);
    EXPECT_TRUE(s.converged) << name;
    expect_invariants(b.network, b.od, inc, s);
    const LoadingResult again = stochastic_network_loading(theta, inc, b.od.vector(), s.t, b.network.attributes());
    EXPECT_LT((again.x - s.x).norm(), 1e-8 * s.x.norm()) << name;
  }
}

TEST(SolveSue, UniqueFromRandomInitialLoadings) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (const auto& name : {"toy", "wang", "lochan", "yang"}) {
    const BuiltinNetwork b = builtin_network(name);
    const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
    const Vector qh = path_demands(inc, b.od.vector());
    std::vector<Vector> solutions;
    for (int rep = 0; rep < 3; ++rep) {
      Vector p(static_cast<Eigen::Index>(inc.path_count()));
      for (std::size_t w = 0; w < inc.od_count(); ++w) {
        double total = 0;
        for (std::size_t h = inc.od_offsets[w]; h < inc.od_offsets[w + 1]; ++h) total += p[static_cast<Eigen::Index>(h)] = u(rng);
        for (std::size_t h = inc.od_offsets[w]; h < inc.od_offsets[w + 1]; ++h) p[static_cast<Eigen::Index>(h)] /= total;
      }
      SueOptions o = tight();
      o.initial_path_flows = qh.cwiseProduct(p);
      solutions.push_back(solve_sue_logit(b.network, b.od, inc, Coefficients(-1.0, Vector()), o).f);
    }
    for (int rep = 1; rep < 3; ++rep) EXPECT_LT((solutions[rep] - solutions[0]).norm(), 1e-5 * solutions[0].norm()) << name;
  }
}

TEST(SolveSue, FrankWolfeAndMsaAgreeOnToy) {
  const BuiltinNetwork b = builtin_network("toy");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  SueOptions fw = tight();
  SueOptions msa = tight();
  msa.method = SueMethod::msa;
  msa.flow_tolerance = 1e-6;
  msa.max_iterations = 5000;
  const EquilibriumState a = solve_sue_logit(b.network, b.od, inc, Coefficients(-1.0, Vector()), fw);
  const EquilibriumState m = solve_sue_logit(b.network, b.od, inc, Coefficients(-1.0, Vector()), msa);
  EXPECT_LT((a.x - m.x).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SolveSue, NonConvergenceIsFlaggedNotFatal) {
  const BuiltinNetwork b = builtin_network("siouxfalls");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  SueOptions o = tight();
  o.max_iterations = 2;
  const EquilibriumState s = solve_sue_logit(b.network, b.od, inc, siouxfalls_truth(), o);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 2);
}

TEST(SolveSue, RejectsInfeasibleInitialFlows) {
  const BuiltinNetwork b = builtin_network("toy");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  SueOptions o;
  o.initial_path_flows = Vector::Ones(6);
  EXPECT_THROW(solve_sue_logit(b.network, b.od, inc, Coefficients(-1.0, Vector()), o), DomainError);
}

TEST(ColumnGeneration, NoOpWithoutBudgetOrPairs) {
  const BuiltinNetwork b = builtin_network("yang");
  const Coefficients theta(-1.0, Vector());
  const Vector t = b.network.free_flow_times();
  EXPECT_EQ(column_generation_step(b.network, b.od, b.paths, theta, t, {0, 1}, 0).paths.all(), b.paths.all());
  EXPECT_EQ(column_generation_step(b.network, b.od, b.paths, theta, t, {}, 3).paths.all(), b.paths.all());
}

TEST(ColumnGeneration, AddsTheBestMissingPath) {
  const BuiltinNetwork b = builtin_network("yang");
  const Coefficients theta(-1.0, Vector());
  const Vector t = b.network.travel_times(Vector::Constant(14, 150.0));
  const Vector v = link_utilities(theta, t, b.network.attributes());
  PathSet reduced = b.paths;
  std::vector<Path> best_paths;
  for (std::size_t w = 0; w < b.od.size(); ++w) {
    // Exhaustive oracle: highest-utility path of this OD.
    const auto all = enumerate_acyclic_paths(b.network, b.od.pair(w).origin, b.od.pair(w).destination);
    const Path best = *std::max_element(all.begin(), all.end(),
                                        [&](const Path& x, const Path& y) { return path_cost(x, v) < path_cost(y, v); });
    best_paths.push_back(best);
    auto& set = reduced.paths(w);
    if (set.size() > 1) set.erase(std::find(set.begin(), set.end(), best));
  }
  std::vector<std::size_t> all_pairs(b.od.size());
  std::iota(all_pairs.begin(), all_pairs.end(), std::size_t{0});
  const ColumnGenerationResult r = column_generation_step(b.network, b.od, reduced, theta, t, all_pairs, 1);
  for (std::size_t w = 0; w < b.od.size(); ++w) {
    const auto& set = r.paths.paths(w);
    EXPECT_NE(std::find(set.begin(), set.end(), best_paths[w]), set.end()) << "OD " << w;
  }
  EXPECT_GT(r.added, 0u);
  EXPECT_NO_THROW(r.paths.validate(b.network, b.od));
}

TEST(ODSelection, SweepPartitionsTopDemandPairs) {
  const BuiltinNetwork b = builtin_network("siouxfalls");
  const ODSelectionSchedule schedule(b.od, 0.3, 0.03);
  EXPECT_EQ(schedule.chunk_count(), 10u);
  const std::size_t top = static_cast<std::size_t>(std::lround(0.3 * 528));
  std::multiset<std::size_t> seen;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto chunk = schedule.at(i);
    seen.insert(chunk.begin(), chunk.end());
  }
  EXPECT_EQ(seen.size(), top);
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), top);
  // Every selected pair has demand at least as large as every unselected pair.
  double min_selected = 1e300, max_unselected = -1;
  for (std::size_t w = 0; w < b.od.size(); ++w) {
    if (seen.count(w)) {
      min_selected = std::min(min_selected, b.od.pair(w).demand);
    } else {
      max_unselected = std::max(max_unselected, b.od.pair(w).demand);
    }
  }
  EXPECT_GE(min_selected, max_unselected);
  EXPECT_EQ(schedule.at(10), schedule.at(0));
}

TEST(PathSelection, LargeBudgetLeavesSetUnchanged) {
  const BuiltinNetwork b = builtin_network("yang");
  const auto r = path_selection_step(b.network, b.paths, Coefficients(-1.0, Vector()), b.network.free_flow_times(), 11);
  EXPECT_EQ(r.paths.all(), b.paths.all());
  EXPECT_EQ(r.removed, 0u);
}

TEST(PathSelection, KeepsHighestUtilityPaths) {
  const BuiltinNetwork b = parallel_three();
  const auto r = path_selection_step(b.network, b.paths, Coefficients(-1.0, Vector()), b.network.free_flow_times(), 2);
  ASSERT_EQ(r.paths.paths(0).size(), 2u);
  EXPECT_EQ(r.paths.paths(0)[0], Path{0});
  EXPECT_EQ(r.paths.paths(0)[1], Path{1});
  EXPECT_EQ(r.removed, 1u);
  EXPECT_THROW(path_selection_step(b.network, b.paths, Coefficients(-1.0, Vector()), b.network.free_flow_times(), 0),
               DomainError);
}

TEST(PathSelection, EveryOdKeepsAPath) {
  const BuiltinNetwork b = builtin_network("yang");
  const auto r = path_selection_step(b.network, b.paths, Coefficients(-1.0, Vector()), b.network.free_flow_times(), 1);
  for (std::size_t w = 0; w < r.paths.od_count(); ++w) EXPECT_EQ(r.paths.paths(w).size(), 1u);
}

TEST(PathSelection, PruningWithinBudgetThenResolvingKeepsOuterObjective) {
  const BuiltinNetwork b = builtin_network("toy");
  const IncidenceData inc = build_incidence(b.network, b.paths, b.od);
  const Coefficients theta(-1.0, Vector());
  const EquilibriumState truth = solve_sue_logit(b.network, b.od, inc, theta, tight());
  std::vector<std::pair<int, double>> entries;
  for (int a = 0; a < 4; ++a) entries.emplace_back(a + 1, truth.x[a] + (a % 2 ? 3.0 : -2.0));
  const ObservedCounts counts(b.network, entries);
  const double before = outer_objective(truth.x, counts);
  const auto pruned = path_selection_step(b.network, b.paths, theta, truth.t, 2);
  const IncidenceData inc2 = build_incidence(b.network, pruned.paths, b.od);
  const double after = outer_objective(solve_sue_logit(b.network, b.od, inc2, theta, tight()).x, counts);
  EXPECT_LE(after, before + 1e-9);
}
