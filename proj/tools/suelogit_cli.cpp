#include "suelogit/suelogit.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace suelogit;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kSuccess = 0, kInputError = 1, kNonConvergence = 2, kIdentifiability = 3 };

struct CommonOptions {
  std::string network = "toy";
  std::string od;
  std::string attributes;
  bool distorted_od = false;
  std::size_t paths_k = 3;
  std::string out = "out";
  std::uint64_t seed = 1;
  bool verbose = false;
};

struct TruthOptions {
  double theta_t = -1.0;
  std::vector<std::string> theta;  // name=value; unlisted attributes use the network default
};

struct DgpOptions {
  std::string counts;
  double noise = 0.1;
  double coverage = 1.0;
  std::size_t irrelevant = 0;
};

struct EstimatorOptions {
  double theta0_t = 0.0;
  std::vector<std::string> theta0;
  int ngd_iterations = 10;
  int lm_iterations = 10;
  double eta = 0.0;  // 0 selects 2 for benchmark networks and 0.5 otherwise
  double lm_damping = 1.0;
  int bilevel_iterations = 10;
  std::string order = "ngd-lm";
  std::vector<std::string> estimate;
  std::vector<std::string> signs;
  bool column_generation = false;
  std::size_t paths_per_generation = 2;
  double od_coverage = 0.3;
  double od_per_iteration = 0.03;
  bool path_selection = false;
  std::size_t max_paths_per_od = 10;
  double alpha = 0.1;
};

struct SueCliOptions {
  std::string method = "fw";
  int max_iterations = 500;
  double tolerance = 1e-6;
  double line_search_step = 0.01;
};

// Wall-clock per stage, in insertion order.
class StageTimer {
 public:
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, start);
    } else {
      auto result = f();
      record(stage, start);
      return result;
    }
  }

  json to_json() const {
    json j = json::array();
    for (const auto& [stage, seconds] : stages_) j.push_back({{"stage", stage}, {"seconds", seconds}});
    return j;
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    stages_.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }

  std::vector<std::pair<std::string, double>> stages_;
};

struct Problem {
  std::string name;
  std::string od_source;
  Network network;
  ODDemand od;
  PathSet paths;
  bool builtin = false;
};

bool is_builtin_name(const std::string& name) {
  const auto& names = builtin_network_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

PathSet default_paths(const Network& network, const ODDemand& od, const std::string& name, std::size_t k) {
  if (name == "siouxfalls" || !is_builtin_name(name)) return k_shortest_path_set(network, od, network.lengths(), k);
  return enumerate_all_paths(network, od);
}

Problem load_problem(const CommonOptions& c) {
  Problem p;
  if (c.paths_k < 1) throw DomainError("--paths-k must be at least 1");
  if (is_builtin_name(c.network)) {
    BuiltinNetwork b = c.network == "siouxfalls" ? siouxfalls_network(c.paths_k) : builtin_network(c.network);
    p.name = b.name;
    p.network = std::move(b.network);
    p.od = std::move(b.od);
    p.paths = std::move(b.paths);
    p.builtin = true;
    p.od_source = "builtin";
  } else {
    p.name = std::filesystem::path(c.network).stem().string();
    if (c.od.empty()) throw StructuralError("--od is required when --network is a file");
    p.network = Network(io::read_tntp_network(c.network), Matrix(), {});
  }
  if (!c.attributes.empty()) {
    p.network = io::assemble_network(p.network.links(), io::read_attributes_csv(c.attributes));
  }
  if (c.distorted_od) {
    if (p.name != "yang" || !c.od.empty()) throw StructuralError("--distorted-od applies to the builtin yang network only");
    p.od = yang_od(yang_distorted_demand());
    p.od_source = "distorted";
  }
  if (!c.od.empty()) {
    p.od = io::read_od(c.od);
    p.od_source = c.od;
    p.od.validate_against(p.network);
    p.paths = default_paths(p.network, p.od, p.name, c.paths_k);
  } else if (!p.builtin) {
    throw StructuralError("--od is required when --network is a file");
  }
  p.paths.validate(p.network, p.od);
  return p;
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw StructuralError("expected name=value, got '" + s + "'");
  const std::string name = io::detail::trim(s.substr(0, eq));
  const std::string value = io::detail::trim(s.substr(eq + 1));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw StructuralError("not a number in '" + s + "'");
  return {name, v};
}

std::size_t coefficient_index(const Network& network, const std::string& name) {
  const std::vector<std::string> names = coefficient_names(network);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw StructuralError("unknown coefficient '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

Coefficients build_coefficients(const Network& network, double theta_t, const std::vector<std::string>& assignments,
                                Vector base = Vector()) {
  if (base.size() != static_cast<Eigen::Index>(network.attribute_count()) + 1) {
    base = Vector::Zero(static_cast<Eigen::Index>(network.attribute_count()) + 1);
  }
  base[0] = theta_t;
  for (const auto& a : assignments) {
    const auto [name, value] = parse_assignment(a);
    base[static_cast<Eigen::Index>(coefficient_index(network, name))] = value;
  }
  return Coefficients::from_vector(base);
}

/// True coefficients: Sioux Falls defaults to (−1, −6, −3) on its bundled attributes.
Coefficients truth_coefficients(const Problem& p, const TruthOptions& t) {
  Vector base = Vector::Zero(static_cast<Eigen::Index>(p.network.attribute_count()) + 1);
  if (p.name == "siouxfalls") {
    for (const auto& [name, value] : {std::pair<std::string, double>{"c", -6.0}, {"s", -3.0}}) {
      if (auto idx = p.network.attribute_index(name)) base[static_cast<Eigen::Index>(*idx) + 1] = value;
    }
  }
  return build_coefficients(p.network, t.theta_t, t.theta, base);
}

double resolve_eta(const Problem& p, double eta) {
  if (eta > 0.0) return eta;
  if (eta < 0.0) throw DomainError("--eta must be positive");
  return p.builtin && p.name != "siouxfalls" ? 2.0 : 0.5;
}

SueOptions sue_options(const SueCliOptions& s) {
  SueOptions o;
  if (s.method == "fw") {
    o.method = SueMethod::frank_wolfe;
  } else if (s.method == "msa") {
    o.method = SueMethod::msa;
  } else {
    throw StructuralError("unknown --method '" + s.method + "' (fw or msa)");
  }
  if (s.max_iterations < 1) throw DomainError("--sue-max-iterations must be positive");
  if (!(s.tolerance > 0.0)) throw DomainError("--sue-tolerance must be positive");
  if (!(s.line_search_step > 0.0) || s.line_search_step > 1.0) {
    throw DomainError("--line-search-step must lie in (0, 1]");
  }
  o.max_iterations = s.max_iterations;
  o.flow_tolerance = s.tolerance;
  o.line_search_step = s.line_search_step;
  return o;
}

EstimationOptions estimation_options(const Problem& p, const EstimatorOptions& e, const SueOptions& sue) {
  EstimationOptions o;
  o.ngd_iterations = e.ngd_iterations;
  o.lm_iterations = e.lm_iterations;
  o.eta = resolve_eta(p, e.eta);
  o.lm_damping = e.lm_damping;
  o.bilevel_iterations = e.bilevel_iterations;
  if (e.order == "ngd-lm") {
    o.order = OptimizerOrder::ngd_then_lm;
  } else if (e.order == "lm-ngd") {
    o.order = OptimizerOrder::lm_then_ngd;
  } else {
    throw StructuralError("unknown --order '" + e.order + "' (ngd-lm or lm-ngd)");
  }
  const std::size_t k = p.network.attribute_count() + 1;
  if (!e.estimate.empty()) {
    o.estimate.assign(k, false);
    for (const auto& name : e.estimate) o.estimate[coefficient_index(p.network, name)] = true;
  }
  if (!e.signs.empty()) {
    o.sign_constraints.assign(k, 0);
    for (const auto& s : e.signs) {
      const auto [name, value] = parse_assignment(s);
      if (value != -1.0 && value != 1.0 && value != 0.0) throw StructuralError("sign must be -1, 0 or 1 in '" + s + "'");
      o.sign_constraints[coefficient_index(p.network, name)] = static_cast<int>(value);
    }
  }
  o.sue = sue;
  o.column_generation = e.column_generation;
  o.paths_per_generation = e.paths_per_generation;
  o.od_coverage = e.od_coverage;
  o.od_per_iteration = e.od_per_iteration;
  o.path_selection = e.path_selection;
  o.max_paths_per_od = e.max_paths_per_od;
  if (!(e.alpha > 0.0) || e.alpha >= 1.0) throw DomainError("--alpha must lie in (0, 1)");
  o.validate(k);
  return o;
}

DGPConfig dgp_config(const Coefficients& truth, const DgpOptions& d, std::uint64_t seed) {
  DGPConfig g;
  g.theta_true = truth;
  g.noise_std_fraction = d.noise;
  g.sensor_coverage = d.coverage;
  g.seed = seed;
  g.irrelevant_attribute_count = d.irrelevant;
  g.validate();
  return g;
}

// Irrelevant attributes are drawn once from the run seed, as in the Monte Carlo harness.
void add_irrelevant(Problem& p, std::size_t count, std::uint64_t seed) {
  if (count == 0) return;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  p.network = add_irrelevant_attributes(p.network, count, rng);
}

std::string link_list(const Network& network, const Path& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) s += "-";
    s += std::to_string(network.link(path[i]).id);
  }
  return s;
}

std::string counts_csv(const ObservedCounts& counts) {
  std::ostringstream out;
  out << "link_id,count\n";
  for (const auto& [id, value] : counts.entries()) out << id << "," << io::fmt(value) << "\n";
  return out.str();
}

std::string link_flows_csv(const Network& network, const Vector& x, const Vector& t) {
  std::ostringstream out;
  out << "link_id,from,to,flow,travel_time\n";
  for (std::size_t a = 0; a < network.link_count(); ++a) {
    const Link& l = network.link(a);
    const auto i = static_cast<Eigen::Index>(a);
    out << l.id << "," << l.from_node << "," << l.to_node << "," << io::fmt(x[i]) << "," << io::fmt(t[i]) << "\n";
  }
  return out.str();
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json options_json(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "version") continue;
    const auto& results = opt->results();
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->get_expected_max() > 1) {
      j[name] = results;
    } else if (!results.empty()) {
      j[name] = results.back();
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

class Run {
 public:
  Run(std::string command, const CommonOptions& common, const CLI::App& app, const CLI::App& sub)
      : command_(std::move(command)), common_(common), out_(common.out) {
    std::filesystem::create_directories(out_);
    meta_["command"] = command_;
    meta_["seed"] = common.seed;
    meta_["config"] = options_json(sub);
    const json global = options_json(app);
    for (const auto& [k, v] : global.items()) meta_["config"][k] = v;
    meta_["versions"] = {{"suelogit", kVersion},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"boost", BOOST_LIB_VERSION},
                         {"cli11", CLI11_VERSION},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                         {"compiler", std::string("gcc ") + __VERSION__}};
  }

  StageTimer& timer() { return timer_; }
  json& meta() { return meta_; }

  void write(const std::string& file, const std::string& content) {
    io::write_file_atomic(out_ / file, content);
    outputs_.push_back(file);
  }

  void finish(int exit_code) {
    meta_["exit_code"] = exit_code;
    meta_["stages"] = timer_.to_json();
    meta_["outputs"] = outputs_;
    io::write_file_atomic(out_ / "runmeta.json", meta_.dump(2) + "\n");
  }

  void log(const std::string& message) const {
    if (common_.verbose) std::cerr << "[" << command_ << "] " << message << "\n";
  }

 private:
  std::string command_;
  const CommonOptions& common_;
  std::filesystem::path out_;
  StageTimer timer_;
  json meta_;
  std::vector<std::string> outputs_;
};

struct CountsSource {
  ObservedCounts counts;
  std::string description;
  std::optional<EquilibriumState> truth;
};

// Counts files are parsed before any computation starts.
std::optional<ObservedCounts> read_counts_file(const Problem& p, const DgpOptions& d) {
  if (d.counts.empty()) return std::nullopt;
  return ObservedCounts(p.network, io::read_counts_csv(d.counts));
}

// Synthetic counts are drawn at the true coefficients. With exogenous times they are the
// network loading at those times.
CountsSource obtain_counts(const Problem& p, const DgpOptions& d, std::optional<ObservedCounts> file_counts,
                           const Coefficients& truth, std::uint64_t seed, const SueOptions& sue,
                           const std::optional<Vector>& exogenous) {
  CountsSource s;
  if (file_counts) {
    s.counts = std::move(*file_counts);
    s.description = d.counts;
    return s;
  }
  const IncidenceData inc = build_incidence(p.network, p.paths, p.od);
  GeneratedCounts g = generate_counts(p.network, p.od, inc, dgp_config(truth, d, seed), sue, exogenous);
  s.counts = std::move(g.counts);
  s.truth = std::move(g.truth);
  s.description = "synthetic";
  return s;
}

std::optional<Vector> resolve_times(const std::string& mode, const Problem& p, const Coefficients& truth,
                                    const SueOptions& sue, bool allow_endogenous) {
  if (mode == "endogenous" && allow_endogenous) return std::nullopt;
  if (mode == "free-flow") return p.network.free_flow_times();
  if (mode == "equilibrium") {
    const IncidenceData inc = build_incidence(p.network, p.paths, p.od);
    const EquilibriumState s = solve_sue_logit(p.network, p.od, inc, truth, sue);
    if (!s.converged) std::cerr << "warning: equilibrium for exogenous travel times did not converge\n";
    return s.t;
  }
  throw StructuralError("unknown --times '" + mode + "'");
}

std::string residual_histogram_csv(const Vector& residuals) {
  std::ostringstream out;
  out << "bin_low,bin_high,count\n";
  const double lo = residuals.minCoeff();
  const double hi = residuals.maxCoeff();
  const auto bins = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(residuals.size())))) + 1;
  if (!(hi > lo)) {
    out << io::fmt(lo) << "," << io::fmt(hi) << "," << residuals.size() << "\n";
    return out.str();
  }
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    auto b = static_cast<std::size_t>((residuals[i] - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    out << io::fmt(lo + width * static_cast<double>(b)) << "," << io::fmt(lo + width * static_cast<double>(b + 1))
        << "," << counts[b] << "\n";
  }
  return out.str();
}

std::string trace_csv(const ConvergenceTrace& trace, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "iteration,stage";
  for (const auto& n : names) out << ",theta_" << n;
  out << ",objective,paths_added,paths_removed\n";
  for (const auto& r : trace) {
    out << r.iteration << "," << r.stage;
    for (Eigen::Index d = 0; d < r.theta.size(); ++d) out << "," << io::fmt(r.theta[d]);
    out << "," << io::fmt(r.objective) << "," << r.paths_added << "," << r.paths_removed << "\n";
  }
  return out.str();
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_equilibrate(const CommonOptions& c, double theta_t, const std::vector<std::string>& theta,
                    const SueCliOptions& s, const CLI::App& app, const CLI::App& sub) {
  const SueOptions sue = sue_options(s);
  Run run("equilibrate", c, app, sub);
  Problem p = run.timer().run("load", [&] { return load_problem(c); });
  const Coefficients coef = build_coefficients(p.network, theta_t, theta);
  const IncidenceData inc = build_incidence(p.network, p.paths, p.od);
  const EquilibriumState eq = run.timer().run("equilibrium", [&] { return solve_sue_logit(p.network, p.od, inc, coef, sue); });

  run.write("link_flows.csv", link_flows_csv(p.network, eq.x, eq.t));
  std::ostringstream paths;
  paths << "od_index,origin,destination,links,flow,probability\n";
  for (std::size_t w = 0; w < p.paths.od_count(); ++w) {
    for (std::size_t h = inc.od_offsets[w]; h < inc.od_offsets[w + 1]; ++h) {
      const auto i = static_cast<Eigen::Index>(h);
      paths << w << "," << p.od.pair(w).origin << "," << p.od.pair(w).destination << ","
            << link_list(p.network, p.paths.paths(w)[h - inc.od_offsets[w]]) << "," << io::fmt(eq.f[i]) << ","
            << io::fmt(eq.p[i]) << "\n";
    }
  }
  run.write("path_flows.csv", paths.str());
  std::ostringstream conv;
  conv << "iteration,objective,gap\n";
  for (std::size_t i = 0; i < eq.gap_trace.size(); ++i) {
    conv << i + 1 << "," << io::fmt(i < eq.objective_trace.size() ? eq.objective_trace[i] : std::nan("")) << ","
         << io::fmt(eq.gap_trace[i]) << "\n";
  }
  run.write("convergence.csv", conv.str());
  run.meta()["network"] = p.name;
  run.meta()["method"] = to_string(sue.method);
  run.meta()["iterations"] = eq.iterations;
  run.meta()["converged"] = eq.converged;
  std::cout << "equilibrium on " << p.name << ": " << eq.iterations << " iterations, "
            << (eq.converged ? "converged" : "NOT converged") << ", final gap "
            << io::fmt(eq.gap_trace.empty() ? 0.0 : eq.gap_trace.back()) << "\n";
  const int code = eq.converged ? kSuccess : kNonConvergence;
  if (!eq.converged) std::cerr << "error: equilibrium did not converge within " << sue.max_iterations << " iterations\n";
  run.finish(code);
  return code;
}

int cmd_estimate(const CommonOptions& c, const TruthOptions& t, const DgpOptions& d, const EstimatorOptions& e,
                 const SueCliOptions& s, const std::string& times_mode, const CLI::App& app, const CLI::App& sub) {
  const SueOptions sue = sue_options(s);
  Run run("estimate", c, app, sub);
  Problem p = run.timer().run("load", [&] { return load_problem(c); });
  add_irrelevant(p, d.irrelevant, c.seed);
  EstimationOptions opt = estimation_options(p, e, sue);
  const Coefficients truth = truth_coefficients(p, t);
  const Coefficients theta0 = build_coefficients(p.network, e.theta0_t, e.theta0);
  std::optional<ObservedCounts> file_counts = read_counts_file(p, d);
  opt.exogenous_times = run.timer().run("times", [&] { return resolve_times(times_mode, p, truth, sue, true); });
  const CountsSource src = run.timer().run(
      "counts", [&] { return obtain_counts(p, d, std::move(file_counts), truth, c.seed, sue, opt.exogenous_times); });
  if (src.truth) run.write("counts.csv", counts_csv(src.counts));
  run.log("estimating " + std::to_string(p.network.attribute_count() + 1) + " coefficients from " +
          std::to_string(src.counts.size()) + " counts");

  const EstimationReport rep = run.timer().run(
      "estimation", [&] { return estimate_with_inference(p.network, p.od, p.paths, src.counts, theta0, opt, e.alpha); });
  const EstimationResult& r = rep.result;
  const InferenceReport& inf = rep.inference;

  json coefs = json::array();
  bool unidentified = false;
  for (const auto& ci : inf.coefficients) {
    unidentified = unidentified || !ci.identified;
    coefs.push_back({{"name", ci.name},
                     {"estimate", ci.estimate},
                     {"std_error", nan_safe(ci.std_error)},
                     {"t_stat", nan_safe(ci.t_stat)},
                     {"p_value", nan_safe(ci.p_value)},
                     {"ci_low", nan_safe(ci.ci_low)},
                     {"ci_high", nan_safe(ci.ci_high)},
                     {"stars", ci.stars},
                     {"identified", ci.identified}});
  }
  std::vector<std::string> warnings = r.warnings;
  warnings.insert(warnings.end(), inf.warnings.begin(), inf.warnings.end());
  json report = {{"network", p.name},
                 {"od_source", p.od_source},
                 {"counts_source", src.description},
                 {"times", times_mode},
                 {"n_observations", inf.n},
                 {"k_estimated", inf.k},
                 {"theta", vector_json(r.theta.vector())},
                 {"coefficient_names", rep.coefficient_names},
                 {"coefficients", coefs},
                 {"objective", r.objective},
                 {"sigma2", inf.sigma2_hat},
                 {"condition_number", nan_safe(inf.condition_number)},
                 {"rss", inf.rss},
                 {"rss_null", inf.rss_null},
                 {"f_test", {{"f_stat", inf.f_null.f_stat}, {"p_value", inf.f_null.p_value}}},
                 {"fit",
                  {{"rmse", inf.fit.rmse}, {"nrmse", inf.fit.nrmse}, {"adjusted_pseudo_r2", inf.fit.adjusted_pseudo_r2}}},
                 {"alpha", e.alpha},
                 {"best_iteration", r.best_iteration},
                 {"inner_converged", r.inner_converged},
                 {"theta0", vector_json(theta0.vector())},
                 {"options",
                  {{"ngd_iterations", opt.ngd_iterations},
                   {"lm_iterations", opt.lm_iterations},
                   {"eta", opt.eta},
                   {"lm_damping", opt.lm_damping},
                   {"bilevel_iterations", opt.bilevel_iterations},
                   {"order", e.order}}},
                 {"warnings", warnings}};
  if (src.truth) report["theta_true"] = vector_json(truth.vector());
  if (const auto ci = p.network.attribute_index("c"); ci && r.theta.theta_z[static_cast<Eigen::Index>(*ci)] != 0.0) {
    report["value_of_time_per_hour"] = 60.0 * r.theta.theta_t / r.theta.theta_z[static_cast<Eigen::Index>(*ci)];
  }
  run.write("report.json", report.dump(2) + "\n");
  run.write("trace.csv", trace_csv(r.trace, rep.coefficient_names));
  const Vector predicted = src.counts.restrict(r.equilibrium.x);
  const Vector residuals = predicted - src.counts.values();
  run.write("residual_histogram.csv", residual_histogram_csv(residuals));
  std::ostringstream fit;
  fit << "link_id,observed,predicted,residual\n";
  for (std::size_t i = 0; i < src.counts.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    fit << src.counts.link_ids()[i] << "," << io::fmt(src.counts.values()[k]) << "," << io::fmt(predicted[k]) << ","
        << io::fmt(residuals[k]) << "\n";
  }
  run.write("link_fit.csv", fit.str());

  std::cout << "network " << p.name << " (od: " << p.od_source << ", counts: " << src.description
            << ", n = " << inf.n << ")\n";
  for (const auto& ci : inf.coefficients) {
    std::cout << "  " << ci.name << " = " << io::fmt(ci.estimate);
    if (ci.identified && std::isfinite(ci.t_stat)) {
      std::cout << " (t = " << io::fmt(ci.t_stat) << ", p = " << io::fmt(ci.p_value) << ")" << ci.stars;
    } else if (ci.identified && ci.std_error == 0.0) {
      std::cout << " (exact fit)" << ci.stars;
    } else if (!ci.identified) {
      std::cout << " (not identified)";
    }
    std::cout << "\n";
  }
  std::cout << "  objective = " << io::fmt(r.objective) << ", nrmse = " << io::fmt(inf.fit.nrmse) << "\n";
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  int code = kSuccess;
  if (!r.inner_converged) code = kNonConvergence;
  if (unidentified) code = kIdentifiability;
  run.finish(code);
  return code;
}

int cmd_scan(const CommonOptions& c, const TruthOptions& t, const DgpOptions& d, const SueCliOptions& s,
             const std::string& coefficient, double lo, double hi, double step, const std::string& times_mode,
             const CLI::App& app, const CLI::App& sub) {
  if (!(step > 0.0)) throw DomainError("--step must be positive");
  if (!(hi >= lo)) throw DomainError("--max must not be below --min");
  const SueOptions sue = sue_options(s);
  Run run("scan", c, app, sub);
  Problem p = run.timer().run("load", [&] { return load_problem(c); });
  add_irrelevant(p, d.irrelevant, c.seed);
  const Coefficients truth = truth_coefficients(p, t);
  const std::size_t d_index = coefficient_index(p.network, coefficient);
  std::optional<ObservedCounts> file_counts = read_counts_file(p, d);
  const Vector times = *run.timer().run("times", [&] { return resolve_times(times_mode, p, truth, sue, false); });
  const CountsSource src = run.timer().run(
      "counts", [&] { return obtain_counts(p, d, std::move(file_counts), truth, c.seed, sue, times); });
  if (src.truth) run.write("counts.csv", counts_csv(src.counts));
  const IncidenceData inc = build_incidence(p.network, p.paths, p.od);
  const OuterProblem problem(p.network, inc, p.od.vector(), times, src.counts, truth.psl_beta);
  const std::vector<std::size_t> free{d_index};
  const auto points = static_cast<std::size_t>(std::floor((hi - lo) / step * (1.0 + 1e-12))) + 1;

  auto sign = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  std::ostringstream out;
  out << "theta,objective,derivative,sign_first,sign_second\n";
  int changes = 0;
  int last = 0;
  run.timer().run("scan", [&] {
    Vector theta = truth.vector();
    for (std::size_t i = 0; i < points; ++i) {
      theta[static_cast<Eigen::Index>(d_index)] = lo + step * static_cast<double>(i);
      const LoadingResult l = problem.load(theta);
      const double value = outer_objective(l.x, src.counts);
      const double first = outer_gradient(problem.jacobian(l, free), l.x, src.counts)[0];
      const double second =
          second_derivative_diag(inc, p.od.vector(), l.p, problem.path_attrs(), l.x, src.counts, free)[0];
      const int s1 = sign(first);
      if (s1 != 0) {
        if (last != 0 && s1 != last) ++changes;
        last = s1;
      }
      out << io::fmt(theta[static_cast<Eigen::Index>(d_index)]) << "," << io::fmt(value) << "," << io::fmt(first)
          << "," << s1 << "," << sign(second) << "\n";
    }
  });
  run.write("scan.csv", out.str());
  run.meta()["network"] = p.name;
  run.meta()["points"] = points;
  run.meta()["first_derivative_sign_changes"] = changes;
  std::cout << "scan of " << coefficient << " on " << p.name << ": " << points << " points, " << changes
            << " sign change(s) in the first derivative\n";
  run.finish(kSuccess);
  return kSuccess;
}

int cmd_simulate(const CommonOptions& c, const TruthOptions& t, const DgpOptions& d, const SueCliOptions& s,
                 const std::string& times_mode, const CLI::App& app, const CLI::App& sub) {
  const SueOptions sue = sue_options(s);
  Run run("simulate", c, app, sub);
  Problem p = run.timer().run("load", [&] { return load_problem(c); });
  add_irrelevant(p, d.irrelevant, c.seed);
  const Coefficients truth = truth_coefficients(p, t);
  const std::optional<Vector> times = resolve_times(times_mode, p, truth, sue, true);
  DgpOptions synthetic = d;
  synthetic.counts.clear();
  const CountsSource src =
      run.timer().run("counts", [&] { return obtain_counts(p, synthetic, std::nullopt, truth, c.seed, sue, times); });
  run.write("counts.csv", counts_csv(src.counts));
  run.write("truth_link_flows.csv", link_flows_csv(p.network, src.truth->x, src.truth->t));
  run.meta()["network"] = p.name;
  run.meta()["theta_true"] = vector_json(truth.vector());
  run.meta()["coefficient_names"] = coefficient_names(p.network);
  std::cout << "simulated " << src.counts.size() << " counts on " << p.name << "\n";
  const int code = src.truth->converged ? kSuccess : kNonConvergence;
  if (code != kSuccess) std::cerr << "error: ground-truth equilibrium did not converge\n";
  run.finish(code);
  return code;
}

struct MonteCarloOptions {
  std::string preset;
  std::vector<std::string> levels;
  std::size_t replicates = 30;
  std::size_t jobs = 1;
  double od_noise = 0.0;
  double od_scale = 1.0;
  double theta0_half_width = 1.0;
  std::string times = "exogenous";
};

struct Level {
  std::string label;
  MonteCarloConfig config;
};

std::vector<Level> preset_levels(const MonteCarloOptions& m, const MonteCarloConfig& base) {
  static const std::map<std::string, std::vector<std::string>> defaults{
      {"coverage", {"0.25", "0.5", "0.75"}},
      {"count-noise", {"0.05", "0.1", "0.25"}},
      {"od-noise", {"0.05", "0.1", "0.25"}},
      {"od-scale", {"0.8", "0.9", "1", "1.1", "1.2"}},
      {"irrelevant-attrs", {"ngd", "lm", "ngd-lm"}},
      {"congestion", {"exogenous", "endogenous"}}};
  if (m.preset.empty()) {
    if (!m.levels.empty()) throw StructuralError("--levels requires --preset");
    return {{"base", base}};
  }
  const auto it = defaults.find(m.preset);
  if (it == defaults.end()) throw StructuralError("unknown preset '" + m.preset + "'");
  const std::vector<std::string> labels = m.levels.empty() ? it->second : m.levels;
  std::vector<Level> out;
  for (const auto& label : labels) {
    Level l{label, base};
    auto number = [&] {
      const auto [name, value] = parse_assignment("level=" + label);
      return value;
    };
    if (m.preset == "coverage") {
      l.config.dgp.sensor_coverage = number();
    } else if (m.preset == "count-noise") {
      l.config.dgp.noise_std_fraction = number();
    } else if (m.preset == "od-noise") {
      l.config.dgp.od_noise_fraction = number();
    } else if (m.preset == "od-scale") {
      // Level = factor that maps the reference matrix back to the truth.
      const double level = number();
      if (!(level > 0.0)) throw DomainError("od-scale levels must be positive");
      l.config.dgp.od_scale_factor = 1.0 / level;
    } else if (m.preset == "irrelevant-attrs") {
      if (l.config.dgp.irrelevant_attribute_count == 0) l.config.dgp.irrelevant_attribute_count = 6;
      auto& e = l.config.estimation;
      if (label == "ngd") {
        e.order = OptimizerOrder::ngd_then_lm;
        e.lm_iterations = 0;
      } else if (label == "lm") {
        // First stage is LM for T1 steps.
        e.order = OptimizerOrder::lm_then_ngd;
        e.lm_iterations = 0;
      } else if (label == "ngd-lm") {
        e.order = OptimizerOrder::ngd_then_lm;
      } else {
        throw StructuralError("irrelevant-attrs levels are ngd, lm or ngd-lm; got '" + label + "'");
      }
    } else if (m.preset == "congestion") {
      if (label == "exogenous") {
        l.config.exogenous_times = true;
      } else if (label == "endogenous") {
        l.config.exogenous_times = false;
      } else {
        throw StructuralError("congestion levels are exogenous or endogenous; got '" + label + "'");
      }
    }
    l.config.dgp.validate();
    out.push_back(std::move(l));
  }
  return out;
}

int cmd_montecarlo(const CommonOptions& c, const TruthOptions& t, const DgpOptions& d, const EstimatorOptions& e,
                   const SueCliOptions& s, const MonteCarloOptions& m, const CLI::App& app, const CLI::App& sub) {
  if (m.replicates < 1) throw DomainError("--replicates must be at least 1");
  if (m.jobs < 1) throw DomainError("--jobs must be at least 1");
  if (!d.counts.empty()) throw StructuralError("montecarlo generates its own counts; --counts is not accepted");
  const SueOptions sue = sue_options(s);
  Run run("montecarlo", c, app, sub);
  const Problem p = run.timer().run("load", [&] { return load_problem(c); });

  MonteCarloConfig base;
  base.replicates = m.replicates;
  base.jobs = m.jobs;
  base.alpha = e.alpha;
  base.theta0_half_width = m.theta0_half_width;
  if (m.times != "exogenous" && m.times != "endogenous") throw StructuralError("--times must be exogenous or endogenous");
  base.exogenous_times = m.times == "exogenous";
  base.dgp = dgp_config(truth_coefficients(p, t), d, c.seed);
  base.dgp.od_noise_fraction = m.od_noise;
  base.dgp.od_scale_factor = m.od_scale;
  base.dgp.validate();
  // Estimation options refer to the augmented coefficient list when irrelevant attributes are added.
  Problem augmented = p;
  add_irrelevant(augmented, std::max<std::size_t>(d.irrelevant, m.preset == "irrelevant-attrs" ? 6 : 0), c.seed);
  base.estimation = estimation_options(augmented, e, sue);
  const std::vector<Level> levels = preset_levels(m, base);

  std::ostringstream reps;
  std::ostringstream summary_csv;
  json summary = json::array();
  bool header = false;
  for (const Level& level : levels) {
    run.log("level " + level.label);
    const MonteCarloSummary mc =
        run.timer().run("level " + level.label, [&] { return run_monte_carlo(p.network, p.od, p.paths, level.config); });
    if (!header) {
      reps << "level,replicate,seed,failed";
      for (const auto& n : mc.coefficient_names) reps << ",est_" << n;
      for (const auto& n : mc.coefficient_names) reps << ",t_" << n;
      for (const auto& n : mc.coefficient_names) reps << ",p_" << n;
      reps << ",nrmse,objective\n";
      summary_csv << "level,replicates,failures";
      for (const auto& n : mc.coefficient_names) summary_csv << ",bias_" << n;
      summary_csv << ",vot_bias,mean_nrmse,false_negative_rate,false_positive_rate\n";
      header = true;
    }
    const auto k = static_cast<Eigen::Index>(mc.coefficient_names.size());
    for (const auto& r : mc.replicates) {
      reps << level.label << "," << r.id << "," << r.seed << "," << (r.failed ? 1 : 0);
      for (const Vector* v : {&r.estimates, &r.t_stats, &r.p_values}) {
        for (Eigen::Index i = 0; i < k; ++i) reps << "," << (r.failed ? "nan" : io::fmt((*v)[i]));
      }
      reps << "," << (r.failed ? "nan" : io::fmt(r.nrmse)) << "," << (r.failed ? "nan" : io::fmt(r.objective))
           << "\n";
      if (r.failed) std::cerr << "warning: level " << level.label << " replicate " << r.id << " failed: " << r.error << "\n";
    }
    summary_csv << level.label << "," << mc.replicates.size() << "," << mc.failures;
    for (Eigen::Index i = 0; i < k; ++i) summary_csv << "," << io::fmt(mc.bias[i]);
    summary_csv << "," << io::fmt(mc.vot_bias) << "," << io::fmt(mc.mean_nrmse) << ","
                << io::fmt(mc.false_negative_rate) << "," << io::fmt(mc.false_positive_rate) << "\n";
    summary.push_back({{"level", level.label},
                       {"replicates", mc.replicates.size()},
                       {"failures", mc.failures},
                       {"coefficient_names", mc.coefficient_names},
                       {"truth", vector_json(mc.truth)},
                       {"bias", vector_json(mc.bias)},
                       {"vot_bias", nan_safe(mc.vot_bias)},
                       {"mean_nrmse", nan_safe(mc.mean_nrmse)},
                       {"false_negative_rate", nan_safe(mc.false_negative_rate)},
                       {"false_positive_rate", nan_safe(mc.false_positive_rate)}});
    std::cout << "level " << level.label << ": FN " << io::fmt(mc.false_negative_rate) << ", FP "
              << io::fmt(mc.false_positive_rate) << ", NRMSE " << io::fmt(mc.mean_nrmse) << ", failures "
              << mc.failures << "/" << mc.replicates.size() << "\n";
  }
  run.write("replicates.csv", reps.str());
  run.write("summary.csv", summary_csv.str());
  run.write("summary.json", json({{"network", p.name}, {"preset", m.preset}, {"levels", summary}}).dump(2) + "\n");
  run.meta()["network"] = p.name;
  run.finish(kSuccess);
  return kSuccess;
}

void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--config", "INI file of option = value lines; command-line flags take precedence");
  sub->add_option("--network", c.network, "Builtin name (toy, wang, lochan, yang, siouxfalls) or TNTP network file")
      ->capture_default_str();
  sub->add_option("--od", c.od, "OD demand file (TNTP trips or CSV origin,destination,demand)");
  sub->add_option("--attributes", c.attributes, "Link attribute CSV (link_id,<attr>...)");
  sub->add_flag("--distorted-od", c.distorted_od, "Use the distorted OD vector of the yang network");
  sub->add_option("--paths-k", c.paths_k, "k shortest paths per OD for Sioux Falls and file networks")
      ->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  sub->add_flag("-v,--verbose", c.verbose, "Progress on stderr");
}

void add_truth(CLI::App* sub, TruthOptions& t) {
  sub->add_option("--true-theta-t", t.theta_t, "True travel-time coefficient")->capture_default_str();
  sub->add_option("--true-theta", t.theta, "True attribute coefficient name=value (repeatable)");
}

void add_dgp(CLI::App* sub, DgpOptions& d, bool counts_file) {
  if (counts_file) sub->add_option("--counts", d.counts, "Observed counts CSV (link_id,count); synthetic if absent");
  sub->add_option("--noise", d.noise, "Count noise standard deviation as a fraction of the mean count")
      ->capture_default_str();
  sub->add_option("--coverage", d.coverage, "Fraction of links with sensors")->capture_default_str();
  sub->add_option("--irrelevant", d.irrelevant, "Number of irrelevant standard-Gaussian attributes to append")
      ->capture_default_str();
}

void add_sue(CLI::App* sub, SueCliOptions& s) {
  sub->add_option("--method", s.method, "Equilibrium algorithm: fw or msa")->capture_default_str();
  sub->add_option("--sue-max-iterations", s.max_iterations, "Equilibrium iteration cap")->capture_default_str();
  sub->add_option("--sue-tolerance", s.tolerance, "Relative flow gap for equilibrium convergence")
      ->capture_default_str();
  sub->add_option("--line-search-step", s.line_search_step, "Frank-Wolfe line-search grid step on [0,1]")
      ->capture_default_str();
}

void add_estimator(CLI::App* sub, EstimatorOptions& e, bool with_theta0) {
  if (with_theta0) {
    sub->add_option("--theta0-t", e.theta0_t, "Initial travel-time coefficient")->capture_default_str();
    sub->add_option("--theta0", e.theta0, "Initial attribute coefficient name=value (repeatable)");
  }
  sub->add_option("--ngd-iterations", e.ngd_iterations, "First-stage iterations (T1)")->capture_default_str();
  sub->add_option("--lm-iterations", e.lm_iterations, "Second-stage iterations (T2)")->capture_default_str();
  sub->add_option("--eta", e.eta, "NGD learning rate; 0 selects 2 for small builtins and 0.5 otherwise")
      ->capture_default_str();
  sub->add_option("--lm-damping", e.lm_damping, "Levenberg-Marquardt damping")->capture_default_str();
  sub->add_option("--bilevel-iterations", e.bilevel_iterations, "Alternating iterations (I)")->capture_default_str();
  sub->add_option("--order", e.order, "Optimizer order: ngd-lm or lm-ngd")->capture_default_str();
  sub->add_option("--estimate", e.estimate, "Coefficients to estimate (default all)")->delimiter(',');
  sub->add_option("--sign", e.signs, "Expected sign name=-1|1 (repeatable)");
  sub->add_flag("--column-generation", e.column_generation, "Add attractive paths each iteration");
  sub->add_option("--paths-per-generation", e.paths_per_generation, "Paths added per selected OD")
      ->capture_default_str();
  sub->add_option("--od-coverage", e.od_coverage, "Fraction of OD pairs eligible for column generation")
      ->capture_default_str();
  sub->add_option("--od-per-iteration", e.od_per_iteration, "Fraction of OD pairs visited per iteration")
      ->capture_default_str();
  sub->add_flag("--path-selection", e.path_selection, "Keep only the best paths per OD");
  sub->add_option("--max-paths-per-od", e.max_paths_per_od, "Path budget per OD for path selection")
      ->capture_default_str();
  sub->add_option("--alpha", e.alpha, "Significance level")->capture_default_str();
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Splices config entries (top level or a section named after the subcommand) after the
// subcommand token, skipping options already present on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::set<std::string>& subcommands) {
  const auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) { return subcommands.count(a) > 0; });
  if (sub == args.end()) return args;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  if (!std::filesystem::exists(path)) throw StructuralError("cannot open config file: " + path);
  std::vector<std::string> injected;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == *sub)) continue;
    if (item.name.empty() || item.name == "++" || item.name == "--") continue;
    const std::string flag = (item.name.size() == 1 ? "-" : "--") + item.name;
    if (given_on_command_line(args, flag)) continue;
    if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
      if (item.inputs[0] == "true") injected.push_back(flag);
      continue;
    }
    for (const auto& v : item.inputs) {
      injected.push_back(flag);
      injected.push_back(v);
    }
  }
  args.insert(sub + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SUE-logit equilibrium and utility estimation from traffic counts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOptions common;
  TruthOptions truth;
  DgpOptions dgp;
  EstimatorOptions est;
  SueCliOptions sue;
  MonteCarloOptions mc;
  double theta_t = -1.0;
  std::vector<std::string> theta;
  std::string times = "endogenous";
  std::string scan_times = "equilibrium";
  std::string scan_coef = kTravelTimeName;
  double scan_min = -15.0, scan_max = 15.0, scan_step = 0.1;

  CLI::App* eq = app.add_subcommand("equilibrate", "Solve SUE-logit and write link and path flows");
  add_common(eq, common);
  eq->add_option("--theta-t", theta_t, "Travel-time coefficient")->capture_default_str();
  eq->add_option("--theta", theta, "Attribute coefficient name=value (repeatable)");
  add_sue(eq, sue);

  CLI::App* es = app.add_subcommand("estimate", "Estimate utility coefficients from link counts");
  add_common(es, common);
  add_truth(es, truth);
  add_dgp(es, dgp, true);
  add_estimator(es, est, true);
  add_sue(es, sue);
  es->add_option("--times", times, "endogenous, or exogenous at free-flow or equilibrium (true coefficients) times")
      ->check(CLI::IsMember({"endogenous", "free-flow", "equilibrium"}))
      ->capture_default_str();

  CLI::App* sc = app.add_subcommand("scan", "Objective and derivative signs over a coefficient grid");
  add_common(sc, common);
  add_truth(sc, truth);
  add_dgp(sc, dgp, true);
  add_sue(sc, sue);
  sc->add_option("--coefficient", scan_coef, "Coefficient to vary; others stay at their true values")
      ->capture_default_str();
  sc->add_option("--min", scan_min, "Grid start")->capture_default_str();
  sc->add_option("--max", scan_max, "Grid end")->capture_default_str();
  sc->add_option("--step", scan_step, "Grid step")->capture_default_str();
  sc->add_option("--times", scan_times, "Exogenous times: equilibrium (true coefficients) or free-flow")
      ->check(CLI::IsMember({"free-flow", "equilibrium"}))
      ->capture_default_str();

  CLI::App* si = app.add_subcommand("simulate", "Generate synthetic counts");
  add_common(si, common);
  add_truth(si, truth);
  add_dgp(si, dgp, false);
  add_sue(si, sue);
  si->add_option("--times", times, "endogenous, or exogenous free-flow or equilibrium times")
      ->check(CLI::IsMember({"endogenous", "free-flow", "equilibrium"}))
      ->capture_default_str();

  CLI::App* mo = app.add_subcommand("montecarlo", "Monte Carlo experiments with optional presets");
  add_common(mo, common);
  add_truth(mo, truth);
  add_dgp(mo, dgp, false);
  add_estimator(mo, est, false);
  add_sue(mo, sue);
  mo->add_option("--preset", mc.preset,
                 "coverage, count-noise, od-noise, od-scale, irrelevant-attrs or congestion");
  mo->add_option("--levels", mc.levels, "Override the preset levels")->delimiter(',');
  mo->add_option("--replicates", mc.replicates, "Replicates per level")->capture_default_str();
  mo->add_option("--jobs", mc.jobs, "Parallel replicates")->capture_default_str();
  mo->add_option("--od-noise", mc.od_noise, "OD cell noise as a fraction of the mean cell")->capture_default_str();
  mo->add_option("--od-scale", mc.od_scale, "Factor applied to the OD matrix given to the estimator")
      ->capture_default_str();
  mo->add_option("--theta0-half-width", mc.theta0_half_width, "theta0 ~ U(truth -/+ half width)")
      ->capture_default_str();
  mo->add_option("--times", mc.times, "exogenous or endogenous travel times")->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args), {"equilibrate", "estimate", "scan", "simulate", "montecarlo"});
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*eq) return cmd_equilibrate(common, theta_t, theta, sue, app, *eq);
    if (*es) return cmd_estimate(common, truth, dgp, est, sue, times, app, *es);
    if (*sc) return cmd_scan(common, truth, dgp, sue, scan_coef, scan_min, scan_max, scan_step, scan_times, app, *sc);
    if (*si) return cmd_simulate(common, truth, dgp, sue, times, app, *si);
    if (*mo) return cmd_montecarlo(common, truth, dgp, est, sue, mc, app, *mo);
  } catch (const IdentifiabilityError& e) {
    std::cerr << "error: " << e.what();
    for (const auto& name : e.coefficients()) std::cerr << " [" << name << "]";
    std::cerr << "\n";
    return kIdentifiability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
