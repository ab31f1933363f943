#pragma once

#include "suelogit/core.hpp"
#include "suelogit/network.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace suelogit {

/// A route as an ordered sequence of link indices.
using Path = std::vector<LinkIndex>;

/// Lexicographic comparison on external link ids; the tie-break used everywhere.
inline bool path_id_less(const Network& network, const Path& a, const Path& b) {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&](LinkIndex x, LinkIndex y) { return network.link(x).id < network.link(y).id; });
}

inline double path_cost(const Path& path, const Vector& link_costs) {
  double c = 0.0;
  for (LinkIndex a : path) c += link_costs[static_cast<Eigen::Index>(a)];
  return c;
}

/// Throws unless `path` is a connected acyclic walk from origin to destination.
inline void validate_path(const Network& network, NodeId origin, NodeId destination, const Path& path) {
  if (path.empty()) throw StructuralError("empty path");
  std::set<NodeId> visited{origin};
  NodeId at = origin;
  for (LinkIndex a : path) {
    if (a >= network.link_count()) throw StructuralError("path references unknown link index");
    const Link& link = network.link(a);
    if (link.from_node != at) {
      throw StructuralError("path is not connected at link " + std::to_string(link.id));
    }
    at = link.to_node;
    if (!visited.insert(at).second) {
      throw StructuralError("path revisits node " + std::to_string(at));
    }
  }
  if (at != destination) throw StructuralError("path does not end at its destination");
}

/// Per-OD consideration sets. The global path order H concatenates OD sets in OD order.
class PathSet {
 public:
  PathSet() = default;
  explicit PathSet(std::vector<std::vector<Path>> per_od) : per_od_(std::move(per_od)) {}

  std::size_t od_count() const noexcept { return per_od_.size(); }
  const std::vector<Path>& paths(std::size_t w) const { return per_od_.at(w); }
  std::vector<Path>& paths(std::size_t w) { return per_od_.at(w); }
  const std::vector<std::vector<Path>>& all() const noexcept { return per_od_; }

  std::size_t path_count() const {
    std::size_t n = 0;
    for (const auto& s : per_od_) n += s.size();
    return n;
  }

  /// Adds `path` to OD `w` unless an identical sequence is already present.
  bool add(std::size_t w, const Path& path) {
    auto& set = per_od_.at(w);
    if (std::find(set.begin(), set.end(), path) != set.end()) return false;
    set.push_back(path);
    return true;
  }

  void validate(const Network& network, const ODDemand& od) const {
    if (per_od_.size() != od.size()) throw StructuralError("path set OD count differs from demand");
    for (std::size_t w = 0; w < per_od_.size(); ++w) {
      const ODPair& pair = od.pair(w);
      const auto& set = per_od_[w];
      if (pair.demand > 0.0 && set.empty()) {
        throw StructuralError("OD pair " + std::to_string(pair.origin) + "-" +
                              std::to_string(pair.destination) + " with demand has no path");
      }
      std::set<Path> unique;
      for (const Path& p : set) {
        validate_path(network, pair.origin, pair.destination, p);
        if (!unique.insert(p).second) throw StructuralError("duplicate path within an OD pair");
      }
    }
  }

 private:
  std::vector<std::vector<Path>> per_od_;
};

/// Path-size factors for one consideration set.
///
/// PS_h = sum over links a of h of (l_a / L_h) / N_a, where N_a counts the paths
/// of the set that use a. Disjoint paths get 1; full overlap of n paths gives 1/n.
inline std::vector<double> path_size_factors(const std::vector<Path>& paths, const Vector& link_lengths) {
  if (paths.empty()) throw DomainError("path_size_factors: empty path set");
  std::map<LinkIndex, int> usage;
  for (const Path& p : paths) {
    std::set<LinkIndex> links(p.begin(), p.end());
    for (LinkIndex a : links) ++usage[a];
  }
  std::vector<double> ps;
  ps.reserve(paths.size());
  for (const Path& p : paths) {
    const double total = path_cost(p, link_lengths);
    if (!(total > 0.0)) throw DomainError("path_size_factors: zero-length path");
    double s = 0.0;
    for (LinkIndex a : p) s += link_lengths[static_cast<Eigen::Index>(a)] / total / usage[a];
    ps.push_back(s);
  }
  return ps;
}

/// Sparse link-path and OD-path incidence for a fixed path set.
struct IncidenceData {
  SparseMatrix link_path;     // |A| x |H|
  SparseMatrix od_path;       // |W| x |H|
  std::vector<std::size_t> od_offsets;  // paths of OD w are [od_offsets[w], od_offsets[w+1])
  std::vector<std::size_t> od_of_path;
  Vector path_size_log;       // ln PS_h

  std::size_t path_count() const noexcept { return od_of_path.size(); }
  std::size_t od_count() const noexcept { return od_offsets.empty() ? 0 : od_offsets.size() - 1; }
  std::size_t link_count() const noexcept { return static_cast<std::size_t>(link_path.rows()); }
};

inline IncidenceData build_incidence(const Network& network, const PathSet& paths, const ODDemand& od) {
  if (paths.od_count() != od.size()) throw StructuralError("build_incidence: OD count mismatch");
  IncidenceData inc;
  const std::size_t n_paths = paths.path_count();
  const Vector lengths = network.lengths();
  std::vector<Eigen::Triplet<double>> link_triplets;
  std::vector<Eigen::Triplet<double>> od_triplets;
  inc.od_offsets.reserve(od.size() + 1);
  inc.od_of_path.reserve(n_paths);
  inc.path_size_log.resize(static_cast<Eigen::Index>(n_paths));
  std::size_t h = 0;
  for (std::size_t w = 0; w < od.size(); ++w) {
    inc.od_offsets.push_back(h);
    const auto& set = paths.paths(w);
    for (const Path& p : set) validate_path(network, od.pair(w).origin, od.pair(w).destination, p);
    std::vector<double> ps;
    if (!set.empty()) ps = path_size_factors(set, lengths);
    for (std::size_t j = 0; j < set.size(); ++j, ++h) {
      const Path& p = set[j];
      for (LinkIndex a : p) {
        link_triplets.emplace_back(static_cast<int>(a), static_cast<int>(h), 1.0);
      }
      od_triplets.emplace_back(static_cast<int>(w), static_cast<int>(h), 1.0);
      inc.od_of_path.push_back(w);
      inc.path_size_log[static_cast<Eigen::Index>(h)] = std::log(ps[j]);
    }
  }
  inc.od_offsets.push_back(h);
  inc.link_path.resize(static_cast<Eigen::Index>(network.link_count()), static_cast<Eigen::Index>(n_paths));
  inc.link_path.setFromTriplets(link_triplets.begin(), link_triplets.end());
  inc.od_path.resize(static_cast<Eigen::Index>(od.size()), static_cast<Eigen::Index>(n_paths));
  inc.od_path.setFromTriplets(od_triplets.begin(), od_triplets.end());
  return inc;
}

/// All acyclic paths between two nodes, sorted by link-id sequence.
inline std::vector<Path> enumerate_acyclic_paths(const Network& network, NodeId origin, NodeId destination) {
  std::vector<Path> out;
  Path current;
  std::set<NodeId> on_path{origin};
  std::function<void(NodeId)> dfs = [&](NodeId at) {
    if (at == destination) {
      out.push_back(current);
      return;
    }
    for (LinkIndex a : network.outgoing(at)) {
      const NodeId next = network.link(a).to_node;
      if (on_path.count(next)) continue;
      on_path.insert(next);
      current.push_back(a);
      dfs(next);
      current.pop_back();
      on_path.erase(next);
    }
  };
  dfs(origin);
  std::sort(out.begin(), out.end(), [&](const Path& a, const Path& b) { return path_id_less(network, a, b); });
  return out;
}

inline PathSet enumerate_all_paths(const Network& network, const ODDemand& od) {
  std::vector<std::vector<Path>> sets;
  sets.reserve(od.size());
  for (const ODPair& w : od.pairs()) sets.push_back(enumerate_acyclic_paths(network, w.origin, w.destination));
  return PathSet(std::move(sets));
}

namespace detail {

struct SearchResult {
  double cost = 0.0;
  Path path;
};

// Dijkstra over nonnegative costs with banned links and nodes.
inline std::optional<SearchResult> shortest_path(const Network& network, const Vector& costs, NodeId source,
                                                 NodeId target, const std::vector<bool>& banned_links,
                                                 const std::set<NodeId>& banned_nodes) {
  std::map<NodeId, double> dist;
  std::map<NodeId, LinkIndex> pred;
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  std::set<NodeId> settled;
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (!settled.insert(u).second) continue;
    if (u == target) break;
    for (LinkIndex a : network.outgoing(u)) {
      if (banned_links[a]) continue;
      const NodeId v = network.link(a).to_node;
      if (banned_nodes.count(v) || settled.count(v)) continue;
      const double nd = d + costs[static_cast<Eigen::Index>(a)];
      auto it = dist.find(v);
      const bool better = it == dist.end() || nd < it->second ||
                          (nd == it->second && network.link(a).id < network.link(pred[v]).id);
      if (better) {
        dist[v] = nd;
        pred[v] = a;
        heap.emplace(nd, v);
      }
    }
  }
  if (!settled.count(target)) return std::nullopt;
  SearchResult r;
  r.cost = dist[target];
  for (NodeId at = target; at != source;) {
    const LinkIndex a = pred.at(at);
    r.path.push_back(a);
    at = network.link(a).from_node;
  }
  std::reverse(r.path.begin(), r.path.end());
  return r;
}

}  // namespace detail

struct PathSearchWarning {
  NodeId origin = 0;
  NodeId destination = 0;
  std::string message;
};

struct KShortestResult {
  std::vector<std::vector<Path>> paths;  // one list per requested OD pair
  std::vector<PathSearchWarning> warnings;
};

/// Yen's k shortest simple paths for a list of (origin, destination) pairs.
///
/// Negative costs are shifted up by their minimum so the search stays valid;
/// returned lists are ordered by shifted cost, ties by link-id sequence.
inline KShortestResult k_shortest_paths(const Network& network, const Vector& link_costs,
                                        const std::vector<std::pair<NodeId, NodeId>>& od_pairs, std::size_t k) {
  if (k < 1) throw DomainError("k_shortest_paths: k must be positive");
  if (link_costs.size() != static_cast<Eigen::Index>(network.link_count())) {
    throw StructuralError("k_shortest_paths: cost vector size mismatch");
  }
  if (!link_costs.allFinite()) throw DomainError("k_shortest_paths: non-finite link cost");
  Vector costs = link_costs;
  const double lowest = costs.size() ? costs.minCoeff() : 0.0;
  if (lowest < 0.0) costs.array() -= lowest;

  KShortestResult result;
  const std::vector<bool> no_banned_links(network.link_count(), false);
  for (const auto& [origin, destination] : od_pairs) {
    std::vector<detail::SearchResult> accepted;
    auto first = detail::shortest_path(network, costs, origin, destination, no_banned_links, {});
    if (!first) {
      result.paths.emplace_back();
      result.warnings.push_back({origin, destination, "no path between origin and destination"});
      continue;
    }
    accepted.push_back(*first);
    auto candidate_less = [&](const detail::SearchResult& a, const detail::SearchResult& b) {
      if (a.cost != b.cost) return a.cost < b.cost;
      return path_id_less(network, a.path, b.path);
    };
    std::vector<detail::SearchResult> candidates;
    while (accepted.size() < k) {
      const Path& last = accepted.back().path;
      NodeId spur_node = origin;
      for (std::size_t i = 0; i < last.size(); ++i) {
        if (i > 0) spur_node = network.link(last[i - 1]).to_node;
        const Path root(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(i));
        std::vector<bool> banned_links(network.link_count(), false);
        for (const auto& acc : accepted) {
          if (acc.path.size() > i && std::equal(root.begin(), root.end(), acc.path.begin())) {
            banned_links[acc.path[i]] = true;
          }
        }
        std::set<NodeId> banned_nodes{origin};
        for (LinkIndex a : root) banned_nodes.insert(network.link(a).to_node);
        banned_nodes.erase(spur_node);
        auto spur = detail::shortest_path(network, costs, spur_node, destination, banned_links, banned_nodes);
        if (!spur) continue;
        detail::SearchResult total;
        total.path = root;
        total.path.insert(total.path.end(), spur->path.begin(), spur->path.end());
        total.cost = path_cost(total.path, costs);
        auto same = [&](const detail::SearchResult& s) { return s.path == total.path; };
        if (std::none_of(accepted.begin(), accepted.end(), same) &&
            std::none_of(candidates.begin(), candidates.end(), same)) {
          candidates.push_back(std::move(total));
        }
      }
      if (candidates.empty()) break;
      auto best = std::min_element(candidates.begin(), candidates.end(), candidate_less);
      accepted.push_back(std::move(*best));
      candidates.erase(best);
    }
    std::vector<Path> list;
    list.reserve(accepted.size());
    for (auto& acc : accepted) list.push_back(std::move(acc.path));
    result.paths.push_back(std::move(list));
  }
  return result;
}

/// k shortest paths for every OD pair of a demand, as a full PathSet.
inline PathSet k_shortest_path_set(const Network& network, const ODDemand& od, const Vector& link_costs,
                                   std::size_t k, std::vector<PathSearchWarning>* warnings = nullptr) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(od.size());
  for (const ODPair& w : od.pairs()) pairs.emplace_back(w.origin, w.destination);
  auto r = k_shortest_paths(network, link_costs, pairs, k);
  if (warnings) *warnings = r.warnings;
  return PathSet(std::move(r.paths));
}

}  // namespace suelogit
