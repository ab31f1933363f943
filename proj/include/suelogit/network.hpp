#pragma once

#include "suelogit/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace suelogit {

struct Link {
  int id = 0;
  NodeId from_node = 0;
  NodeId to_node = 0;
  double free_flow_time = 1.0;  // minutes
  double capacity = 1.0;        // vehicles/hour
  double bpr_alpha = 0.15;
  double bpr_beta = 4.0;
  double length = 0.0;
  bool is_connector = false;
};

inline void validate_link(const Link& link) {
  if (link.from_node == link.to_node) {
    throw StructuralError("link " + std::to_string(link.id) + " is a self loop");
  }
  if (!(link.free_flow_time > 0.0) || !(link.capacity > 0.0)) {
    throw StructuralError("link " + std::to_string(link.id) +
                          " needs positive free-flow time and capacity");
  }
  if (link.bpr_alpha < 0.0 || link.bpr_beta < 1.0) {
    throw StructuralError("link " + std::to_string(link.id) + " has invalid BPR shape parameters");
  }
  if (link.length < 0.0) {
    throw StructuralError("link " + std::to_string(link.id) + " has negative length");
  }
}

/// BPR link performance function t0 * (1 + alpha * (flow / capacity)^beta).
inline double bpr_travel_time(const Link& link, double flow) {
  if (flow < 0.0) throw DomainError("bpr_travel_time: negative flow");
  return link.free_flow_time * (1.0 + link.bpr_alpha * std::pow(flow / link.capacity, link.bpr_beta));
}

/// Closed-form antiderivative of the BPR function from zero to `flow`.
inline double bpr_integral(const Link& link, double flow) {
  if (flow < 0.0) throw DomainError("bpr_integral: negative flow");
  const double b1 = link.bpr_beta + 1.0;
  return link.free_flow_time * flow +
         link.free_flow_time * link.bpr_alpha * std::pow(flow, b1) /
             (b1 * std::pow(link.capacity, link.bpr_beta));
}

/// Directed road network with an exogenous attribute matrix (one row per link).
///
/// Immutable after construction. Link indices are positions in `links()`;
/// link ids are the external labels (1-based in TNTP files).
class Network {
 public:
  Network() = default;

  Network(std::vector<Link> links, Matrix attributes, std::vector<std::string> attribute_names)
      : links_(std::move(links)),
        attributes_(std::move(attributes)),
        attribute_names_(std::move(attribute_names)) {
    if (attributes_.size() == 0) attributes_.resize(static_cast<Eigen::Index>(links_.size()), 0);
    if (attributes_.rows() != static_cast<Eigen::Index>(links_.size())) {
      throw StructuralError("attribute matrix rows must equal link count");
    }
    if (attributes_.cols() != static_cast<Eigen::Index>(attribute_names_.size())) {
      throw StructuralError("attribute matrix columns must equal attribute name count");
    }
    if (!attributes_.allFinite()) throw StructuralError("attribute matrix has non-finite entries");
    std::set<int> ids;
    for (std::size_t a = 0; a < links_.size(); ++a) {
      const Link& link = links_[a];
      validate_link(link);
      if (!ids.insert(link.id).second) {
        throw StructuralError("duplicate link id " + std::to_string(link.id));
      }
      nodes_.insert(link.from_node);
      nodes_.insert(link.to_node);
      index_of_id_[link.id] = a;
      if (link.is_connector) {
        attributes_.row(static_cast<Eigen::Index>(a)).setZero();
        links_[a].length = 0.0;
      }
    }
    outgoing_.clear();
    for (std::size_t a = 0; a < links_.size(); ++a) outgoing_[links_[a].from_node].push_back(a);
  }

  std::size_t link_count() const noexcept { return links_.size(); }
  std::size_t attribute_count() const noexcept { return attribute_names_.size(); }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(LinkIndex a) const { return links_.at(a); }
  const std::set<NodeId>& nodes() const noexcept { return nodes_; }
  const Matrix& attributes() const noexcept { return attributes_; }
  const std::vector<std::string>& attribute_names() const noexcept { return attribute_names_; }

  bool has_node(NodeId n) const { return nodes_.count(n) > 0; }

  LinkIndex index_of(int link_id) const {
    auto it = index_of_id_.find(link_id);
    if (it == index_of_id_.end()) throw StructuralError("unknown link id " + std::to_string(link_id));
    return it->second;
  }

  std::optional<std::size_t> attribute_index(const std::string& name) const {
    auto it = std::find(attribute_names_.begin(), attribute_names_.end(), name);
    if (it == attribute_names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - attribute_names_.begin());
  }

  /// Outgoing link indices of a node, in link order.
  const std::vector<LinkIndex>& outgoing(NodeId node) const {
    static const std::vector<LinkIndex> empty;
    auto it = outgoing_.find(node);
    return it == outgoing_.end() ? empty : it->second;
  }

  Vector free_flow_times() const {
    Vector t(static_cast<Eigen::Index>(links_.size()));
    for (std::size_t a = 0; a < links_.size(); ++a) t[static_cast<Eigen::Index>(a)] = links_[a].free_flow_time;
    return t;
  }

  /// Lengths used by path-size factors; falls back to free-flow time when a link has none.
  Vector lengths() const {
    Vector l(static_cast<Eigen::Index>(links_.size()));
    for (std::size_t a = 0; a < links_.size(); ++a) {
      const Link& k = links_[a];
      l[static_cast<Eigen::Index>(a)] = k.length > 0.0 || k.is_connector ? k.length : k.free_flow_time;
    }
    return l;
  }

  Vector travel_times(const Vector& flows) const {
    if (flows.size() != static_cast<Eigen::Index>(links_.size())) {
      throw StructuralError("travel_times: flow vector size mismatch");
    }
    Vector t(flows.size());
    for (Eigen::Index a = 0; a < flows.size(); ++a) {
      t[a] = bpr_travel_time(links_[static_cast<std::size_t>(a)], std::max(0.0, flows[a]));
    }
    return t;
  }

  /// Copy with a different attribute matrix (e.g. irrelevant attributes appended).
  Network with_attributes(Matrix attributes, std::vector<std::string> names) const {
    return Network(links_, std::move(attributes), std::move(names));
  }

 private:
  std::vector<Link> links_;
  Matrix attributes_;
  std::vector<std::string> attribute_names_;
  std::set<NodeId> nodes_;
  std::map<int, LinkIndex> index_of_id_;
  std::map<NodeId, std::vector<LinkIndex>> outgoing_;
};

struct ODPair {
  NodeId origin = 0;
  NodeId destination = 0;
  double demand = 0.0;  // vehicles/hour
};

/// Fixed origin-destination demand. Pair order defines the OD index used everywhere.
class ODDemand {
 public:
  ODDemand() = default;

  explicit ODDemand(std::vector<ODPair> pairs) : pairs_(std::move(pairs)) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const ODPair& w : pairs_) {
      if (!(w.demand >= 0.0) || !std::isfinite(w.demand)) {
        throw StructuralError("OD demand must be finite and nonnegative");
      }
      if (w.origin == w.destination) throw StructuralError("OD pair with origin == destination");
      if (!seen.insert({w.origin, w.destination}).second) {
        throw StructuralError("duplicate OD pair " + std::to_string(w.origin) + "-" +
                              std::to_string(w.destination));
      }
    }
  }

  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<ODPair>& pairs() const noexcept { return pairs_; }
  const ODPair& pair(std::size_t w) const { return pairs_.at(w); }

  Vector vector() const {
    Vector q(static_cast<Eigen::Index>(pairs_.size()));
    for (std::size_t w = 0; w < pairs_.size(); ++w) q[static_cast<Eigen::Index>(w)] = pairs_[w].demand;
    return q;
  }

  double total() const {
    double s = 0.0;
    for (const ODPair& w : pairs_) s += w.demand;
    return s;
  }

  /// Same pairs with demands replaced (order preserved).
  ODDemand with_demands(const Vector& q) const {
    if (q.size() != static_cast<Eigen::Index>(pairs_.size())) {
      throw StructuralError("with_demands: size mismatch");
    }
    std::vector<ODPair> out = pairs_;
    for (std::size_t w = 0; w < out.size(); ++w) out[w].demand = q[static_cast<Eigen::Index>(w)];
    return ODDemand(std::move(out));
  }

  void validate_against(const Network& network) const {
    for (const ODPair& w : pairs_) {
      if (!network.has_node(w.origin) || !network.has_node(w.destination)) {
        throw StructuralError("OD pair " + std::to_string(w.origin) + "-" +
                              std::to_string(w.destination) + " references an unknown node");
      }
    }
  }
 private:
  std::vector<ODPair> pairs_;
};

}  // namespace suelogit
