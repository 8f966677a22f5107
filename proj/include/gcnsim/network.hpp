#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "gcnsim/error.hpp"
#include "gcnsim/format.hpp"
#include "gcnsim/model.hpp"

namespace gcnsim {

enum class CoreMode { Sdn, Epc };

inline const char* to_string(CoreMode m) { return m == CoreMode::Sdn ? "sdn" : "epc"; }

struct Route {
  std::vector<NodeId> path;  // empty when both ends coincide
  double delay_ms = 0.0;
};

// Undirected core network with static per-link latencies. Shortest-path
// trees towards every eNB and gateway are computed once at construction, so
// queries are const and safe to run concurrently.
class CoreGraph {
 public:
  CoreGraph(const CoreSpec& spec, CoreMode mode) : mode_(mode) {
    for (const auto& n : spec.nodes) names_.push_back(n.id);
    std::sort(names_.begin(), names_.end());
    kinds_.resize(names_.size());
    for (const auto& n : spec.nodes) {
      const std::size_t i = index_of(n.id);
      kinds_[i] = n.kind;
      if (n.kind == NodeKind::Gateway) gateways_.push_back(i);  // declaration order = chain order
    }
    adjacency_.resize(names_.size());
    for (const auto& l : spec.links) {
      add_edge(index_of(l.a), index_of(l.b), l.latency_ms);
      add_edge(index_of(l.b), index_of(l.a), l.latency_ms);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

    if (!names_.empty() && !connected()) throw InvariantError("/core", "core graph is not connected");
    if (mode_ == CoreMode::Epc && gateways_.empty()) {
      throw InvariantError("/core/nodes", "EPC routing needs at least one gateway node");
    }
    dist_to_.resize(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (kinds_[i] != NodeKind::Switch) dist_to_[i] = dijkstra(i);
    }
  }

  CoreMode mode() const { return mode_; }
  const std::vector<NodeId>& nodes() const { return names_; }
  bool contains(const NodeId& n) const { return std::binary_search(names_.begin(), names_.end(), n); }

  double link_latency(const NodeId& a, const NodeId& b) const {
    const std::size_t i = index_of(a), j = index_of(b);
    for (const auto& [n, w] : adjacency_[i]) {
      if (n == j) return w;
    }
    throw Unreachable("no link " + a + " - " + b);
  }

  // SDN: minimum-latency path, ties broken towards the lexicographically
  // smallest node sequence. EPC: the same, constrained to traverse the
  // gateway chain; the result may revisit nodes on either side of a gateway.
  Route route(const NodeId& src, const NodeId& dst) const {
    Route r;
    if (src == dst) return r;
    const std::size_t s = index_of(src), d = index_of(dst);
    std::vector<std::size_t> walk;
    if (mode_ == CoreMode::Sdn) {
      walk = shortest(s, d);
    } else {
      walk.push_back(s);
      std::size_t at = s;
      std::vector<std::size_t> stops(gateways_);
      stops.push_back(d);
      for (std::size_t stop : stops) {
        if (stop == at) continue;
        auto leg = shortest(at, stop);
        walk.insert(walk.end(), leg.begin() + 1, leg.end());
        at = stop;
      }
    }
    std::vector<double> latencies;
    for (std::size_t k = 0; k < walk.size(); ++k) {
      r.path.push_back(names_[walk[k]]);
      if (k > 0) latencies.push_back(edge_weight(walk[k - 1], walk[k]));
    }
    r.delay_ms = sum_sorted(latencies);
    return r;
  }

  // Route from an eNB to the cloudlet `gcs`: empty when the eNB is attached to
  // it, otherwise the lowest-delay route to one of its eNBs.
  Route cloudlet_route(const Scenario& sc, const EnbId& from, GcsId gcs) const {
    if (sc.enb_gcs(from) == gcs) return {};
    std::optional<Route> best;
    for (const auto& enb : sc.enbs_of(gcs)) {
      Route r = route(from, enb);
      if (!best || r.delay_ms < best->delay_ms) best = std::move(r);
    }
    if (!best) throw Unreachable("cloudlet " + std::to_string(gcs.value) + " has no eNB");
    return *best;
  }

  // Route between the cloudlets of two GCSs (A2A traffic).
  Route gcs_route(const Scenario& sc, GcsId from, GcsId to) const {
    if (from == to) return {};
    return cloudlet_route(sc, sc.enbs_of(from).front(), to);
  }

 private:
  static double sum_sorted(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }

  std::size_t index_of(const NodeId& n) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), n);
    if (it == names_.end() || *it != n) throw Unreachable("unknown core node '" + n + "'");
    return static_cast<std::size_t>(it - names_.begin());
  }

  void add_edge(std::size_t a, std::size_t b, double w) {
    for (auto& [n, existing] : adjacency_[a]) {
      if (n == b) {
        existing = std::min(existing, w);
        return;
      }
    }
    adjacency_[a].emplace_back(b, w);
  }

  double edge_weight(std::size_t a, std::size_t b) const {
    for (const auto& [n, w] : adjacency_[a]) {
      if (n == b) return w;
    }
    return std::numeric_limits<double>::infinity();
  }

  bool connected() const {
    std::vector<bool> seen(names_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (const auto& [n, w] : adjacency_[v]) {
        if (!seen[n]) {
          seen[n] = true;
          ++count;
          stack.push_back(n);
        }
      }
    }
    return count == names_.size();
  }

  std::vector<double> dijkstra(std::size_t target) const {
    std::vector<double> dist(names_.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[target] = 0.0;
    pq.emplace(0.0, target);
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (const auto& [n, w] : adjacency_[v]) {
        if (d + w < dist[n]) {
          dist[n] = d + w;
          pq.emplace(dist[n], n);
        }
      }
    }
    return dist;
  }

  // Greedy walk down the shortest-path tree towards `dst`, always taking the
  // smallest-named neighbour that stays on some shortest path.
  std::vector<std::size_t> shortest(std::size_t src, std::size_t dst) const {
    const auto& dist = dist_to_[dst];
    if (!std::isfinite(dist[src])) throw Unreachable(names_[src] + " cannot reach " + names_[dst]);
    std::vector<std::size_t> path{src};
    std::size_t at = src;
    while (at != dst) {
      const double tol = 1e-9 * std::max(1.0, dist[at]);
      std::size_t next = names_.size();
      for (const auto& [n, w] : adjacency_[at]) {
        if (std::abs(dist[at] - (w + dist[n])) <= tol && dist[n] < dist[at]) {
          next = n;
          break;
        }
      }
      if (next == names_.size()) throw Unreachable("no shortest-path successor at " + names_[at]);
      path.push_back(next);
      at = next;
    }
    return path;
  }

  CoreMode mode_;
  std::vector<NodeId> names_;
  std::vector<NodeKind> kinds_;
  std::vector<std::size_t> gateways_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency_;
  std::vector<std::vector<double>> dist_to_;
};

// UE-to-Avatar delay: one wireless hop, plus the core path when the Avatar's
// cloudlet is not attached to the serving eNB.
inline double e2e_delay(const Scenario& sc, const CoreGraph& graph, const EnbId& serving, GcsId host) {
  return sc.delay.wireless_ms + graph.cloudlet_route(sc, serving, host).delay_ms;
}

enum class FlowKind { D2A = 0, Sync = 1, Migration = 2 };

inline const char* to_string(FlowKind k) {
  switch (k) {
    case FlowKind::D2A: return "D2A";
    case FlowKind::Sync: return "A2A-sync";
    case FlowKind::Migration: return "A2A-migration";
  }
  return "?";
}

struct FlowRecord {
  FlowKind kind = FlowKind::D2A;
  NodeId src;
  NodeId dst;
  double bytes = 0.0;
  std::vector<NodeId> path;
  std::size_t slot = 0;

  double core_bytes() const { return path.empty() ? 0.0 : bytes; }
};

using KindTotals = std::array<double, 3>;

// Per-link, per-slot byte counters split by flow kind.
class TrafficAccounting {
 public:
  void record_flow(FlowKind kind, const std::vector<NodeId>& path, double bytes, std::size_t slot,
                   NodeId src = {}, NodeId dst = {}) {
    const auto k = static_cast<std::size_t>(kind);
    kind_totals_[k] += bytes;
    slot_totals_[slot][k] += bytes;
    if (!path.empty()) {
      core_totals_[k] += bytes;
      slot_core_totals_[slot][k] += bytes;
    }
    for (std::size_t i = 1; i < path.size(); ++i) {
      const auto& a = path[i - 1];
      const auto& b = path[i];
      auto key = a < b ? std::make_tuple(slot, a, b) : std::make_tuple(slot, b, a);
      links_[key][k] += bytes;
    }
    flows_.push_back(FlowRecord{kind, src.empty() && !path.empty() ? path.front() : src,
                                dst.empty() && !path.empty() ? path.back() : dst, bytes, path, slot});
  }

  void record(const FlowRecord& f) { record_flow(f.kind, f.path, f.bytes, f.slot, f.src, f.dst); }

  double kind_total(FlowKind k) const { return kind_totals_[static_cast<std::size_t>(k)]; }
  double core_total(FlowKind k) const { return core_totals_[static_cast<std::size_t>(k)]; }

  KindTotals slot_totals(std::size_t slot) const {
    auto it = slot_totals_.find(slot);
    return it == slot_totals_.end() ? KindTotals{} : it->second;
  }
  KindTotals slot_core_totals(std::size_t slot) const {
    auto it = slot_core_totals_.find(slot);
    return it == slot_core_totals_.end() ? KindTotals{} : it->second;
  }

  // Bytes of one kind on link {a,b}, summed over all slots.
  double link_total(const NodeId& a, const NodeId& b, FlowKind k) const {
    const NodeId& lo = a < b ? a : b;
    const NodeId& hi = a < b ? b : a;
    double acc = 0.0;
    for (const auto& [key, totals] : links_) {
      if (std::get<1>(key) == lo && std::get<2>(key) == hi) acc += totals[static_cast<std::size_t>(k)];
    }
    return acc;
  }

  const std::vector<FlowRecord>& flows() const { return flows_; }

  void write_csv(std::ostream& os) const {
    os << "slot,link_src,link_dst,d2a_bytes,sync_bytes,migration_bytes\n";
    for (const auto& [key, totals] : links_) {
      os << std::get<0>(key) + 1 << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
         << format_number(totals[0]) << ',' << format_number(totals[1]) << ',' << format_number(totals[2]) << '\n';
    }
  }

 private:
  KindTotals kind_totals_{};
  KindTotals core_totals_{};
  std::map<std::size_t, KindTotals> slot_totals_;
  std::map<std::size_t, KindTotals> slot_core_totals_;
  std::map<std::tuple<std::size_t, NodeId, NodeId>, KindTotals> links_;
  std::vector<FlowRecord> flows_;
};

}  // namespace gcnsim
