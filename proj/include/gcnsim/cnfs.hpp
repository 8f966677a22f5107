#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include <json.hpp>

#include "gcnsim/error.hpp"
#include "gcnsim/model.hpp"
#include "gcnsim/network.hpp"

namespace gcnsim {

enum class NodeStatus { Alive, Dead };

struct DataNodeState {
  double last_heartbeat = 0.0;
  NodeStatus status = NodeStatus::Alive;
  bool stale = false;  // rejoined after death; cleared by the next sync
};

struct Placement {
  DataNodeId primary;
  std::set<DataNodeId> replicas;
  bool available = true;
  bool lost = false;      // primary and every replica died
  bool degraded = false;  // fewer than k replicas, or no same-cloudlet replica
};

// What the NameNode tracks: DataNode liveness and where each Avatar's disk
// and its replicas live. No file namespace.
struct NameNodeState {
  std::map<DataNodeId, DataNodeState> datanodes;
  std::map<AvatarId, Placement> placements;

  static NameNodeState register_all(const Scenario& sc) {
    NameNodeState s;
    for (const auto& g : sc.gcs) {
      for (std::uint32_t i = 1; i <= g.datanode_count; ++i) s.datanodes[DataNodeId{g.id, i}] = DataNodeState{};
    }
    return s;
  }

  bool eligible(const DataNodeId& id) const {
    auto it = datanodes.find(id);
    return it != datanodes.end() && it->second.status == NodeStatus::Alive && !it->second.stale;
  }

  std::set<DataNodeId> eligible_nodes() const {
    std::set<DataNodeId> out;
    for (const auto& [id, st] : datanodes) {
      if (eligible(id)) out.insert(id);
    }
    return out;
  }

  friend bool operator==(const NameNodeState& a, const NameNodeState& b) {
    if (a.datanodes.size() != b.datanodes.size() || a.placements.size() != b.placements.size()) return false;
    for (auto ia = a.datanodes.begin(), ib = b.datanodes.begin(); ia != a.datanodes.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.last_heartbeat != ib->second.last_heartbeat ||
          ia->second.status != ib->second.status || ia->second.stale != ib->second.stale) {
        return false;
      }
    }
    for (auto ia = a.placements.begin(), ib = b.placements.begin(); ia != a.placements.end(); ++ia, ++ib) {
      const auto& x = ia->second;
      const auto& y = ib->second;
      if (ia->first != ib->first || x.primary != y.primary || x.replicas != y.replicas || x.available != y.available ||
          x.lost != y.lost || x.degraded != y.degraded) {
        return false;
      }
    }
    return true;
  }
};

// Cumulative count of slots each UE spent on an eNB of each cloudlet.
class VisitHistogram {
 public:
  using Counts = std::map<GcsId, std::uint64_t>;

  void record(UeId ue, GcsId gcs, std::uint64_t n = 1) { counts_[ue][gcs] += n; }

  const Counts& of(UeId ue) const {
    static const Counts empty;
    auto it = counts_.find(ue);
    return it == counts_.end() ? empty : it->second;
  }

  std::uint64_t count(UeId ue, GcsId gcs) const {
    const auto& c = of(ue);
    auto it = c.find(gcs);
    return it == c.end() ? 0 : it->second;
  }

  // Histogram of a UE's whole declared association trace.
  static VisitHistogram from_traces(const Scenario& sc) {
    VisitHistogram h;
    for (const auto& ue : sc.ues) {
      for (const auto& enb : ue.association) h.record(ue.id, sc.enb_gcs(enb));
    }
    return h;
  }

 private:
  std::map<UeId, Counts> counts_;
};

// Returns true when a Dead node came back.
inline bool process_heartbeat(NameNodeState& state, const DataNodeId& id, double now_s) {
  auto it = state.datanodes.find(id);
  if (it == state.datanodes.end()) throw UnknownDataNode("unknown DataNode " + to_string(id));
  it->second.last_heartbeat = now_s;
  if (it->second.status == NodeStatus::Dead) {
    it->second.status = NodeStatus::Alive;
    it->second.stale = true;
    return true;
  }
  return false;
}

// Marks every Alive node silent for longer than timeout_s as Dead; Avatars
// whose primary lived there become unavailable.
inline std::vector<DataNodeId> detect_failures(NameNodeState& state, double now_s, double timeout_s) {
  std::vector<DataNodeId> dead;
  for (auto& [id, st] : state.datanodes) {
    if (st.status == NodeStatus::Alive && now_s - st.last_heartbeat > timeout_s) {
      st.status = NodeStatus::Dead;
      dead.push_back(id);
    }
  }
  for (auto& [avatar, p] : state.placements) {
    if (std::find(dead.begin(), dead.end(), p.primary) != dead.end()) p.available = false;
  }
  return dead;
}

struct ReplicaPlacement {
  std::set<DataNodeId> replicas;
  bool degraded = false;
};

// One replica on another DataNode of the primary's cloudlet, the rest on the
// most visited other cloudlets (one each, lowest-index eligible DataNode;
// visit ties go to the lower GCS id). Existing replicas are kept and only
// topped up. When the primary's cloudlet has no spare DataNode the next
// visited cloudlet fills in and the result is flagged degraded.
inline ReplicaPlacement place_replicas(const VisitHistogram::Counts& visits, std::uint32_t k, const DataNodeId& primary,
                                       const std::set<DataNodeId>& eligible,
                                       const std::set<DataNodeId>& existing = {}) {
  ReplicaPlacement out;
  for (const auto& r : existing) {
    if (r != primary && eligible.count(r)) out.replicas.insert(r);
  }
  auto holds_gcs = [&](GcsId g) {
    return std::any_of(out.replicas.begin(), out.replicas.end(), [&](const DataNodeId& r) { return r.gcs == g; });
  };

  std::vector<DataNodeId> ordered;
  if (!holds_gcs(primary.gcs)) {
    for (const auto& dn : eligible) {
      if (dn.gcs == primary.gcs && dn != primary) {
        ordered.push_back(dn);
        break;
      }
    }
  }
  std::map<GcsId, DataNodeId> first_node;  // lowest-index eligible node per GCS
  for (const auto& dn : eligible) first_node.emplace(dn.gcs, dn);
  std::vector<GcsId> remote;
  for (const auto& [g, dn] : first_node) {
    if (g != primary.gcs && !holds_gcs(g)) remote.push_back(g);
  }
  auto visits_of = [&](GcsId g) {
    auto it = visits.find(g);
    return it == visits.end() ? std::uint64_t{0} : it->second;
  };
  std::stable_sort(remote.begin(), remote.end(), [&](GcsId a, GcsId b) { return visits_of(a) > visits_of(b); });
  for (GcsId g : remote) ordered.push_back(first_node.at(g));

  for (const auto& dn : ordered) {
    if (out.replicas.size() >= k) break;
    out.replicas.insert(dn);
  }
  out.degraded = out.replicas.size() < k || !holds_gcs(primary.gcs);
  return out;
}

inline double migration_payload(const Avatar& avatar, const Placement& placement, GcsId dest) {
  const bool replica_at_dest = std::any_of(placement.replicas.begin(), placement.replicas.end(),
                                           [&](const DataNodeId& r) { return r.gcs == dest; });
  return avatar.cpu_state_bytes + avatar.memory_bytes + (replica_at_dest ? 0.0 : avatar.disk_bytes);
}

// Synchronisation flows of one period: one per replica, routed over the core
// only when the replica sits in another cloudlet.
inline std::vector<FlowRecord> sync_tick(const Scenario& sc, const CoreGraph& graph, const Placement& placement,
                                         double dirty_bytes, std::size_t slot) {
  std::vector<FlowRecord> flows;
  if (!placement.available) return flows;
  for (const auto& r : placement.replicas) {
    FlowRecord f;
    f.kind = FlowKind::Sync;
    f.src = sc.enbs_of(placement.primary.gcs).front();
    f.dst = sc.enbs_of(r.gcs).front();
    f.bytes = dirty_bytes;
    f.path = graph.gcs_route(sc, placement.primary.gcs, r.gcs).path;
    f.slot = slot;
    flows.push_back(std::move(f));
  }
  return flows;
}

struct Promotion {
  AvatarId avatar;
  DataNodeId from;
  DataNodeId to;
};

struct Rereplication {
  AvatarId avatar;
  DataNodeId source;
  DataNodeId target;
  double bytes = 0.0;
};

struct RecoveryReport {
  std::vector<Promotion> promotions;
  std::vector<Rereplication> rereplications;
  std::vector<AvatarId> data_loss;
  std::vector<FlowRecord> flows;
};

// Asked before an Avatar's host changes from one cloudlet to another;
// returns false when the destination has no room.
using RehostFn = std::function<bool(AvatarId, GcsId from, GcsId to)>;

// Brings unavailable Avatars back from their replicas and restores the
// replication factor. Replicas on Dead nodes are dropped; the live replica
// in the most visited cloudlet (ties: lower GCS id) is promoted, falling
// through to the next site when the host has no capacity.
inline RecoveryReport recover(NameNodeState& state, const Scenario& sc, const CoreGraph& graph,
                              const VisitHistogram& visits, std::uint32_t k, const RehostFn& rehost,
                              std::size_t slot) {
  RecoveryReport report;
  const auto eligible = state.eligible_nodes();
  auto dead = [&](const DataNodeId& id) { return state.datanodes.at(id).status == NodeStatus::Dead; };

  for (auto& [avatar_id, p] : state.placements) {
    if (p.lost) continue;
    for (auto it = p.replicas.begin(); it != p.replicas.end();) {
      it = dead(*it) ? p.replicas.erase(it) : std::next(it);
    }

    if (!p.available) {
      std::vector<DataNodeId> sites;
      for (const auto& r : p.replicas) {
        if (eligible.count(r)) sites.push_back(r);
      }
      if (sites.empty()) {
        p.lost = true;
        report.data_loss.push_back(avatar_id);
        continue;
      }
      const auto& counts = visits.of(avatar_id);
      auto visits_at = [&](GcsId g) {
        auto it = counts.find(g);
        return it == counts.end() ? std::uint64_t{0} : it->second;
      };
      std::stable_sort(sites.begin(), sites.end(), [&](const DataNodeId& a, const DataNodeId& b) {
        if (visits_at(a.gcs) != visits_at(b.gcs)) return visits_at(a.gcs) > visits_at(b.gcs);
        return a < b;
      });
      for (const auto& site : sites) {
        if (site.gcs != p.primary.gcs && rehost && !rehost(avatar_id, p.primary.gcs, site.gcs)) continue;
        report.promotions.push_back(Promotion{avatar_id, p.primary, site});
        p.replicas.erase(site);
        p.primary = site;
        p.available = true;
        break;
      }
      if (!p.available) continue;
    }

    const auto placed = place_replicas(visits.of(avatar_id), k, p.primary, eligible, p.replicas);
    const Avatar* avatar = nullptr;
    for (const auto& ue : sc.ues) {
      if (ue.id == avatar_id) avatar = &ue.avatar;
    }
    for (const auto& r : placed.replicas) {
      if (p.replicas.count(r)) continue;
      const double bytes = avatar ? avatar->disk_bytes : 0.0;
      report.rereplications.push_back(Rereplication{avatar_id, p.primary, r, bytes});
      FlowRecord f;
      f.kind = FlowKind::Sync;
      f.src = sc.enbs_of(p.primary.gcs).front();
      f.dst = sc.enbs_of(r.gcs).front();
      f.bytes = bytes;
      f.path = graph.gcs_route(sc, p.primary.gcs, r.gcs).path;
      f.slot = slot;
      report.flows.push_back(std::move(f));
    }
    p.replicas = placed.replicas;
    p.degraded = placed.degraded;
  }
  return report;
}

// Protocol clock for one run: heartbeats at multiples of heartbeat_s from
// every node outside its silence windows, failure detection, recovery and
// periodic synchronisation, advanced tick by tick.
class CnfsRuntime {
 public:
  CnfsRuntime(const Scenario& sc, const CoreGraph& graph)
      : sc_(sc), graph_(graph), state_(NameNodeState::register_all(sc)) {}

  // Places every Avatar's primary on its home cloudlet and seeds replicas
  // from the declared mobility of its UE.
  void initialize(const std::vector<GcsId>& hosts, const VisitHistogram& mobility) {
    std::map<DataNodeId, std::uint32_t> primaries;
    for (std::size_t u = 0; u < sc_.ues.size(); ++u) {
      const AvatarId id = sc_.ues[u].id;
      auto primary = pick_primary(hosts[u], {}, primaries);
      if (!primary) throw InvariantError("/gcs", "no DataNode available at GCS " + std::to_string(hosts[u].value));
      ++primaries[*primary];
      Placement p;
      p.primary = *primary;
      const auto placed = place_replicas(mobility.of(id), sc_.cnfs.replication_factor, p.primary,
                                         state_.eligible_nodes());
      p.replicas = placed.replicas;
      p.degraded = placed.degraded;
      state_.placements[id] = p;
    }
  }

  const NameNodeState& state() const { return state_; }
  NameNodeState& state() { return state_; }
  const std::vector<nlohmann::ordered_json>& events() const { return events_; }
  double now() const { return now_; }

  bool available(AvatarId id) const { return state_.placements.at(id).available; }
  GcsId host(AvatarId id) const { return state_.placements.at(id).primary.gcs; }

  // Bytes a migration to `dest` would move; nullopt if `dest` cannot hold
  // the disk.
  std::optional<double> payload_if_migrated(const Avatar& avatar, GcsId dest) const {
    const auto& p = state_.placements.at(avatar.id);
    if (dest == p.primary.gcs) return 0.0;
    if (!replica_in(p, dest) && !pick_primary(dest, p.replicas, {})) return std::nullopt;
    return migration_payload(avatar, p, dest);
  }

  // Moves an Avatar's primary to `dest`. A replica already there is promoted
  // and the old primary takes its place in the replica set; otherwise the
  // disk travels with the Avatar. Returns the migration flow.
  FlowRecord migrate(const Avatar& avatar, GcsId dest, std::size_t slot) {
    auto& p = state_.placements.at(avatar.id);
    FlowRecord f;
    f.kind = FlowKind::Migration;
    f.src = sc_.enbs_of(p.primary.gcs).front();
    f.dst = sc_.enbs_of(dest).front();
    f.bytes = migration_payload(avatar, p, dest);
    f.path = graph_.gcs_route(sc_, p.primary.gcs, dest).path;
    f.slot = slot;
    if (auto r = replica_in(p, dest)) {
      const DataNodeId old = p.primary;
      p.replicas.erase(*r);
      p.primary = *r;
      if (state_.eligible(old)) p.replicas.insert(old);
    } else {
      auto target = pick_primary(dest, p.replicas, primary_counts());
      if (!target) throw InvariantError("/gcs", "no DataNode available at GCS " + std::to_string(dest.value));
      p.primary = *target;
    }
    return f;
  }

  struct TickReport {
    std::vector<DataNodeId> deaths;
    RecoveryReport recovery;
    std::vector<FlowRecord> sync_flows;
  };

  // Advances the protocol clock to `now_s`.
  TickReport tick(double now_s, std::size_t slot, const VisitHistogram& visits, const RehostFn& rehost,
                  const std::function<bool(AvatarId)>& writing) {
    TickReport report;
    const double prev = now_;
    const double hb = sc_.cnfs.heartbeat_s;

    struct Beat {
      double t;
      DataNodeId id;
    };
    std::vector<Beat> beats;
    const auto first = static_cast<std::int64_t>(std::floor(prev / hb)) + (started_ ? 1 : 0);
    const auto last = static_cast<std::int64_t>(std::floor(now_s / hb));
    for (std::int64_t m = std::max<std::int64_t>(first, 0); m <= last; ++m) {
      const double t = static_cast<double>(m) * hb;
      if (t > now_s || (started_ && t <= prev)) continue;
      for (const auto& [id, st] : state_.datanodes) {
        if (!silenced(id, t)) beats.push_back(Beat{t, id});
      }
    }
    started_ = true;
    std::stable_sort(beats.begin(), beats.end(), [](const Beat& a, const Beat& b) {
      return a.t != b.t ? a.t < b.t : a.id < b.id;
    });
    for (const auto& b : beats) {
      if (process_heartbeat(state_, b.id, b.t)) {
        log(b.t, "heartbeat", {{"datanode", to_string(b.id)}, {"rejoin", true}});
        rejoined_at_[b.id] = b.t;
      }
    }

    // A full sync refreshes nodes that rejoined before it, so they are
    // eligible again for this tick's recovery.
    std::size_t sync_rounds = 0;
    const double period = sc_.cnfs.sync_period_s;
    const auto s_first = static_cast<std::int64_t>(std::floor(prev / period)) + 1;
    const auto s_last = static_cast<std::int64_t>(std::floor(now_s / period));
    for (std::int64_t m = s_first; m <= s_last; ++m) {
      const double t = static_cast<double>(m) * period;
      ++sync_rounds;
      for (auto it = rejoined_at_.begin(); it != rejoined_at_.end();) {
        if (it->second < t) {
          state_.datanodes.at(it->first).stale = false;
          it = rejoined_at_.erase(it);
        } else {
          ++it;
        }
      }
    }

    report.deaths = detect_failures(state_, now_s, sc_.cnfs.timeout_s);
    for (const auto& d : report.deaths) log(now_s, "death", {{"datanode", to_string(d)}});

    report.recovery = recover(state_, sc_, graph_, visits, sc_.cnfs.replication_factor, rehost, slot);
    for (const auto& p : report.recovery.promotions) {
      log(now_s, "promotion", {{"avatar", p.avatar.value}, {"from", to_string(p.from)}, {"to", to_string(p.to)}});
    }
    for (const auto& r : report.recovery.rereplications) {
      log(now_s, "rereplication",
          {{"avatar", r.avatar.value}, {"source", to_string(r.source)}, {"target", to_string(r.target)},
           {"bytes", r.bytes}});
    }
    for (const auto& a : report.recovery.data_loss) log(now_s, "data_loss", {{"avatar", a.value}});

    for (std::size_t round = 0; round < sync_rounds; ++round) {
      for (const auto& ue : sc_.ues) {
        const auto& p = state_.placements.at(ue.id);
        if (!writing || !writing(ue.id)) continue;
        auto flows = sync_tick(sc_, graph_, p, sc_.cnfs.dirty_fraction * ue.avatar.disk_bytes, slot);
        report.sync_flows.insert(report.sync_flows.end(), flows.begin(), flows.end());
      }
    }
    now_ = now_s;
    return report;
  }

  bool silenced(const DataNodeId& id, double t) const {
    for (const auto& w : sc_.cnfs.failures) {
      if (w.node == id && t >= w.from_s && (!w.until_s || t < *w.until_s)) return true;
    }
    return false;
  }

  void write_events(std::ostream& os) const {
    for (const auto& e : events_) os << e.dump() << '\n';
  }

 private:
  static std::optional<DataNodeId> replica_in(const Placement& p, GcsId g) {
    for (const auto& r : p.replicas) {
      if (r.gcs == g) return r;
    }
    return std::nullopt;
  }

  std::map<DataNodeId, std::uint32_t> primary_counts() const {
    std::map<DataNodeId, std::uint32_t> counts;
    for (const auto& [id, p] : state_.placements) ++counts[p.primary];
    return counts;
  }

  // Eligible DataNode of `gcs` with the fewest primaries, lowest index on
  // ties, skipping nodes in `exclude`.
  std::optional<DataNodeId> pick_primary(GcsId gcs, const std::set<DataNodeId>& exclude,
                                         const std::map<DataNodeId, std::uint32_t>& load) const {
    std::optional<DataNodeId> best;
    std::uint32_t best_load = 0;
    for (const auto& [id, st] : state_.datanodes) {
      if (id.gcs != gcs || !state_.eligible(id) || exclude.count(id)) continue;
      auto it = load.find(id);
      const std::uint32_t l = it == load.end() ? 0 : it->second;
      if (!best || l < best_load) {
        best = id;
        best_load = l;
      }
    }
    return best;
  }

  void log(double t, const char* event, std::initializer_list<std::pair<const char*, nlohmann::ordered_json>> fields) {
    nlohmann::ordered_json j;
    j["t_s"] = t;
    j["event"] = event;
    for (const auto& [k, v] : fields) j[k] = v;
    events_.push_back(std::move(j));
  }

  const Scenario& sc_;
  const CoreGraph& graph_;
  NameNodeState state_;
  double now_ = 0.0;
  bool started_ = false;
  std::map<DataNodeId, double> rejoined_at_;
  std::vector<nlohmann::ordered_json> events_;
};

}  // namespace gcnsim
