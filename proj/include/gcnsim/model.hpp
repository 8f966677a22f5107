#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcnsim/error.hpp"

namespace gcnsim {

template <class Tag>
struct Id {
  std::uint32_t value{};
  friend constexpr auto operator<=>(Id, Id) = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

struct GcsTag;
struct UeTag;
using GcsId = Id<GcsTag>;
using UeId = Id<UeTag>;
// Every UE owns exactly one Avatar, so they share an identifier space.
using AvatarId = UeId;
// Core-network node name; eNBs are addressed by their core node name.
using NodeId = std::string;
using EnbId = NodeId;

// A storage server inside a cloudlet; index runs 1..datanode_count.
struct DataNodeId {
  GcsId gcs;
  std::uint32_t index{};
  friend constexpr auto operator<=>(const DataNodeId&, const DataNodeId&) = default;
};

inline std::string to_string(const DataNodeId& id) {
  return "g" + std::to_string(id.gcs.value) + "/dn" + std::to_string(id.index);
}

inline std::ostream& operator<<(std::ostream& os, const DataNodeId& id) {
  return os << to_string(id);
}

struct GcsNode {
  GcsId id;
  double enb_static_power = 0.0;
  double enb_traffic_coeff = 0.0;
  std::uint32_t cloudlet_capacity = 0;
  std::uint32_t datanode_count = 1;
  std::optional<double> battery_capacity;  // nullopt = unbounded
  double battery_init = 0.0;
  std::vector<double> generation;
  // Demand forecast handed to the temporal allocator. When absent it is
  // derived from the declared UE traces with every Avatar on its home host.
  std::optional<std::vector<double>> nominal_demand;
};

struct Avatar {
  AvatarId id;
  GcsId host;
  double memory_bytes = 0.0;
  double cpu_state_bytes = 0.0;
  double disk_bytes = 0.0;
  double demand_units = 0.0;
};

struct UserEquipment {
  UeId id;
  std::vector<EnbId> association;
  std::vector<double> traffic_units;
  std::vector<bool> app_active;
  std::vector<std::vector<EnbId>> candidate_enbs;
  // When set, app_active is drawn per slot from the run seed.
  std::optional<double> activity_prob;
  Avatar avatar;
};

enum class NodeKind { Enb, Switch, Gateway };

struct CoreNode {
  NodeId id;
  NodeKind kind = NodeKind::Switch;
  std::optional<GcsId> gcs;  // eNBs only
};

struct CoreLink {
  NodeId a;
  NodeId b;
  double latency_ms = 0.0;
};

struct CoreSpec {
  std::vector<CoreNode> nodes;
  std::vector<CoreLink> links;
  double bytes_per_traffic_unit = 1e6;
};

struct DelayParams {
  double wireless_ms = 0.0;
  double delay_threshold_ms = 0.0;
};

// A DataNode stops heartbeating in [from_s, until_s).
struct FailureWindow {
  DataNodeId node;
  double from_s = 0.0;
  std::optional<double> until_s;
};

struct CnfsParams {
  double heartbeat_s = 3.0;
  double timeout_s = 300.0;
  double sync_period_s = 60.0;
  std::uint32_t replication_factor = 2;
  double dirty_fraction = 0.01;
  std::vector<FailureWindow> failures;
};

struct TimeParams {
  std::size_t slots = 0;
  double slot_seconds = 0.0;
  std::uint32_t ticks_per_slot = 1;
};

struct Scenario {
  TimeParams time;
  std::vector<GcsNode> gcs;          // ascending id
  CoreSpec core;
  std::vector<UserEquipment> ues;    // ascending id
  DelayParams delay;
  CnfsParams cnfs;
  std::uint64_t seed = 0;

  std::size_t slot_count() const { return time.slots; }

  std::size_t gcs_index(GcsId id) const {
    auto it = std::lower_bound(gcs.begin(), gcs.end(), id,
                               [](const GcsNode& g, GcsId v) { return g.id < v; });
    if (it == gcs.end() || it->id != id) {
      throw UnknownGcs("unknown GCS " + std::to_string(id.value));
    }
    return static_cast<std::size_t>(it - gcs.begin());
  }

  bool has_gcs(GcsId id) const {
    return std::any_of(gcs.begin(), gcs.end(), [&](const GcsNode& g) { return g.id == id; });
  }

  const GcsNode& gcs_node(GcsId id) const { return gcs[gcs_index(id)]; }

  // Cloudlet attached to an eNB.
  GcsId enb_gcs(const EnbId& enb) const {
    for (const auto& n : core.nodes) {
      if (n.id == enb && n.kind == NodeKind::Enb) return *n.gcs;
    }
    throw UnknownGcs("no eNB named '" + enb + "'");
  }

  // eNBs attached to a cloudlet, ascending by name.
  std::vector<EnbId> enbs_of(GcsId id) const {
    std::vector<EnbId> out;
    for (const auto& n : core.nodes) {
      if (n.kind == NodeKind::Enb && n.gcs == id) out.push_back(n.id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Per-slot snapshot the planners and demand accounting work on. Vectors are
// indexed by the UE's position in Scenario::ues.
struct SlotState {
  std::size_t slot = 0;
  std::vector<EnbId> serving;
  std::vector<GcsId> host;
  std::vector<bool> consuming;           // app active and Avatar available
  std::vector<std::uint64_t> placed_seq;  // larger = placed more recently

  static SlotState initial(const Scenario& sc, std::size_t slot) {
    SlotState s;
    s.slot = slot;
    for (const auto& ue : sc.ues) {
      s.serving.push_back(ue.association.at(slot));
      s.host.push_back(ue.avatar.host);
      s.consuming.push_back(ue.app_active.at(slot));
      s.placed_seq.push_back(0);
    }
    return s;
  }
};

// eNB term: static power plus the traffic-proportional part over every UE
// served by an eNB attached to this GCS.
inline double enb_demand(const Scenario& sc, const SlotState& state, GcsId gcs) {
  const GcsNode& node = sc.gcs_node(gcs);
  double traffic = 0.0;
  for (std::size_t u = 0; u < sc.ues.size(); ++u) {
    if (sc.enb_gcs(state.serving[u]) == gcs) traffic += sc.ues[u].traffic_units.at(state.slot);
  }
  return node.enb_static_power + node.enb_traffic_coeff * traffic;
}

inline double demand_of_gcs(const Scenario& sc, const SlotState& state, GcsId gcs) {
  double total = enb_demand(sc, state, gcs);
  for (std::size_t u = 0; u < sc.ues.size(); ++u) {
    if (state.consuming[u] && state.host[u] == gcs) total += sc.ues[u].avatar.demand_units;
  }
  return total;
}

// Demand per GCS in Scenario::gcs order.
inline std::vector<double> demands_by_gcs(const Scenario& sc, const SlotState& state) {
  std::vector<double> out;
  out.reserve(sc.gcs.size());
  for (const auto& g : sc.gcs) out.push_back(demand_of_gcs(sc, state, g.id));
  return out;
}

// Nominal demand trace of one GCS: the declared forecast if any, otherwise
// the declared traces evaluated with every Avatar on its home host.
inline std::vector<double> nominal_demand(const Scenario& sc, GcsId gcs) {
  const GcsNode& node = sc.gcs_node(gcs);
  if (node.nominal_demand) return *node.nominal_demand;
  std::vector<double> out;
  for (std::size_t t = 0; t < sc.slot_count(); ++t) {
    out.push_back(demand_of_gcs(sc, SlotState::initial(sc, t), gcs));
  }
  return out;
}

namespace detail {

using nlohmann::json;

struct Reader {
  static void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw SchemaError(path, "expected object");
    for (const auto& [k, v] : obj.items()) {
      bool known = std::any_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; });
      if (!known) throw SchemaError(path + "/" + k, "unknown key");
    }
  }

  static const json& field(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "/" + key, "missing field");
    return *it;
  }

  static double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected number");
    return v.get<double>();
  }

  static std::uint64_t unsigned_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw SchemaError(path, "expected non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  static std::uint32_t u32(const json& v, const std::string& path) {
    auto x = unsigned_int(v, path);
    if (x > UINT32_MAX) throw SchemaError(path, "integer out of range");
    return static_cast<std::uint32_t>(x);
  }

  static std::string string(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected string");
    return v.get<std::string>();
  }

  static const json& array(const json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaError(path, "expected array");
    return v;
  }

  static std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    std::size_t i = 0;
    for (const auto& e : array(v, path)) out.push_back(number(e, path + "/" + std::to_string(i++)));
    return out;
  }
};

inline void expect_length(std::size_t got, std::size_t want, const std::string& path) {
  if (got != want) {
    throw InvariantError(path, "trace length " + std::to_string(got) + " != T=" + std::to_string(want));
  }
}

inline void expect_non_negative(double v, const std::string& path) {
  if (!(v >= 0.0) || std::isinf(v)) throw InvariantError(path, "must be finite and >= 0");
}

}  // namespace detail

// Parses and checks a scenario document, filling protocol defaults.
inline Scenario validate_scenario(const nlohmann::json& doc) {
  using detail::Reader;
  using detail::expect_length;
  using detail::expect_non_negative;
  Scenario sc;

  Reader::only_keys(doc, "", {"time", "gcs", "core", "ues", "cnfs", "delay", "seed"});

  // time
  {
    const auto& t = Reader::field(doc, "", "time");
    Reader::only_keys(t, "/time", {"T", "slot_seconds", "ticks_per_slot"});
    sc.time.slots = Reader::unsigned_int(Reader::field(t, "/time", "T"), "/time/T");
    if (sc.time.slots == 0) throw InvariantError("/time/T", "must be >= 1");
    sc.time.slot_seconds = Reader::number(Reader::field(t, "/time", "slot_seconds"), "/time/slot_seconds");
    if (!(sc.time.slot_seconds > 0)) throw InvariantError("/time/slot_seconds", "must be > 0");
    if (t.contains("ticks_per_slot")) {
      sc.time.ticks_per_slot = Reader::u32(t["ticks_per_slot"], "/time/ticks_per_slot");
      if (sc.time.ticks_per_slot == 0) throw InvariantError("/time/ticks_per_slot", "must be >= 1");
    }
  }
  const std::size_t T = sc.time.slots;

  // gcs
  {
    const auto& arr = Reader::array(Reader::field(doc, "", "gcs"), "/gcs");
    std::size_t i = 0;
    for (const auto& g : arr) {
      const std::string p = "/gcs/" + std::to_string(i++);
      Reader::only_keys(g, p,
                        {"id", "enb_static_power", "enb_traffic_coeff", "cloudlet_capacity", "datanode_count",
                         "battery_capacity", "battery_init", "generation", "nominal_demand"});
      GcsNode n;
      n.id = GcsId{Reader::u32(Reader::field(g, p, "id"), p + "/id")};
      n.enb_static_power = Reader::number(Reader::field(g, p, "enb_static_power"), p + "/enb_static_power");
      n.enb_traffic_coeff = Reader::number(Reader::field(g, p, "enb_traffic_coeff"), p + "/enb_traffic_coeff");
      n.cloudlet_capacity = Reader::u32(Reader::field(g, p, "cloudlet_capacity"), p + "/cloudlet_capacity");
      if (g.contains("datanode_count")) {
        n.datanode_count = Reader::u32(g["datanode_count"], p + "/datanode_count");
      }
      if (n.datanode_count < 1) throw InvariantError(p + "/datanode_count", "must be >= 1");
      if (g.contains("battery_capacity") && !g["battery_capacity"].is_null()) {
        n.battery_capacity = Reader::number(g["battery_capacity"], p + "/battery_capacity");
        expect_non_negative(*n.battery_capacity, p + "/battery_capacity");
      }
      if (g.contains("battery_init")) n.battery_init = Reader::number(g["battery_init"], p + "/battery_init");
      expect_non_negative(n.enb_static_power, p + "/enb_static_power");
      expect_non_negative(n.enb_traffic_coeff, p + "/enb_traffic_coeff");
      expect_non_negative(n.battery_init, p + "/battery_init");
      if (n.battery_capacity && n.battery_init > *n.battery_capacity) {
        throw InvariantError(p + "/battery_init", "exceeds battery_capacity");
      }
      n.generation = Reader::numbers(Reader::field(g, p, "generation"), p + "/generation");
      expect_length(n.generation.size(), T, p + "/generation");
      for (std::size_t j = 0; j < T; ++j) expect_non_negative(n.generation[j], p + "/generation/" + std::to_string(j));
      if (g.contains("nominal_demand")) {
        auto d = Reader::numbers(g["nominal_demand"], p + "/nominal_demand");
        expect_length(d.size(), T, p + "/nominal_demand");
        for (std::size_t j = 0; j < T; ++j) expect_non_negative(d[j], p + "/nominal_demand/" + std::to_string(j));
        n.nominal_demand = std::move(d);
      }
      sc.gcs.push_back(std::move(n));
    }
    if (sc.gcs.empty()) throw InvariantError("/gcs", "at least one GCS required");
    std::sort(sc.gcs.begin(), sc.gcs.end(), [](const GcsNode& a, const GcsNode& b) { return a.id < b.id; });
    for (std::size_t k = 1; k < sc.gcs.size(); ++k) {
      if (sc.gcs[k].id == sc.gcs[k - 1].id) {
        throw InvariantError("/gcs", "duplicate GCS id " + std::to_string(sc.gcs[k].id.value));
      }
    }
  }

  // core
  {
    const auto& c = Reader::field(doc, "", "core");
    Reader::only_keys(c, "/core", {"nodes", "links", "bytes_per_traffic_unit"});
    std::set<NodeId> names;
    std::size_t i = 0;
    for (const auto& n : Reader::array(Reader::field(c, "/core", "nodes"), "/core/nodes")) {
      const std::string p = "/core/nodes/" + std::to_string(i++);
      Reader::only_keys(n, p, {"id", "kind", "gcs"});
      CoreNode node;
      node.id = Reader::string(Reader::field(n, p, "id"), p + "/id");
      const std::string kind = Reader::string(Reader::field(n, p, "kind"), p + "/kind");
      if (kind == "enb") {
        node.kind = NodeKind::Enb;
        node.gcs = GcsId{Reader::u32(Reader::field(n, p, "gcs"), p + "/gcs")};
        if (!sc.has_gcs(*node.gcs)) throw InvariantError(p + "/gcs", "unknown GCS");
      } else if (kind == "switch") {
        node.kind = NodeKind::Switch;
      } else if (kind == "gateway") {
        node.kind = NodeKind::Gateway;
      } else {
        throw SchemaError(p + "/kind", "expected enb|switch|gateway");
      }
      if (node.kind != NodeKind::Enb && n.contains("gcs")) throw InvariantError(p + "/gcs", "only eNBs attach to a cloudlet");
      if (!names.insert(node.id).second) throw InvariantError(p + "/id", "duplicate node id");
      sc.core.nodes.push_back(std::move(node));
    }
    i = 0;
    for (const auto& l : Reader::array(Reader::field(c, "/core", "links"), "/core/links")) {
      const std::string p = "/core/links/" + std::to_string(i++);
      Reader::only_keys(l, p, {"a", "b", "latency_ms"});
      CoreLink link;
      link.a = Reader::string(Reader::field(l, p, "a"), p + "/a");
      link.b = Reader::string(Reader::field(l, p, "b"), p + "/b");
      link.latency_ms = Reader::number(Reader::field(l, p, "latency_ms"), p + "/latency_ms");
      if (!names.count(link.a)) throw InvariantError(p + "/a", "unknown node");
      if (!names.count(link.b)) throw InvariantError(p + "/b", "unknown node");
      if (link.a == link.b) throw InvariantError(p, "self loop");
      if (!(link.latency_ms > 0) || std::isinf(link.latency_ms)) throw InvariantError(p + "/latency_ms", "must be > 0");
      sc.core.links.push_back(std::move(link));
    }
    if (c.contains("bytes_per_traffic_unit")) {
      sc.core.bytes_per_traffic_unit = Reader::number(c["bytes_per_traffic_unit"], "/core/bytes_per_traffic_unit");
      expect_non_negative(sc.core.bytes_per_traffic_unit, "/core/bytes_per_traffic_unit");
    }
    for (const auto& g : sc.gcs) {
      if (sc.enbs_of(g.id).empty()) {
        throw InvariantError("/core/nodes", "GCS " + std::to_string(g.id.value) + " has no attached eNB");
      }
    }
  }

  auto is_enb = [&](const std::string& name) {
    return std::any_of(sc.core.nodes.begin(), sc.core.nodes.end(),
                       [&](const CoreNode& n) { return n.id == name && n.kind == NodeKind::Enb; });
  };

  // ues
  {
    std::size_t i = 0;
    for (const auto& u : Reader::array(Reader::field(doc, "", "ues"), "/ues")) {
      const std::string p = "/ues/" + std::to_string(i++);
      Reader::only_keys(u, p,
                        {"id", "association", "traffic_units", "app_active", "activity_prob", "candidate_enbs", "avatar"});
      UserEquipment ue;
      ue.id = UeId{Reader::u32(Reader::field(u, p, "id"), p + "/id")};
      std::size_t j = 0;
      for (const auto& e : Reader::array(Reader::field(u, p, "association"), p + "/association")) {
        const std::string ep = p + "/association/" + std::to_string(j++);
        ue.association.push_back(Reader::string(e, ep));
        if (!is_enb(ue.association.back())) throw InvariantError(ep, "not an eNB");
      }
      expect_length(ue.association.size(), T, p + "/association");
      if (u.contains("traffic_units")) {
        ue.traffic_units = Reader::numbers(u["traffic_units"], p + "/traffic_units");
        expect_length(ue.traffic_units.size(), T, p + "/traffic_units");
        for (std::size_t k = 0; k < T; ++k) expect_non_negative(ue.traffic_units[k], p + "/traffic_units/" + std::to_string(k));
      } else {
        ue.traffic_units.assign(T, 0.0);
      }
      if (u.contains("app_active") && u.contains("activity_prob")) {
        throw SchemaError(p, "app_active and activity_prob are mutually exclusive");
      }
      if (u.contains("app_active")) {
        j = 0;
        for (const auto& a : Reader::array(u["app_active"], p + "/app_active")) {
          if (!a.is_boolean()) throw SchemaError(p + "/app_active/" + std::to_string(j), "expected boolean");
          ue.app_active.push_back(a.get<bool>());
          ++j;
        }
        expect_length(ue.app_active.size(), T, p + "/app_active");
      } else if (u.contains("activity_prob")) {
        double prob = Reader::number(u["activity_prob"], p + "/activity_prob");
        if (!(prob >= 0.0 && prob <= 1.0)) throw InvariantError(p + "/activity_prob", "must be in [0,1]");
        ue.activity_prob = prob;
        ue.app_active.assign(T, false);
      } else {
        throw SchemaError(p + "/app_active", "missing field");
      }
      if (u.contains("candidate_enbs")) {
        j = 0;
        for (const auto& slot : Reader::array(u["candidate_enbs"], p + "/candidate_enbs")) {
          const std::string sp = p + "/candidate_enbs/" + std::to_string(j);
          std::vector<EnbId> cands;
          std::size_t k = 0;
          for (const auto& e : Reader::array(slot, sp)) {
            cands.push_back(Reader::string(e, sp + "/" + std::to_string(k++)));
            if (!is_enb(cands.back())) throw InvariantError(sp, "'" + cands.back() + "' is not an eNB");
          }
          std::sort(cands.begin(), cands.end());
          cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
          if (j < T && !std::binary_search(cands.begin(), cands.end(), ue.association[j])) {
            throw InvariantError(sp, "serving eNB missing from candidates");
          }
          ue.candidate_enbs.push_back(std::move(cands));
          ++j;
        }
        expect_length(ue.candidate_enbs.size(), T, p + "/candidate_enbs");
      } else {
        for (const auto& e : ue.association) ue.candidate_enbs.push_back({e});
      }
      const auto& a = Reader::field(u, p, "avatar");
      const std::string ap = p + "/avatar";
      Reader::only_keys(a, ap, {"host", "memory_bytes", "cpu_state_bytes", "disk_bytes", "demand_units"});
      ue.avatar.id = ue.id;
      ue.avatar.host = GcsId{Reader::u32(Reader::field(a, ap, "host"), ap + "/host")};
      if (!sc.has_gcs(ue.avatar.host)) throw InvariantError(ap + "/host", "unknown GCS");
      ue.avatar.memory_bytes = Reader::number(Reader::field(a, ap, "memory_bytes"), ap + "/memory_bytes");
      ue.avatar.cpu_state_bytes = Reader::number(Reader::field(a, ap, "cpu_state_bytes"), ap + "/cpu_state_bytes");
      ue.avatar.disk_bytes = Reader::number(Reader::field(a, ap, "disk_bytes"), ap + "/disk_bytes");
      ue.avatar.demand_units = Reader::number(Reader::field(a, ap, "demand_units"), ap + "/demand_units");
      expect_non_negative(ue.avatar.memory_bytes, ap + "/memory_bytes");
      expect_non_negative(ue.avatar.cpu_state_bytes, ap + "/cpu_state_bytes");
      expect_non_negative(ue.avatar.disk_bytes, ap + "/disk_bytes");
      expect_non_negative(ue.avatar.demand_units, ap + "/demand_units");
      sc.ues.push_back(std::move(ue));
    }
    std::sort(sc.ues.begin(), sc.ues.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t k = 1; k < sc.ues.size(); ++k) {
      if (sc.ues[k].id == sc.ues[k - 1].id) {
        throw InvariantError("/ues", "duplicate UE id " + std::to_string(sc.ues[k].id.value));
      }
    }
  }

  // delay
  {
    const auto& d = Reader::field(doc, "", "delay");
    Reader::only_keys(d, "/delay", {"wireless_ms", "delay_threshold_ms"});
    sc.delay.wireless_ms = Reader::number(Reader::field(d, "/delay", "wireless_ms"), "/delay/wireless_ms");
    sc.delay.delay_threshold_ms =
        Reader::number(Reader::field(d, "/delay", "delay_threshold_ms"), "/delay/delay_threshold_ms");
    expect_non_negative(sc.delay.wireless_ms, "/delay/wireless_ms");
    if (!(sc.delay.delay_threshold_ms > sc.delay.wireless_ms)) {
      throw InvariantError("/delay/delay_threshold_ms", "must exceed wireless_ms");
    }
  }

  // cnfs
  if (doc.contains("cnfs")) {
    const auto& c = doc["cnfs"];
    Reader::only_keys(c, "/cnfs",
                      {"heartbeat_s", "timeout_s", "sync_period_s", "replication_factor", "dirty_fraction", "failures"});
    if (c.contains("heartbeat_s")) sc.cnfs.heartbeat_s = Reader::number(c["heartbeat_s"], "/cnfs/heartbeat_s");
    if (c.contains("timeout_s")) sc.cnfs.timeout_s = Reader::number(c["timeout_s"], "/cnfs/timeout_s");
    if (c.contains("sync_period_s")) sc.cnfs.sync_period_s = Reader::number(c["sync_period_s"], "/cnfs/sync_period_s");
    if (c.contains("replication_factor")) {
      sc.cnfs.replication_factor = Reader::u32(c["replication_factor"], "/cnfs/replication_factor");
    }
    if (c.contains("dirty_fraction")) sc.cnfs.dirty_fraction = Reader::number(c["dirty_fraction"], "/cnfs/dirty_fraction");
    std::size_t i = 0;
    if (c.contains("failures")) {
      for (const auto& f : Reader::array(c["failures"], "/cnfs/failures")) {
        const std::string p = "/cnfs/failures/" + std::to_string(i++);
        Reader::only_keys(f, p, {"gcs", "datanode", "from_s", "until_s"});
        FailureWindow w;
        w.node.gcs = GcsId{Reader::u32(Reader::field(f, p, "gcs"), p + "/gcs")};
        w.node.index = Reader::u32(Reader::field(f, p, "datanode"), p + "/datanode");
        if (!sc.has_gcs(w.node.gcs)) throw InvariantError(p + "/gcs", "unknown GCS");
        if (w.node.index < 1 || w.node.index > sc.gcs_node(w.node.gcs).datanode_count) {
          throw InvariantError(p + "/datanode", "index outside 1..datanode_count");
        }
        w.from_s = Reader::number(Reader::field(f, p, "from_s"), p + "/from_s");
        expect_non_negative(w.from_s, p + "/from_s");
        if (f.contains("until_s") && !f["until_s"].is_null()) {
          w.until_s = Reader::number(f["until_s"], p + "/until_s");
          if (!(*w.until_s > w.from_s)) throw InvariantError(p + "/until_s", "must exceed from_s");
        }
        sc.cnfs.failures.push_back(w);
      }
    }
  }
  if (!(sc.cnfs.heartbeat_s > 0)) throw InvariantError("/cnfs/heartbeat_s", "must be > 0");
  if (!(sc.cnfs.timeout_s > sc.cnfs.heartbeat_s)) throw InvariantError("/cnfs/timeout_s", "must exceed heartbeat_s");
  if (!(sc.cnfs.sync_period_s > 0)) throw InvariantError("/cnfs/sync_period_s", "must be > 0");
  if (sc.cnfs.replication_factor < 1) throw InvariantError("/cnfs/replication_factor", "must be >= 1");
  if (!(sc.cnfs.dirty_fraction >= 0 && sc.cnfs.dirty_fraction <= 1)) {
    throw InvariantError("/cnfs/dirty_fraction", "must be in [0,1]");
  }

  sc.seed = Reader::unsigned_int(Reader::field(doc, "", "seed"), "/seed");
  return sc;
}

inline Scenario load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open scenario '" + file + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
  return validate_scenario(doc);
}

}  // namespace gcnsim
