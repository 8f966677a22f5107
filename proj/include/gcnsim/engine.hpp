#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gcnsim/cnfs.hpp"
#include "gcnsim/energy.hpp"
#include "gcnsim/error.hpp"
#include "gcnsim/format.hpp"
#include "gcnsim/log.hpp"
#include "gcnsim/model.hpp"
#include "gcnsim/network.hpp"
#include "gcnsim/placement.hpp"

namespace gcnsim {

enum class SebMode { Off, Migrate, Pilot, Both };
enum class TeaMode { EqualRatio, Uniform };

inline const char* to_string(SebMode m) {
  switch (m) {
    case SebMode::Off: return "off";
    case SebMode::Migrate: return "migrate";
    case SebMode::Pilot: return "pilot";
    case SebMode::Both: return "both";
  }
  return "?";
}

inline const char* to_string(TeaMode m) { return m == TeaMode::EqualRatio ? "equal-ratio" : "uniform"; }

inline const char* to_string(TeaStatus s) {
  switch (s) {
    case TeaStatus::Ok: return "ok";
    case TeaStatus::NoDemand: return "no_demand";
    case TeaStatus::NoEnergy: return "no_energy";
  }
  return "?";
}

struct Policy {
  SebMode seb = SebMode::Migrate;
  TeaMode tea = TeaMode::EqualRatio;
  CoreMode core = CoreMode::Sdn;
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
};

// Inverse of validate_scenario: the document it would accept for `sc`.
inline nlohmann::ordered_json scenario_to_json(const Scenario& sc) {
  using oj = nlohmann::ordered_json;
  oj doc;
  doc["time"] = {{"T", sc.time.slots}, {"slot_seconds", sc.time.slot_seconds}, {"ticks_per_slot", sc.time.ticks_per_slot}};
  doc["gcs"] = oj::array();
  for (const auto& g : sc.gcs) {
    oj j;
    j["id"] = g.id.value;
    j["enb_static_power"] = g.enb_static_power;
    j["enb_traffic_coeff"] = g.enb_traffic_coeff;
    j["cloudlet_capacity"] = g.cloudlet_capacity;
    j["datanode_count"] = g.datanode_count;
    j["battery_capacity"] = g.battery_capacity ? oj(*g.battery_capacity) : oj(nullptr);
    j["battery_init"] = g.battery_init;
    j["generation"] = g.generation;
    if (g.nominal_demand) j["nominal_demand"] = *g.nominal_demand;
    doc["gcs"].push_back(std::move(j));
  }
  oj nodes = oj::array();
  for (const auto& n : sc.core.nodes) {
    oj j;
    j["id"] = n.id;
    j["kind"] = n.kind == NodeKind::Enb ? "enb" : n.kind == NodeKind::Switch ? "switch" : "gateway";
    if (n.gcs) j["gcs"] = n.gcs->value;
    nodes.push_back(std::move(j));
  }
  oj links = oj::array();
  for (const auto& l : sc.core.links) links.push_back({{"a", l.a}, {"b", l.b}, {"latency_ms", l.latency_ms}});
  doc["core"] = {{"nodes", nodes}, {"links", links}, {"bytes_per_traffic_unit", sc.core.bytes_per_traffic_unit}};
  doc["ues"] = oj::array();
  for (const auto& ue : sc.ues) {
    oj j;
    j["id"] = ue.id.value;
    j["association"] = ue.association;
    j["traffic_units"] = ue.traffic_units;
    if (ue.activity_prob) {
      j["activity_prob"] = *ue.activity_prob;
    } else {
      j["app_active"] = ue.app_active;
    }
    j["candidate_enbs"] = ue.candidate_enbs;
    j["avatar"] = {{"host", ue.avatar.host.value},
                   {"memory_bytes", ue.avatar.memory_bytes},
                   {"cpu_state_bytes", ue.avatar.cpu_state_bytes},
                   {"disk_bytes", ue.avatar.disk_bytes},
                   {"demand_units", ue.avatar.demand_units}};
    doc["ues"].push_back(std::move(j));
  }
  doc["delay"] = {{"wireless_ms", sc.delay.wireless_ms}, {"delay_threshold_ms", sc.delay.delay_threshold_ms}};
  oj failures = oj::array();
  for (const auto& f : sc.cnfs.failures) {
    failures.push_back({{"gcs", f.node.gcs.value},
                        {"datanode", f.node.index},
                        {"from_s", f.from_s},
                        {"until_s", f.until_s ? oj(*f.until_s) : oj(nullptr)}});
  }
  doc["cnfs"] = {{"heartbeat_s", sc.cnfs.heartbeat_s},
                 {"timeout_s", sc.cnfs.timeout_s},
                 {"sync_period_s", sc.cnfs.sync_period_s},
                 {"replication_factor", sc.cnfs.replication_factor},
                 {"dirty_fraction", sc.cnfs.dirty_fraction},
                 {"failures", failures}};
  doc["seed"] = sc.seed;
  return doc;
}

inline std::string scenario_hash(const Scenario& sc) { return to_hex(fnv1a64(scenario_to_json(sc).dump())); }

// Draws app_active for every UE declared with an activity probability. Each
// UE has its own stream so adding a UE does not reshuffle the others.
inline Scenario resolve_activity(Scenario sc, std::uint64_t seed) {
  for (auto& ue : sc.ues) {
    if (!ue.activity_prob) continue;
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(ue.id.value) + 1)));
    for (std::size_t t = 0; t < ue.app_active.size(); ++t) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      ue.app_active[t] = u < *ue.activity_prob;
    }
  }
  return sc;
}

struct GcsSlotMetrics {
  GcsId gcs;
  double demand = 0.0;
  double provisioned = 0.0;
  double on_grid = 0.0;
  double residual = 0.0;
  double wasted = 0.0;
  std::optional<double> eta;
};

struct SlotMetrics {
  std::size_t slot = 0;
  std::optional<double> sigma_before_seb;
  double stranded_before_seb = 0.0;  // demand on unprovisioned GCSs before balancing
  std::optional<double> sigma;
  double mean_delay_ms = 0.0;
  double max_delay_ms = 0.0;
  std::size_t delay_violations = 0;
  std::size_t migrations = 0;
  std::size_t reassociations = 0;
  KindTotals bytes{};
  KindTotals core_bytes{};
  std::vector<GcsSlotMetrics> gcs;
};

struct RunTotals {
  double demand = 0.0;
  double green_provisioned = 0.0;
  double on_grid = 0.0;
  double wasted = 0.0;
  double mean_spatial_sigma = 0.0;
  double mean_temporal_sigma = 0.0;
  double mean_delay_ms = 0.0;
  double max_delay_ms = 0.0;
  double delay_violations = 0.0;
  double migrations = 0.0;
  double reassociations = 0.0;
  double d2a_bytes = 0.0;
  double d2a_core_bytes = 0.0;
  double sync_bytes = 0.0;
  double sync_core_bytes = 0.0;
  double migration_bytes = 0.0;
  double migration_core_bytes = 0.0;
  double datanode_deaths = 0.0;
  double promotions = 0.0;
  double rereplications = 0.0;
  double data_loss = 0.0;
  double availability = 1.0;

  std::vector<std::pair<const char*, double>> entries() const {
    return {{"demand", demand},
            {"green_provisioned", green_provisioned},
            {"on_grid", on_grid},
            {"wasted", wasted},
            {"mean_spatial_sigma", mean_spatial_sigma},
            {"mean_temporal_sigma", mean_temporal_sigma},
            {"mean_delay_ms", mean_delay_ms},
            {"max_delay_ms", max_delay_ms},
            {"delay_violations", delay_violations},
            {"migrations", migrations},
            {"reassociations", reassociations},
            {"d2a_bytes", d2a_bytes},
            {"d2a_core_bytes", d2a_core_bytes},
            {"sync_bytes", sync_bytes},
            {"sync_core_bytes", sync_core_bytes},
            {"migration_bytes", migration_bytes},
            {"migration_core_bytes", migration_core_bytes},
            {"datanode_deaths", datanode_deaths},
            {"promotions", promotions},
            {"rereplications", rereplications},
            {"data_loss", data_loss},
            {"availability", availability}};
  }
};

struct MetricsReport {
  Policy policy;
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::vector<TeaResult> tea;  // per GCS, Scenario::gcs order
  std::vector<SlotMetrics> slots;
  RunTotals totals;
  EnergyLedger ledger;
  TrafficAccounting traffic;
  std::vector<nlohmann::ordered_json> events;
  std::vector<nlohmann::ordered_json> plans;
  NameNodeState cnfs;
};

namespace detail {

inline TeaResult provision_gcs(const Scenario& sc, const GcsNode& node, TeaMode mode) {
  const auto demand = nominal_demand(sc, node.id);
  if (mode == TeaMode::EqualRatio) {
    return tea_allocate(node.generation, demand, node.battery_init, node.battery_capacity);
  }
  TeaResult r;
  r.allocation = uniform_allocate(node.generation, node.battery_init);
  r.starved.assign(demand.size(), false);
  bool any_demand = false;
  for (std::size_t t = 0; t < demand.size(); ++t) {
    r.starved[t] = demand[t] > 0 && r.allocation[t] <= 0;
    any_demand = any_demand || demand[t] > 0;
  }
  if (!any_demand) {
    r.status = TeaStatus::NoDemand;
  } else if (std::all_of(r.allocation.begin(), r.allocation.end(), [](double e) { return e <= 0; })) {
    r.status = TeaStatus::NoEnergy;
  } else {
    r.sigma = tea_sigma(r.allocation, demand, r.starved);
  }
  return r;
}

}  // namespace detail

// Runs the scenario slot by slot: provisioning, association, capacity and
// delay enforcement, balancing, the CNFS clock and energy settlement.
inline MetricsReport run(const Scenario& input, const Policy& policy = {}) {
  MetricsReport report;
  report.policy = policy;
  report.seed = policy.seed.value_or(input.seed);
  report.scenario_hash = scenario_hash(input);
  const Scenario sc = resolve_activity(input, report.seed);
  const CoreGraph graph(sc.core, policy.core);
  const std::size_t T = sc.slot_count();
  const std::size_t G = sc.gcs.size();
  const std::size_t U = sc.ues.size();

  for (const auto& node : sc.gcs) report.tea.push_back(detail::provision_gcs(sc, node, policy.tea));
  log(LogLevel::Info, "provisioned " + std::to_string(G) + " GCS over " + std::to_string(T) + " slots");

  std::vector<GcsId> hosts;
  for (const auto& ue : sc.ues) hosts.push_back(ue.avatar.host);
  CnfsRuntime cnfs(sc, graph);
  cnfs.initialize(hosts, VisitHistogram::from_traces(sc));
  VisitHistogram visits;

  report.ledger = EnergyLedger(G, T);
  std::vector<double> residual(G, 0.0);
  std::vector<double> reserve(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) reserve[g] = sc.gcs[g].battery_init;

  SlotState state;
  state.placed_seq.assign(U, 0);
  std::vector<bool> was_active(U, false);
  std::uint64_t seq = 0;
  double active_ticks = 0.0;
  double available_ticks = 0.0;
  double delay_sum = 0.0;
  double delay_count = 0.0;

  auto ue_index = [&](AvatarId id) {
    for (std::size_t u = 0; u < U; ++u) {
      if (sc.ues[u].id == id) return u;
    }
    throw UnknownDataNode("no Avatar " + std::to_string(id.value));
  };

  for (std::size_t j = 0; j < T; ++j) {
    SlotMetrics m;
    m.slot = j;
    std::vector<double> provision(G);
    for (std::size_t g = 0; g < G; ++g) provision[g] = report.tea[g].allocation[j];

    state.slot = j;
    state.serving.clear();
    state.host.clear();
    state.consuming.assign(U, false);
    std::vector<bool> active(U, false);
    for (std::size_t u = 0; u < U; ++u) {
      const auto& ue = sc.ues[u];
      state.serving.push_back(ue.association[j]);
      state.host.push_back(cnfs.host(ue.id));
      active[u] = ue.app_active[j];
      state.consuming[u] = active[u] && cnfs.available(ue.id);
      if (active[u] && !was_active[u]) state.placed_seq[u] = ++seq;
      visits.record(ue.id, sc.enb_gcs(ue.association[j]));
    }
    was_active = active;

    auto do_migrate = [&](std::size_t u, GcsId dest, const char* reason, double sigma_before, double sigma_after) {
      const auto& avatar = sc.ues[u].avatar;
      const GcsId from = state.host[u];
      FlowRecord f = cnfs.migrate(avatar, dest, j);
      report.traffic.record(f);
      report.plans.push_back(to_json(MigrationMove{avatar.id, from, dest, f.bytes, sigma_before, sigma_after}, j, reason));
      state.host[u] = dest;
      state.placed_seq[u] = ++seq;
      ++m.migrations;
    };

    // Capacity: Avatars that were already running keep their seats.
    std::vector<std::uint32_t> seats(G, 0);
    std::vector<std::size_t> order;
    for (std::size_t u = 0; u < U; ++u) {
      if (state.consuming[u]) order.push_back(u);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return state.placed_seq[a] < state.placed_seq[b]; });
    for (std::size_t u : order) {
      const std::size_t g = sc.gcs_index(state.host[u]);
      if (seats[g] < sc.gcs[g].cloudlet_capacity) {
        ++seats[g];
        continue;
      }
      std::optional<std::size_t> best;
      std::tuple<bool, double, std::size_t> best_key{};
      for (std::size_t h = 0; h < G; ++h) {
        if (seats[h] >= sc.gcs[h].cloudlet_capacity) continue;
        if (!cnfs.payload_if_migrated(sc.ues[u].avatar, sc.gcs[h].id)) continue;
        const double d = e2e_delay(sc, graph, state.serving[u], sc.gcs[h].id);
        std::tuple<bool, double, std::size_t> key{d > sc.delay.delay_threshold_ms, d, h};
        if (!best || key < best_key) {
          best = h;
          best_key = key;
        }
      }
      if (!best) {
        throw CapacityExhausted("slot " + std::to_string(j + 1) + ": no cloudlet can host Avatar " +
                                std::to_string(sc.ues[u].id.value));
      }
      ++seats[*best];
      do_migrate(u, sc.gcs[*best].id, "capacity", 0.0, 0.0);
    }

    // Delay: follow the UE to its serving cloudlet when the path got too long.
    for (std::size_t u = 0; u < U; ++u) {
      if (!state.consuming[u]) continue;
      if (e2e_delay(sc, graph, state.serving[u], state.host[u]) <= sc.delay.delay_threshold_ms) continue;
      const GcsId dest = sc.enb_gcs(state.serving[u]);
      const std::size_t d = sc.gcs_index(dest);
      if (seats[d] >= sc.gcs[d].cloudlet_capacity || !cnfs.payload_if_migrated(sc.ues[u].avatar, dest)) continue;
      --seats[sc.gcs_index(state.host[u])];
      ++seats[d];
      do_migrate(u, dest, "delay", 0.0, 0.0);
    }

    const auto pre_seb = demands_by_gcs(sc, state);
    m.sigma_before_seb = detail::balance_sigma(pre_seb, provision);
    m.stranded_before_seb = detail::stranded_demand(pre_seb, provision);
    if (policy.seb == SebMode::Pilot || policy.seb == SebMode::Both) {
      const auto plan = seb_pilot_shift(sc, graph, state, provision);
      apply_plan(sc, state, plan);
      for (const auto& c : plan.changes) report.plans.push_back(to_json(c, j));
      m.reassociations = plan.changes.size();
    }
    if (policy.seb == SebMode::Migrate || policy.seb == SebMode::Both) {
      const PayloadFn payload = [&](std::size_t u, GcsId dest) {
        return cnfs.payload_if_migrated(sc.ues[u].avatar, dest);
      };
      const auto plan = seb_migrate(sc, graph, state, provision, payload);
      for (const auto& mv : plan.moves) do_migrate(ue_index(mv.avatar), mv.to, "balance", mv.sigma_before, mv.sigma_after);
    }

    // CNFS clock. A recovered Avatar needs a free seat if its app is running.
    const RehostFn rehost = [&](AvatarId id, GcsId, GcsId to) {
      if (!active[ue_index(id)]) return true;
      std::uint32_t used = 0;
      for (std::size_t u = 0; u < U; ++u) {
        if (active[u] && cnfs.available(sc.ues[u].id) && cnfs.host(sc.ues[u].id) == to) ++used;
      }
      return used < sc.gcs_node(to).cloudlet_capacity;
    };
    const auto writing = [&](AvatarId id) { return active[ue_index(id)] && cnfs.available(id); };
    const double dt = sc.time.slot_seconds / sc.time.ticks_per_slot;
    for (std::uint32_t k = 0; k < sc.time.ticks_per_slot; ++k) {
      const double now = static_cast<double>(j) * sc.time.slot_seconds + static_cast<double>(k + 1) * dt;
      auto tick = cnfs.tick(now, j, visits, rehost, writing);
      for (const auto& f : tick.sync_flows) report.traffic.record(f);
      for (const auto& f : tick.recovery.flows) report.traffic.record(f);
      report.totals.datanode_deaths += static_cast<double>(tick.deaths.size());
      report.totals.promotions += static_cast<double>(tick.recovery.promotions.size());
      report.totals.rereplications += static_cast<double>(tick.recovery.rereplications.size());
      report.totals.data_loss += static_cast<double>(tick.recovery.data_loss.size());
      for (std::size_t u = 0; u < U; ++u) {
        if (!active[u]) continue;
        active_ticks += 1.0;
        if (cnfs.available(sc.ues[u].id)) available_ticks += 1.0;
      }
    }
    for (std::size_t u = 0; u < U; ++u) {
      state.host[u] = cnfs.host(sc.ues[u].id);
      state.consuming[u] = active[u] && cnfs.available(sc.ues[u].id);
    }

    // User traffic and delay at the end of the slot.
    double slot_delay_sum = 0.0;
    std::size_t consuming = 0;
    for (std::size_t u = 0; u < U; ++u) {
      if (!state.consuming[u]) continue;
      const Route r = graph.cloudlet_route(sc, state.serving[u], state.host[u]);
      const double delay = sc.delay.wireless_ms + r.delay_ms;
      slot_delay_sum += delay;
      m.max_delay_ms = std::max(m.max_delay_ms, delay);
      if (delay > sc.delay.delay_threshold_ms) ++m.delay_violations;
      ++consuming;
      const double bytes = sc.ues[u].traffic_units[j] * sc.core.bytes_per_traffic_unit;
      if (bytes > 0) {
        report.traffic.record_flow(FlowKind::D2A, r.path, bytes, j, state.serving[u],
                                   sc.enbs_of(state.host[u]).front());
      }
    }
    if (consuming > 0) m.mean_delay_ms = slot_delay_sum / static_cast<double>(consuming);
    delay_sum += slot_delay_sum;
    delay_count += static_cast<double>(consuming);

    // Energy settlement.
    const auto demand = demands_by_gcs(sc, state);
    for (std::size_t g = 0; g < G; ++g) {
      const auto& node = sc.gcs[g];
      reserve[g] += node.generation[j] - provision[g];
      const double cap = node.battery_capacity
                             ? std::max(0.0, *node.battery_capacity - std::max(0.0, reserve[g]))
                             : std::numeric_limits<double>::infinity();
      const Settlement s = settle_slot(residual[g], demand[g], provision[g], cap);
      LedgerCell& c = report.ledger.at(g, j);
      c.gcs = node.id;
      c.slot = j;
      c.demand = demand[g];
      c.generation = node.generation[j];
      c.provisioned = provision[g];
      c.residual_before = residual[g];
      c.residual_after = s.residual_after;
      c.on_grid = s.on_grid;
      c.wasted = s.wasted;
      if (detail::powered(demand[g], provision[g])) c.eta = detail::eta_of(demand[g], provision[g]);
      residual[g] = s.residual_after;
      m.gcs.push_back(GcsSlotMetrics{node.id, demand[g], provision[g], s.on_grid, s.residual_after, s.wasted, c.eta});
      report.totals.demand += demand[g];
      report.totals.green_provisioned += provision[g];
      report.totals.on_grid += s.on_grid;
      report.totals.wasted += s.wasted;
    }
    m.sigma = detail::balance_sigma(demand, provision);
    m.bytes = report.traffic.slot_totals(j);
    m.core_bytes = report.traffic.slot_core_totals(j);
    report.totals.migrations += static_cast<double>(m.migrations);
    report.totals.reassociations += static_cast<double>(m.reassociations);
    report.totals.delay_violations += static_cast<double>(m.delay_violations);
    report.totals.max_delay_ms = std::max(report.totals.max_delay_ms, m.max_delay_ms);
    log(LogLevel::Debug, "slot " + std::to_string(j + 1) + " sigma " + format_number(m.sigma.value_or(0.0)) +
                             " migrations " + std::to_string(m.migrations));
    report.slots.push_back(std::move(m));
  }

  auto& tot = report.totals;
  double sigma_sum = 0.0;
  double sigma_n = 0.0;
  for (const auto& s : report.slots) {
    if (s.sigma) {
      sigma_sum += *s.sigma;
      sigma_n += 1.0;
    }
  }
  tot.mean_spatial_sigma = sigma_n > 0 ? sigma_sum / sigma_n : 0.0;
  sigma_sum = sigma_n = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    const auto etas = report.ledger.temporal(g);
    if (etas.empty()) continue;
    sigma_sum += population_std(etas);
    sigma_n += 1.0;
  }
  tot.mean_temporal_sigma = sigma_n > 0 ? sigma_sum / sigma_n : 0.0;
  tot.mean_delay_ms = delay_count > 0 ? delay_sum / delay_count : 0.0;
  tot.d2a_bytes = report.traffic.kind_total(FlowKind::D2A);
  tot.d2a_core_bytes = report.traffic.core_total(FlowKind::D2A);
  tot.sync_bytes = report.traffic.kind_total(FlowKind::Sync);
  tot.sync_core_bytes = report.traffic.core_total(FlowKind::Sync);
  tot.migration_bytes = report.traffic.kind_total(FlowKind::Migration);
  tot.migration_core_bytes = report.traffic.core_total(FlowKind::Migration);
  tot.availability = active_ticks > 0 ? available_ticks / active_ticks : 1.0;

  report.events = cnfs.events();
  report.cnfs = cnfs.state();
  return report;
}

inline nlohmann::ordered_json summary_json(const MetricsReport& r) {
  using oj = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? oj(*v) : oj(nullptr); };
  oj doc;
  doc["scenario_hash"] = r.scenario_hash;
  doc["seed"] = r.seed;
  doc["policy"] = {{"seb", to_string(r.policy.seb)}, {"tea", to_string(r.policy.tea)}, {"core", to_string(r.policy.core)}};
  oj totals = oj::object();
  for (const auto& [k, v] : r.totals.entries()) totals[k] = v;
  doc["totals"] = totals;
  doc["tea"] = oj::array();
  for (std::size_t g = 0; g < r.tea.size(); ++g) {
    oj starved = oj::array();
    for (std::size_t t = 0; t < r.tea[g].starved.size(); ++t) {
      if (r.tea[g].starved[t]) starved.push_back(t + 1);
    }
    doc["tea"].push_back({{"gcs", r.ledger.at(g, 0).gcs.value},
                          {"status", to_string(r.tea[g].status)},
                          {"sigma", opt(r.tea[g].sigma)},
                          {"allocation", r.tea[g].allocation},
                          {"starved_slots", starved}});
  }
  doc["slots"] = oj::array();
  for (const auto& s : r.slots) {
    oj j;
    j["slot"] = s.slot + 1;
    j["sigma_before_seb"] = opt(s.sigma_before_seb);
    j["stranded_before_seb"] = s.stranded_before_seb;
    j["sigma"] = opt(s.sigma);
    j["mean_delay_ms"] = s.mean_delay_ms;
    j["max_delay_ms"] = s.max_delay_ms;
    j["delay_violations"] = s.delay_violations;
    j["migrations"] = s.migrations;
    j["reassociations"] = s.reassociations;
    j["d2a_bytes"] = s.bytes[0];
    j["sync_bytes"] = s.bytes[1];
    j["migration_bytes"] = s.bytes[2];
    j["core_bytes"] = s.core_bytes[0] + s.core_bytes[1] + s.core_bytes[2];
    j["gcs"] = oj::array();
    for (const auto& g : s.gcs) {
      j["gcs"].push_back({{"id", g.gcs.value},
                          {"demand", g.demand},
                          {"provisioned", g.provisioned},
                          {"eta", opt(g.eta)},
                          {"on_grid", g.on_grid},
                          {"residual", g.residual},
                          {"wasted", g.wasted}});
    }
    doc["slots"].push_back(std::move(j));
  }
  return doc;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace detail

// Writes summary.json, ledger.csv, traffic.csv, events.jsonl and plans.jsonl.
inline void emit_metrics(const MetricsReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  auto write = [&](const char* name, auto&& body) {
    const auto p = dir / name;
    auto out = detail::open_output(p);
    body(out);
    detail::finish_output(out, p);
  };
  write("summary.json", [&](std::ostream& os) { os << summary_json(r).dump(2) << '\n'; });
  write("ledger.csv", [&](std::ostream& os) { r.ledger.write_csv(os); });
  write("traffic.csv", [&](std::ostream& os) { r.traffic.write_csv(os); });
  write("events.jsonl", [&](std::ostream& os) {
    for (const auto& e : r.events) os << e.dump() << '\n';
  });
  write("plans.jsonl", [&](std::ostream& os) {
    for (const auto& p : r.plans) os << p.dump() << '\n';
  });
}

inline nlohmann::json load_summary(const std::filesystem::path& dir) {
  const auto p = dir / "summary.json";
  std::ifstream in(p);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed '" + p.string() + "': " + e.what());
  }
}

struct MetricDelta {
  std::string name;
  double base = 0.0;
  double other = 0.0;
  double delta = 0.0;
  std::optional<double> percent;  // empty when base is zero
};

// Per-metric differences between two runs of the same scenario, sorted by
// metric name.
inline std::vector<MetricDelta> compare(const nlohmann::json& a, const nlohmann::json& b) {
  const auto ha = a.value("scenario_hash", std::string());
  const auto hb = b.value("scenario_hash", std::string());
  if (ha != hb) throw ScenarioMismatch("runs come from different scenarios (" + ha + " vs " + hb + ")");
  std::vector<MetricDelta> out;
  const auto& ta = a.at("totals");
  const auto& tb = b.at("totals");
  for (auto it = ta.begin(); it != ta.end(); ++it) {
    if (!tb.contains(it.key()) || !it->is_number() || !tb[it.key()].is_number()) continue;
    MetricDelta d;
    d.name = it.key();
    d.base = it->get<double>();
    d.other = tb[it.key()].get<double>();
    d.delta = d.other - d.base;
    if (d.base != 0.0) d.percent = 100.0 * d.delta / std::abs(d.base);
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const MetricDelta& x, const MetricDelta& y) { return x.name < y.name; });
  return out;
}

inline std::vector<MetricDelta> compare(const MetricsReport& a, const MetricsReport& b) {
  return compare(nlohmann::json::parse(summary_json(a).dump()), nlohmann::json::parse(summary_json(b).dump()));
}

inline nlohmann::ordered_json to_json(const std::vector<MetricDelta>& deltas) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& d : deltas) {
    out[d.name] = {{"base", d.base},
                   {"other", d.other},
                   {"delta", d.delta},
                   {"percent", d.percent ? nlohmann::ordered_json(*d.percent) : nlohmann::ordered_json(nullptr)}};
  }
  return out;
}

}  // namespace gcnsim
