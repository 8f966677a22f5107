#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "gcnsim/energy.hpp"
#include "gcnsim/model.hpp"
#include "gcnsim/network.hpp"

namespace gcnsim {

// Minimum sigma decrease for a greedy step to count as an improvement.
inline constexpr double kStrictDecrease = 1e-12;

// Spatial sigma of the EDRs across all GCSs at one slot. Every GCS must have
// provisioning or no demand.
inline double spatial_sigma(const Scenario& sc, const SlotState& state, std::span<const double> provision) {
  std::vector<double> etas;
  for (std::size_t g = 0; g < sc.gcs.size(); ++g) {
    etas.push_back(compute_edr(demand_of_gcs(sc, state, sc.gcs[g].id), provision[g]));
  }
  return population_std(etas);
}

namespace detail {

inline bool powered(double demand, double provision) { return provision > 0 || demand == 0; }

// Sigma over the powered GCSs only; nullopt when none is powered.
inline std::optional<double> balance_sigma(std::span<const double> demand, std::span<const double> provision) {
  std::vector<double> etas;
  for (std::size_t g = 0; g < demand.size(); ++g) {
    if (powered(demand[g], provision[g])) etas.push_back(demand[g] == 0 ? 0.0 : demand[g] / provision[g]);
  }
  if (etas.empty()) return std::nullopt;
  return population_std(etas);
}

// Index of the GCS with the largest EDR; lower index on ties. Demand on a
// GCS without provisioning counts as an unbounded EDR.
inline std::optional<std::size_t> max_eta_gcs(std::span<const double> demand, std::span<const double> provision) {
  std::optional<std::size_t> best;
  double best_eta = -1.0;
  for (std::size_t g = 0; g < demand.size(); ++g) {
    const double eta = !powered(demand[g], provision[g]) ? std::numeric_limits<double>::infinity()
                       : demand[g] == 0                  ? 0.0
                                                         : demand[g] / provision[g];
    if (eta > best_eta) {
      best_eta = eta;
      best = g;
    }
  }
  return best;
}

// Demand left on GCSs that have no provisioning this slot.
inline double stranded_demand(std::span<const double> demand, std::span<const double> provision) {
  double total = 0.0;
  for (std::size_t g = 0; g < demand.size(); ++g) {
    if (!powered(demand[g], provision[g])) total += demand[g];
  }
  return total;
}

// Balancing objective: stranded demand first, then sigma over powered GCSs.
struct Objective {
  double stranded = 0.0;
  double sigma = 0.0;
};

inline std::optional<Objective> objective(std::span<const double> demand, std::span<const double> provision) {
  const auto sigma = balance_sigma(demand, provision);
  if (!sigma) return std::nullopt;
  return Objective{stranded_demand(demand, provision), *sigma};
}

inline bool improves(const Objective& a, const Objective& b) {
  if (a.stranded < b.stranded - kStrictDecrease) return true;
  if (b.stranded < a.stranded - kStrictDecrease) return false;
  return a.sigma < b.sigma - kStrictDecrease;
}

inline double eta_of(double demand, double provision) { return demand == 0 ? 0.0 : demand / provision; }

inline std::vector<std::uint32_t> hosted_counts(const Scenario& sc, const SlotState& state) {
  std::vector<std::uint32_t> counts(sc.gcs.size(), 0);
  for (std::size_t u = 0; u < sc.ues.size(); ++u) {
    if (state.consuming[u]) ++counts[sc.gcs_index(state.host[u])];
  }
  return counts;
}

}  // namespace detail

// Bytes moved if Avatar `ue_index` migrates to `dest`; nullopt when the
// destination cannot store its disk.
using PayloadFn = std::function<std::optional<double>(std::size_t ue_index, GcsId dest)>;

inline PayloadFn full_payload(const Scenario& sc) {
  return [&sc](std::size_t u, GcsId) -> std::optional<double> {
    const auto& a = sc.ues[u].avatar;
    return a.cpu_state_bytes + a.memory_bytes + a.disk_bytes;
  };
}

struct MigrationMove {
  AvatarId avatar;
  GcsId from;
  GcsId to;
  double payload_bytes = 0.0;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
};

struct MigrationPlan {
  std::size_t slot = 0;
  std::vector<MigrationMove> moves;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
};

struct ReassociationChange {
  UeId ue;
  EnbId from;
  EnbId to;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
};

struct ReassociationPlan {
  std::size_t slot = 0;
  std::vector<ReassociationChange> changes;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
};

// Greedy live-migration balancing for one slot. Each step takes the single
// Avatar move out of the highest-EDR GCS that lowers spatial sigma the most,
// subject to destination capacity and the UE's delay threshold, and stops at
// a local optimum. Demand stranded on an unprovisioned GCS is drained before
// sigma is considered. Ties prefer the smaller payload, then the most recently
// placed Avatar, then the lower Avatar id, then the lower destination id.
inline MigrationPlan seb_migrate(const Scenario& sc, const CoreGraph& graph, SlotState state,
                                 std::span<const double> provision, const PayloadFn& payload_fn = {}) {
  const PayloadFn payload = payload_fn ? payload_fn : full_payload(sc);
  MigrationPlan plan;
  plan.slot = state.slot;
  auto demand = demands_by_gcs(sc, state);
  auto counts = detail::hosted_counts(sc, state);
  const auto initial = detail::objective(demand, provision);
  plan.sigma_before = plan.sigma_after = initial ? initial->sigma : 0.0;
  if (!initial) return plan;

  std::uint64_t seq = 0;
  for (auto s : state.placed_seq) seq = std::max(seq, s);

  struct Candidate {
    detail::Objective obj;
    double payload;
    std::uint64_t placed;
    std::size_t ue;
    std::size_t dest;
  };
  auto better = [](const Candidate& a, const Candidate& b) {
    if (detail::improves(a.obj, b.obj)) return true;
    if (detail::improves(b.obj, a.obj)) return false;
    if (a.payload != b.payload) return a.payload < b.payload;
    if (a.placed != b.placed) return a.placed > b.placed;
    if (a.ue != b.ue) return a.ue < b.ue;
    return a.dest < b.dest;
  };

  detail::Objective current = *initial;
  const std::size_t max_steps = 4 * (sc.ues.size() + 1) * sc.gcs.size();
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto source = detail::max_eta_gcs(demand, provision);
    if (!source) break;
    std::optional<Candidate> best;
    for (std::size_t u = 0; u < sc.ues.size(); ++u) {
      if (!state.consuming[u] || sc.gcs_index(state.host[u]) != *source) continue;
      const double units = sc.ues[u].avatar.demand_units;
      if (units == 0) continue;
      for (std::size_t g = 0; g < sc.gcs.size(); ++g) {
        if (g == *source || provision[g] <= 0) continue;
        if (counts[g] >= sc.gcs[g].cloudlet_capacity) continue;
        if (e2e_delay(sc, graph, state.serving[u], sc.gcs[g].id) > sc.delay.delay_threshold_ms) continue;
        const auto bytes = payload(u, sc.gcs[g].id);
        if (!bytes) continue;
        demand[*source] -= units;
        demand[g] += units;
        const auto obj = detail::objective(demand, provision);
        demand[*source] += units;
        demand[g] -= units;
        if (!obj) continue;
        Candidate c{*obj, *bytes, state.placed_seq[u], u, g};
        if (!best || better(c, *best)) best = c;
      }
    }
    if (!best || !detail::improves(best->obj, current)) break;

    const double units = sc.ues[best->ue].avatar.demand_units;
    demand[*source] -= units;
    demand[best->dest] += units;
    --counts[*source];
    ++counts[best->dest];
    state.host[best->ue] = sc.gcs[best->dest].id;
    state.placed_seq[best->ue] = ++seq;
    plan.moves.push_back(MigrationMove{sc.ues[best->ue].id, sc.gcs[*source].id, sc.gcs[best->dest].id,
                                       best->payload, current.sigma, best->obj.sigma});
    current = best->obj;
  }
  plan.sigma_after = current.sigma;
  return plan;
}

// Greedy pilot-power balancing: re-associate one UE at a time from an eNB of
// the highest-EDR GCS to a lower-EDR GCS's eNB whose coverage it is in.
// Coverage is the UE's candidate set at the slot; a consuming UE also has to
// stay within its delay threshold.
inline ReassociationPlan seb_pilot_shift(const Scenario& sc, const CoreGraph& graph, SlotState state,
                                         std::span<const double> provision) {
  ReassociationPlan plan;
  plan.slot = state.slot;
  auto demand = demands_by_gcs(sc, state);
  const auto initial = detail::objective(demand, provision);
  plan.sigma_before = plan.sigma_after = initial ? initial->sigma : 0.0;
  if (!initial) return plan;

  detail::Objective current = *initial;
  const std::size_t max_steps = 4 * (sc.ues.size() + 1) * sc.gcs.size();
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto source = detail::max_eta_gcs(demand, provision);
    if (!source) break;
    const double source_eta = provision[*source] > 0 ? detail::eta_of(demand[*source], provision[*source])
                                                     : std::numeric_limits<double>::infinity();
    struct Candidate {
      detail::Objective obj;
      std::size_t ue;
      EnbId enb;
      std::size_t dest;
      double from_delta;
      double to_delta;
    };
    std::optional<Candidate> best;
    for (std::size_t u = 0; u < sc.ues.size(); ++u) {
      if (sc.gcs_index(sc.enb_gcs(state.serving[u])) != *source) continue;
      const double traffic = sc.ues[u].traffic_units.at(state.slot);
      if (traffic == 0) continue;
      for (const auto& enb : sc.ues[u].candidate_enbs.at(state.slot)) {
        const std::size_t g = sc.gcs_index(sc.enb_gcs(enb));
        if (g == *source || provision[g] <= 0) continue;
        if (!(detail::eta_of(demand[g], provision[g]) < source_eta)) continue;
        if (state.consuming[u] && e2e_delay(sc, graph, enb, state.host[u]) > sc.delay.delay_threshold_ms) continue;
        const double from_delta = sc.gcs[*source].enb_traffic_coeff * traffic;
        const double to_delta = sc.gcs[g].enb_traffic_coeff * traffic;
        demand[*source] -= from_delta;
        demand[g] += to_delta;
        const auto obj = detail::objective(demand, provision);
        demand[*source] += from_delta;
        demand[g] -= to_delta;
        if (!obj) continue;
        // Candidates are visited in (UE, eNB name) order, so the first of a
        // tie is already the preferred one.
        if (!best || detail::improves(*obj, best->obj)) {
          best = Candidate{*obj, u, enb, g, from_delta, to_delta};
        }
      }
    }
    if (!best || !detail::improves(best->obj, current)) break;
    demand[*source] -= best->from_delta;
    demand[best->dest] += best->to_delta;
    plan.changes.push_back(ReassociationChange{sc.ues[best->ue].id, state.serving[best->ue], best->enb,
                                               current.sigma, best->obj.sigma});
    state.serving[best->ue] = best->enb;
    current = best->obj;
  }
  plan.sigma_after = current.sigma;
  return plan;
}

inline void apply_plan(const Scenario& sc, SlotState& state, const ReassociationPlan& plan) {
  for (const auto& c : plan.changes) {
    for (std::size_t u = 0; u < sc.ues.size(); ++u) {
      if (sc.ues[u].id == c.ue) state.serving[u] = c.to;
    }
  }
}

struct SebOracleResult {
  std::vector<GcsId> host;  // per UE, full assignment
  double sigma = 0.0;
};

// Exhaustive search over the hosts of the consuming Avatars. Each Avatar may
// stay put or move to any powered GCS within its delay threshold that can
// store it; capacities hold for the whole assignment. Ties resolve to the
// lexicographically smallest assignment vector.
inline SebOracleResult seb_oracle(const Scenario& sc, const CoreGraph& graph, const SlotState& state,
                                  std::span<const double> provision, const PayloadFn& payload_fn = {}) {
  const PayloadFn payload = payload_fn ? payload_fn : full_payload(sc);
  std::vector<std::size_t> movable;
  for (std::size_t u = 0; u < sc.ues.size(); ++u) {
    if (state.consuming[u]) movable.push_back(u);
  }
  if (sc.gcs.size() > 3 || movable.size() > 6) {
    throw TooLarge("seb_oracle handles at most 3 GCSs and 6 movable Avatars");
  }

  std::vector<std::vector<bool>> allowed(movable.size(), std::vector<bool>(sc.gcs.size(), false));
  for (std::size_t m = 0; m < movable.size(); ++m) {
    const std::size_t u = movable[m];
    for (std::size_t g = 0; g < sc.gcs.size(); ++g) {
      const GcsId id = sc.gcs[g].id;
      if (id == state.host[u]) {
        allowed[m][g] = true;
        continue;
      }
      allowed[m][g] = provision[g] > 0 &&
                      e2e_delay(sc, graph, state.serving[u], id) <= sc.delay.delay_threshold_ms &&
                      payload(u, id).has_value();
    }
  }

  const auto identity_counts = detail::hosted_counts(sc, state);
  std::vector<double> base(sc.gcs.size());
  for (std::size_t g = 0; g < sc.gcs.size(); ++g) base[g] = enb_demand(sc, state, sc.gcs[g].id);

  SebOracleResult result;
  result.host = state.host;
  std::optional<detail::Objective> best;
  std::vector<std::size_t> choice(movable.size(), 0);
  std::vector<double> demand(sc.gcs.size());
  std::vector<std::uint32_t> counts(sc.gcs.size());

  auto evaluate = [&] {
    std::fill(counts.begin(), counts.end(), 0);
    demand = base;
    for (std::size_t m = 0; m < movable.size(); ++m) {
      ++counts[choice[m]];
      demand[choice[m]] += sc.ues[movable[m]].avatar.demand_units;
    }
    for (std::size_t g = 0; g < sc.gcs.size(); ++g) {
      if (counts[g] > std::max(sc.gcs[g].cloudlet_capacity, identity_counts[g])) return;
    }
    const auto obj = detail::objective(demand, provision);
    if (!obj) return;
    if (!best || detail::improves(*obj, *best)) {
      best = *obj;
      for (std::size_t m = 0; m < movable.size(); ++m) result.host[movable[m]] = sc.gcs[choice[m]].id;
    }
  };

  auto recurse = [&](auto&& self, std::size_t m) -> void {
    if (m == movable.size()) {
      evaluate();
      return;
    }
    for (std::size_t g = 0; g < sc.gcs.size(); ++g) {
      if (!allowed[m][g]) continue;
      choice[m] = g;
      self(self, m + 1);
    }
  };
  recurse(recurse, 0);
  result.sigma = best ? best->sigma : 0.0;
  return result;
}

inline nlohmann::ordered_json to_json(const MigrationMove& m, std::size_t slot, const char* reason) {
  nlohmann::ordered_json j;
  j["slot"] = slot + 1;
  j["type"] = "migration";
  j["reason"] = reason;
  j["avatar"] = m.avatar.value;
  j["from"] = m.from.value;
  j["to"] = m.to.value;
  j["payload_bytes"] = m.payload_bytes;
  j["sigma_before"] = m.sigma_before;
  j["sigma_after"] = m.sigma_after;
  return j;
}

inline nlohmann::ordered_json to_json(const ReassociationChange& c, std::size_t slot) {
  nlohmann::ordered_json j;
  j["slot"] = slot + 1;
  j["type"] = "reassociation";
  j["ue"] = c.ue.value;
  j["from"] = c.from;
  j["to"] = c.to;
  j["payload_bytes"] = 0;
  j["sigma_before"] = c.sigma_before;
  j["sigma_after"] = c.sigma_after;
  return j;
}

}  // namespace gcnsim
