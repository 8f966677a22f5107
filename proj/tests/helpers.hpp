#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gcnsim/gcnsim.hpp"

namespace testkit {

using namespace gcnsim;

// Builds scenarios in code. Every GCS gets one eNB named "e<id>"; build()
// goes through the validator so the result is sorted and checked.
class Builder {
 public:
  explicit Builder(std::size_t slots, double slot_seconds = 60.0) {
    sc_.time.slots = slots;
    sc_.time.slot_seconds = slot_seconds;
    sc_.delay = {1.0, 100.0};
  }

  Builder& gcs(std::uint32_t id, std::vector<double> generation, std::uint32_t capacity = 10,
               std::uint32_t datanodes = 1) {
    GcsNode g;
    g.id = GcsId{id};
    g.cloudlet_capacity = capacity;
    g.datanode_count = datanodes;
    g.generation = std::move(generation);
    sc_.gcs.push_back(g);
    sc_.core.nodes.push_back(CoreNode{enb(id), NodeKind::Enb, GcsId{id}});
    return *this;
  }

  GcsNode& last_gcs() { return sc_.gcs.back(); }

  Builder& node(const std::string& id, NodeKind kind, std::optional<std::uint32_t> gcs = std::nullopt) {
    CoreNode n{id, kind, std::nullopt};
    if (gcs) n.gcs = GcsId{*gcs};
    sc_.core.nodes.push_back(n);
    return *this;
  }

  Builder& link(const std::string& a, const std::string& b, double ms) {
    sc_.core.links.push_back(CoreLink{a, b, ms});
    return *this;
  }

  Builder& ue(std::uint32_t id, std::vector<std::string> association, std::uint32_t host, std::vector<bool> active,
              double units = 1.0) {
    UserEquipment u;
    u.id = UeId{id};
    u.association = std::move(association);
    u.traffic_units.assign(sc_.time.slots, 0.0);
    u.app_active = std::move(active);
    for (const auto& e : u.association) u.candidate_enbs.push_back({e});
    u.avatar = Avatar{UeId{id}, GcsId{host}, 1e9, 1e8, 1e10, units};
    sc_.ues.push_back(u);
    return *this;
  }

  UserEquipment& last_ue() { return sc_.ues.back(); }

  Builder& delay(double wireless, double threshold) {
    sc_.delay = {wireless, threshold};
    return *this;
  }

  Scenario& raw() { return sc_; }

  Scenario build() const { return validate_scenario(nlohmann::json::parse(scenario_to_json(sc_).dump())); }

  static std::string enb(std::uint32_t gcs) { return "e" + std::to_string(gcs); }

 private:
  Scenario sc_;
};

inline std::string scenario_path(const std::string& name) { return std::string(GCNSIM_SCENARIO_DIR) + "/" + name; }

// Uniform multiple of `step` in [0, hi].
inline double grid_value(std::mt19937_64& rng, double hi, double step) {
  const auto n = static_cast<int>(hi / step + 0.5);
  return step * std::uniform_int_distribution<int>(0, n)(rng);
}

}  // namespace testkit
