#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace gcnsim;
using testkit::Builder;

namespace {

const GcsId A{1}, B{2}, C{3};

DataNodeId dn(GcsId g, std::uint32_t i) { return DataNodeId{g, i}; }

std::set<DataNodeId> all_nodes() { return {dn(A, 1), dn(A, 2), dn(B, 1), dn(C, 1)}; }

// Three cloudlets on a line; A has two DataNodes.
Scenario three_cloudlets() {
  Builder b(1);
  b.gcs(1, {1}, 10, 2).gcs(2, {1}).gcs(3, {1});
  b.node("s", NodeKind::Switch).link("e1", "s", 1).link("s", "e2", 1).link("e2", "e3", 1);
  b.ue(1, {"e1"}, 1, {true});
  return b.build();
}

}  // namespace

TEST(Heartbeat, UpdatesLastSeen) {
  NameNodeState s;
  s.datanodes[dn(A, 1)] = {};
  EXPECT_FALSE(process_heartbeat(s, dn(A, 1), 3));
  EXPECT_EQ(s.datanodes[dn(A, 1)].last_heartbeat, 3.0);
  EXPECT_EQ(s.datanodes[dn(A, 1)].status, NodeStatus::Alive);
}

TEST(Heartbeat, RejoinIsStale) {
  NameNodeState s;
  s.datanodes[dn(A, 1)] = {0.0, NodeStatus::Dead, false};
  EXPECT_TRUE(process_heartbeat(s, dn(A, 1), 400));
  EXPECT_EQ(s.datanodes[dn(A, 1)].status, NodeStatus::Alive);
  EXPECT_TRUE(s.datanodes[dn(A, 1)].stale);
  EXPECT_FALSE(s.eligible(dn(A, 1)));
}

TEST(Heartbeat, UnknownNode) {
  NameNodeState s;
  EXPECT_THROW(process_heartbeat(s, dn(A, 9), 0), UnknownDataNode);
}

TEST(FailureDetection, StrictTimeout) {
  NameNodeState s;
  s.datanodes[dn(A, 1)] = {};
  EXPECT_TRUE(detect_failures(s, 300, 300).empty());
  const auto dead = detect_failures(s, 301, 300);
  ASSERT_EQ(dead.size(), 1u);
  EXPECT_EQ(dead[0], dn(A, 1));
}

TEST(FailureDetection, BeatingNodesSurvive) {
  NameNodeState s;
  for (const auto& id : all_nodes()) s.datanodes[id] = {};
  for (double t = 3; t <= 900; t += 3) {
    for (const auto& id : all_nodes()) process_heartbeat(s, id, t);
    EXPECT_TRUE(detect_failures(s, t, 300).empty());
  }
}

TEST(FailureDetection, PrimaryLossMakesAvatarUnavailable) {
  NameNodeState s;
  s.datanodes[dn(A, 1)] = {};
  s.placements[UeId{1}] = Placement{dn(A, 1), {}, true, false, false};
  detect_failures(s, 400, 300);
  EXPECT_FALSE(s.placements[UeId{1}].available);
}

TEST(Replicas, LocalThenMostVisited) {
  const VisitHistogram::Counts visits{{A, 10}, {B, 5}, {C, 1}};
  auto r = place_replicas(visits, 2, dn(A, 1), all_nodes());
  EXPECT_EQ(r.replicas, (std::set<DataNodeId>{dn(A, 2), dn(B, 1)}));
  EXPECT_FALSE(r.degraded);
  r = place_replicas(visits, 1, dn(A, 1), all_nodes());
  EXPECT_EQ(r.replicas, (std::set<DataNodeId>{dn(A, 2)}));
}

TEST(Replicas, NoSpareLocalNodeIsDegraded) {
  const VisitHistogram::Counts visits{{A, 10}, {B, 5}, {C, 1}};
  const auto r = place_replicas(visits, 2, dn(A, 1), {dn(A, 1), dn(B, 1), dn(C, 1)});
  EXPECT_EQ(r.replicas, (std::set<DataNodeId>{dn(B, 1), dn(C, 1)}));
  EXPECT_TRUE(r.degraded);
}

TEST(Replicas, VisitTiesGoToLowerGcs) {
  const auto r = place_replicas({}, 2, dn(A, 1), {dn(A, 1), dn(B, 1), dn(C, 1)});
  EXPECT_EQ(r.replicas, (std::set<DataNodeId>{dn(B, 1), dn(C, 1)}));
}

TEST(MigrationPayload, Examples) {
  const Avatar a{UeId{1}, A, 2e9, 1e8, 3e10, 1};
  EXPECT_EQ(migration_payload(a, Placement{dn(A, 1), {dn(B, 1)}}, B), 2.1e9);
  EXPECT_EQ(migration_payload(a, Placement{dn(A, 1), {dn(C, 1)}}, B), 3.21e10);
  EXPECT_EQ(migration_payload(Avatar{UeId{2}, A, 0, 0, 0, 0}, Placement{dn(A, 1), {}}, B), 0.0);
}

TEST(Sync, LocalReplicasStayOffTheCore) {
  const Scenario sc = three_cloudlets();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  const auto local = sync_tick(sc, g, Placement{dn(A, 1), {dn(A, 2)}}, 1e7, 0);
  ASSERT_EQ(local.size(), 1u);
  EXPECT_EQ(local[0].core_bytes(), 0.0);

  const auto remote = sync_tick(sc, g, Placement{dn(A, 1), {dn(C, 1)}}, 1e7, 0);
  ASSERT_EQ(remote.size(), 1u);
  EXPECT_EQ(remote[0].path, (std::vector<NodeId>{"e1", "s", "e2", "e3"}));
  TrafficAccounting acc;
  acc.record(remote[0]);
  EXPECT_EQ(acc.link_total("e1", "s", FlowKind::Sync), 1e7);
  EXPECT_EQ(acc.link_total("s", "e2", FlowKind::Sync), 1e7);
  EXPECT_EQ(acc.link_total("e2", "e3", FlowKind::Sync), 1e7);

  Placement down{dn(A, 1), {dn(C, 1)}};
  down.available = false;
  EXPECT_TRUE(sync_tick(sc, g, down, 1e7, 0).empty());
}

TEST(Recovery, PromotesLocalReplica) {
  const Scenario sc = three_cloudlets();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  NameNodeState s = NameNodeState::register_all(sc);
  s.placements[UeId{1}] = Placement{dn(A, 1), {dn(A, 2), dn(B, 1)}};
  s.datanodes[dn(A, 1)].last_heartbeat = -1000;
  detect_failures(s, 0, 300);
  VisitHistogram visits;
  visits.record(UeId{1}, A, 5);
  visits.record(UeId{1}, B, 1);
  const auto report = recover(s, sc, g, visits, 2, {}, 0);
  ASSERT_EQ(report.promotions.size(), 1u);
  EXPECT_EQ(report.promotions[0].to, dn(A, 2));
  const auto& p = s.placements[UeId{1}];
  EXPECT_TRUE(p.available);
  EXPECT_EQ(p.primary, dn(A, 2));
  EXPECT_EQ(p.replicas, (std::set<DataNodeId>{dn(B, 1), dn(C, 1)}));
  EXPECT_TRUE(p.degraded);
}

TEST(Recovery, ResumesAtRemoteReplica) {
  const Scenario sc = three_cloudlets();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  NameNodeState s = NameNodeState::register_all(sc);
  s.placements[UeId{1}] = Placement{dn(A, 1), {dn(A, 2), dn(B, 1)}};
  s.datanodes[dn(A, 1)].last_heartbeat = -1000;
  s.datanodes[dn(A, 2)].last_heartbeat = -1000;
  detect_failures(s, 0, 300);
  int rehosted = 0;
  const RehostFn rehost = [&](AvatarId, GcsId from, GcsId to) {
    EXPECT_EQ(from, A);
    EXPECT_EQ(to, B);
    ++rehosted;
    return true;
  };
  const auto report = recover(s, sc, g, VisitHistogram{}, 2, rehost, 0);
  EXPECT_EQ(rehosted, 1);
  EXPECT_EQ(s.placements[UeId{1}].primary, dn(B, 1));
  ASSERT_EQ(report.rereplications.size(), 1u);
  EXPECT_EQ(report.rereplications[0].target, dn(C, 1));
  ASSERT_EQ(report.flows.size(), 1u);
  EXPECT_EQ(report.flows[0].bytes, sc.ues[0].avatar.disk_bytes);
}

TEST(Recovery, AllCopiesDeadIsDataLoss) {
  const Scenario sc = three_cloudlets();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  NameNodeState s = NameNodeState::register_all(sc);
  s.placements[UeId{1}] = Placement{dn(A, 1), {dn(A, 2)}};
  s.datanodes[dn(A, 1)].last_heartbeat = -1000;
  s.datanodes[dn(A, 2)].last_heartbeat = -1000;
  detect_failures(s, 0, 300);
  auto report = recover(s, sc, g, VisitHistogram{}, 2, {}, 0);
  EXPECT_EQ(report.data_loss, std::vector<AvatarId>{UeId{1}});
  EXPECT_TRUE(s.placements[UeId{1}].lost);
  report = recover(s, sc, g, VisitHistogram{}, 2, {}, 0);
  EXPECT_TRUE(report.data_loss.empty());
}

TEST(Runtime, DeathAtFirstTickPastTimeout) {
  Scenario sc = three_cloudlets();
  sc.cnfs.failures.push_back(FailureWindow{dn(A, 1), 10.0, std::nullopt});
  const CoreGraph g(sc.core, CoreMode::Sdn);
  CnfsRuntime rt(sc, g);
  rt.initialize({A}, VisitHistogram::from_traces(sc));
  EXPECT_EQ(rt.state().placements.at(UeId{1}).primary, dn(A, 1));
  VisitHistogram visits;
  for (int t = 1; t <= 312; ++t) {
    const auto r = rt.tick(t, 0, visits, {}, {});
    // Last beat at 9 s; 309 - 9 = 300 is not yet past the timeout.
    if (t < 310) {
      EXPECT_TRUE(r.deaths.empty()) << t;
    } else if (t == 310) {
      ASSERT_EQ(r.deaths.size(), 1u);
      EXPECT_TRUE(rt.available(UeId{1}));
      EXPECT_EQ(rt.state().placements.at(UeId{1}).primary, dn(A, 2));
    }
  }
}

TEST(Runtime, RejoinedNodeWaitsForSync) {
  Scenario sc = three_cloudlets();
  sc.cnfs.failures.push_back(FailureWindow{dn(C, 1), 0.0, 600.0});
  const CoreGraph g(sc.core, CoreMode::Sdn);
  CnfsRuntime rt(sc, g);
  rt.initialize({A}, VisitHistogram::from_traces(sc));
  VisitHistogram visits;
  for (int t = 3; t <= 600; t += 3) rt.tick(t, 0, visits, {}, {});
  EXPECT_TRUE(rt.state().datanodes.at(dn(C, 1)).stale);
  for (int t = 603; t <= 660; t += 3) rt.tick(t, 0, visits, {}, {});
  EXPECT_FALSE(rt.state().datanodes.at(dn(C, 1)).stale);
  ASSERT_EQ(rt.events().size(), 2u);
  EXPECT_EQ(rt.events()[0]["event"], "death");
  EXPECT_EQ(rt.events()[1]["event"], "heartbeat");
}

TEST(Runtime, MigrationPromotesReplicaAtDestination) {
  const Scenario sc = three_cloudlets();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  CnfsRuntime rt(sc, g);
  VisitHistogram mobility;
  mobility.record(UeId{1}, B, 3);
  rt.initialize({A}, mobility);
  EXPECT_EQ(rt.state().placements.at(UeId{1}).replicas, (std::set<DataNodeId>{dn(A, 2), dn(B, 1)}));
  const Avatar& avatar = sc.ues[0].avatar;
  EXPECT_EQ(rt.payload_if_migrated(avatar, B), avatar.memory_bytes + avatar.cpu_state_bytes);
  EXPECT_EQ(rt.payload_if_migrated(avatar, C), avatar.memory_bytes + avatar.cpu_state_bytes + avatar.disk_bytes);
  const auto flow = rt.migrate(avatar, B, 0);
  EXPECT_EQ(flow.kind, FlowKind::Migration);
  EXPECT_EQ(flow.bytes, avatar.memory_bytes + avatar.cpu_state_bytes);
  EXPECT_EQ(rt.state().placements.at(UeId{1}).primary, dn(B, 1));
  EXPECT_EQ(rt.state().placements.at(UeId{1}).replicas, (std::set<DataNodeId>{dn(A, 1), dn(A, 2)}));
  EXPECT_EQ(rt.host(UeId{1}), B);
}
