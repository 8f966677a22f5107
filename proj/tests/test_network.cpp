#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace gcnsim;
using testkit::Builder;

namespace {

CoreSpec spec(std::vector<CoreNode> nodes, std::vector<CoreLink> links) {
  CoreSpec s;
  s.nodes = std::move(nodes);
  s.links = std::move(links);
  return s;
}

CoreNode enb(const std::string& id, std::uint32_t g) { return CoreNode{id, NodeKind::Enb, GcsId{g}}; }
CoreNode sw(const std::string& id) { return CoreNode{id, NodeKind::Switch, std::nullopt}; }
CoreNode gw(const std::string& id) { return CoreNode{id, NodeKind::Gateway, std::nullopt}; }

CoreSpec line() {
  return spec({enb("e1", 1), sw("s1"), sw("s2"), enb("e2", 2)},
              {{"e1", "s1", 1}, {"s1", "s2", 1}, {"s2", "e2", 1}});
}

CoreSpec star_with_shortcut() {
  return spec({enb("e1", 1), enb("e2", 2), sw("s1"), sw("s2"), sw("s3"), gw("GW")},
              {{"e1", "s1", 1}, {"s1", "GW", 1}, {"GW", "s2", 1}, {"s2", "e2", 1}, {"e1", "s3", 1}, {"s3", "e2", 1}});
}

double path_latency(const CoreGraph& g, const Route& r) {
  double acc = 0.0;
  for (std::size_t i = 1; i < r.path.size(); ++i) acc += g.link_latency(r.path[i - 1], r.path[i]);
  return acc;
}

}  // namespace

TEST(Route, SameEndpointIsEmpty) {
  const CoreGraph g(line(), CoreMode::Sdn);
  const auto r = g.route("e1", "e1");
  EXPECT_TRUE(r.path.empty());
  EXPECT_EQ(r.delay_ms, 0.0);
}

TEST(Route, LineTopology) {
  const CoreGraph g(line(), CoreMode::Sdn);
  const auto r = g.route("e1", "e2");
  EXPECT_EQ(r.path, (std::vector<NodeId>{"e1", "s1", "s2", "e2"}));
  EXPECT_EQ(r.delay_ms, 3.0);
}

TEST(Route, SdnTakesShortcutEpcGoesThroughGateway) {
  const CoreGraph sdn(star_with_shortcut(), CoreMode::Sdn);
  const CoreGraph epc(star_with_shortcut(), CoreMode::Epc);
  const auto a = sdn.route("e1", "e2");
  EXPECT_EQ(a.path, (std::vector<NodeId>{"e1", "s3", "e2"}));
  EXPECT_EQ(a.delay_ms, 2.0);
  const auto b = epc.route("e1", "e2");
  EXPECT_EQ(b.path, (std::vector<NodeId>{"e1", "s1", "GW", "s2", "e2"}));
  EXPECT_EQ(b.delay_ms, 4.0);
}

TEST(Route, TiesGoToSmallestNodeSequence) {
  const CoreGraph g(spec({enb("e1", 1), enb("e2", 2), sw("b"), sw("a")},
                         {{"e1", "b", 1}, {"b", "e2", 1}, {"e1", "a", 1}, {"a", "e2", 1}}),
                    CoreMode::Sdn);
  EXPECT_EQ(g.route("e1", "e2").path, (std::vector<NodeId>{"e1", "a", "e2"}));
  EXPECT_EQ(g.route("e2", "e1").path, (std::vector<NodeId>{"e2", "a", "e1"}));
}

TEST(Route, Errors) {
  EXPECT_THROW(CoreGraph(spec({enb("e1", 1), enb("e2", 2)}, {}), CoreMode::Sdn), InvariantError);
  EXPECT_THROW(CoreGraph(line(), CoreMode::Epc), InvariantError);
  const CoreGraph g(line(), CoreMode::Sdn);
  EXPECT_THROW(g.route("e1", "zz"), Unreachable);
}

TEST(Route, RandomGraphProperties) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<CoreNode> nodes;
    for (std::size_t k = 0; k < n; ++k) {
      const std::string id = "n" + std::to_string(k);
      nodes.push_back(k == 0 ? gw(id) : k % 3 == 1 ? enb(id, 1) : sw(id));
    }
    std::vector<CoreLink> links;
    for (std::size_t k = 1; k < n; ++k) {
      links.push_back({"n" + std::to_string(rng() % k), "n" + std::to_string(k), 0.25 * (1 + rng() % 8)});
    }
    for (int extra = 0; extra < 3; ++extra) {
      const auto a = rng() % n, b = rng() % n;
      if (a != b) links.push_back({"n" + std::to_string(a), "n" + std::to_string(b), 0.25 * (1 + rng() % 8)});
    }
    const CoreGraph sdn(spec(nodes, links), CoreMode::Sdn);
    const CoreGraph epc(spec(nodes, links), CoreMode::Epc);
    for (const auto& a : nodes) {
      for (const auto& b : nodes) {
        if (a.kind == NodeKind::Switch || b.kind == NodeKind::Switch) continue;
        const auto rs = sdn.route(a.id, b.id);
        const auto re = epc.route(a.id, b.id);
        EXPECT_EQ(rs.delay_ms, path_latency(sdn, rs));
        EXPECT_EQ(re.delay_ms, path_latency(epc, re));
        EXPECT_GE(re.delay_ms, rs.delay_ms);
        EXPECT_EQ(rs.delay_ms, sdn.route(b.id, a.id).delay_ms);
        EXPECT_EQ(std::set<NodeId>(rs.path.begin(), rs.path.end()).size(), rs.path.size());
        if (a.id != b.id) {
          EXPECT_NE(std::find(re.path.begin(), re.path.end(), "n0"), re.path.end());
        }
      }
    }
  }
}

TEST(E2eDelay, LocalRemoteAndShared) {
  Builder b(1);
  b.gcs(1, {1}).gcs(2, {1}).node("s1", NodeKind::Switch).node("s2", NodeKind::Switch);
  b.node("e1b", NodeKind::Enb, 1);
  b.link("e1", "s1", 1).link("s1", "s2", 1).link("s2", "e2", 1).link("e1b", "s2", 1);
  b.delay(5, 20);
  const Scenario sc = b.build();
  const CoreGraph g(sc.core, CoreMode::Sdn);
  EXPECT_EQ(e2e_delay(sc, g, "e1", GcsId{1}), 5.0);
  EXPECT_EQ(e2e_delay(sc, g, "e1", GcsId{2}), 8.0);
  EXPECT_EQ(e2e_delay(sc, g, "e1b", GcsId{1}), 5.0);
  EXPECT_EQ(e2e_delay(sc, g, "e2", GcsId{1}), 7.0);  // nearest eNB of the cloudlet is e1b
}

TEST(Traffic, Accounting) {
  TrafficAccounting acc;
  acc.record_flow(FlowKind::D2A, {}, 1e6, 0, "e1", "e1");
  EXPECT_EQ(acc.kind_total(FlowKind::D2A), 1e6);
  EXPECT_EQ(acc.core_total(FlowKind::D2A), 0.0);

  const std::vector<NodeId> path{"e1", "s1", "s2", "e2"};
  acc.record_flow(FlowKind::Sync, path, 1e7, 0);
  for (std::size_t i = 1; i < path.size(); ++i) EXPECT_EQ(acc.link_total(path[i - 1], path[i], FlowKind::Sync), 1e7);
  acc.record_flow(FlowKind::Sync, {"s2", "s1"}, 5e6, 1);
  EXPECT_EQ(acc.link_total("s1", "s2", FlowKind::Sync), 1.5e7);
  EXPECT_EQ(acc.core_total(FlowKind::Sync), 1.5e7);
  EXPECT_EQ(acc.slot_totals(1)[1], 5e6);
  EXPECT_EQ(acc.flows().size(), 3u);

  std::ostringstream os;
  acc.write_csv(os);
  EXPECT_EQ(os.str(),
            "slot,link_src,link_dst,d2a_bytes,sync_bytes,migration_bytes\n"
            "1,e1,s1,0,1e+07,0\n"
            "1,e2,s2,0,1e+07,0\n"
            "1,s1,s2,0,1e+07,0\n"
            "2,s1,s2,0,5e+06,0\n");
}
