#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace gcnsim;

TEST(Edr, Examples) {
  EXPECT_EQ(compute_edr(2, 2), 1.0);
  EXPECT_EQ(compute_edr(0, 2), 0.0);
  EXPECT_EQ(compute_edr(3, 2), 1.5);
  EXPECT_EQ(compute_edr(0, 0), 0.0);
}

TEST(Edr, Errors) {
  EXPECT_THROW(compute_edr(1, 0), UnpoweredDemand);
  EXPECT_THROW(compute_edr(-1, 2), std::invalid_argument);
  EXPECT_THROW(compute_edr(1, -2), std::invalid_argument);
}

TEST(Edr, ScaleInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0.01, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double D = d(rng), E = d(rng), k = std::ldexp(1.0, static_cast<int>(rng() % 10));
    EXPECT_EQ(compute_edr(k * D, k * E), compute_edr(D, E));
  }
}

TEST(PopulationStd, Examples) {
  EXPECT_EQ(population_std(std::vector<double>{1.0, 0.5}), 0.25);
  EXPECT_EQ(population_std(std::vector<double>{1.5, 0.5}), 0.5);
  EXPECT_EQ(population_std(std::vector<double>{1.0, 1.0}), 0.0);
  EXPECT_EQ(population_std(std::vector<double>{7.0}), 0.0);
  EXPECT_THROW(population_std(std::vector<double>{}), EmptyVector);
}

TEST(PopulationStd, ShiftInvariantAndNonNegative) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> xs(1 + rng() % 6), ys;
    for (auto& x : xs) x = d(rng);
    for (double x : xs) ys.push_back(x + 3.0);
    EXPECT_GE(population_std(xs), 0.0);
    EXPECT_NEAR(population_std(xs), population_std(ys), 1e-12);
  }
}

TEST(Settle, Examples) {
  auto s = settle_slot(0, 3, 2);
  EXPECT_EQ(s.on_grid, 1.0);
  EXPECT_EQ(s.residual_after, 0.0);
  s = settle_slot(1, 1, 2);
  EXPECT_EQ(s.on_grid, 0.0);
  EXPECT_EQ(s.residual_after, 2.0);
  s = settle_slot(0, 2, 2);
  EXPECT_EQ(s.on_grid, 0.0);
  EXPECT_EQ(s.residual_after, 0.0);
}

TEST(Settle, ResidualCoversShortfall) {
  const auto s = settle_slot(1.5, 3, 2);
  EXPECT_EQ(s.on_grid, 0.0);
  EXPECT_EQ(s.residual_after, 0.5);
}

TEST(Settle, CapacityWastesSurplus) {
  const auto s = settle_slot(1, 0, 3, 2.5);
  EXPECT_EQ(s.residual_after, 2.5);
  EXPECT_EQ(s.wasted, 1.5);
}

TEST(Settle, ConservationOnQuarterGrid) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    LedgerCell c;
    c.residual_before = testkit::grid_value(rng, 4, 0.25);
    c.demand = testkit::grid_value(rng, 6, 0.25);
    c.provisioned = testkit::grid_value(rng, 6, 0.25);
    const double cap = (rng() % 2) ? testkit::grid_value(rng, 5, 0.25) : std::numeric_limits<double>::infinity();
    const auto s = settle_slot(c.residual_before, c.demand, c.provisioned, cap);
    c.on_grid = s.on_grid;
    c.residual_after = s.residual_after;
    c.wasted = s.wasted;
    EXPECT_EQ(conservation_gap(c), 0.0);
    EXPECT_GE(s.on_grid, 0.0);
    EXPECT_LE(s.residual_after, cap);
    EXPECT_TRUE(s.on_grid == 0.0 || s.residual_after == 0.0);
  }
}

TEST(Settle, ConservationFractional) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(0.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    LedgerCell c;
    c.residual_before = d(rng);
    c.demand = d(rng);
    c.provisioned = d(rng);
    const auto s = settle_slot(c.residual_before, c.demand, c.provisioned, d(rng));
    c.on_grid = s.on_grid;
    c.residual_after = s.residual_after;
    c.wasted = s.wasted;
    EXPECT_LE(std::abs(conservation_gap(c)), 1e-12);
  }
}

TEST(Ledger, CsvLayout) {
  EnergyLedger ledger(2, 2);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t t = 0; t < 2; ++t) {
      auto& c = ledger.at(g, t);
      c.gcs = GcsId{static_cast<std::uint32_t>(g + 1)};
      c.slot = t;
      c.demand = 1;
      c.provisioned = g == 0 ? 2 : 0;
      if (g == 0) c.eta = 0.5;
    }
  }
  std::ostringstream os;
  ledger.write_csv(os);
  EXPECT_EQ(os.str(),
            "gcs_id,slot,D,G,E,residual_before,residual_after,on_grid,eta\n"
            "1,1,1,0,2,0,0,0,0.5\n"
            "1,2,1,0,2,0,0,0,0.5\n"
            "2,1,1,0,0,0,0,0,\n"
            "2,2,1,0,0,0,0,0,\n");
  EXPECT_EQ(ledger.temporal(0), (std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(ledger.spatial(1) == std::vector<double>{0.5});
}
