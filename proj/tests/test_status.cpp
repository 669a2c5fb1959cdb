#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "feelsel/feelsel.hpp"
#include "oracles.hpp"

using namespace feelsel;

TEST(RemainingData, Examples) {
  auto a = update_remaining_data(1500, true, 10);
  EXPECT_DOUBLE_EQ(a.A, 1490);
  EXPECT_FALSE(a.violation);
  auto b = update_remaining_data(1500, false, 10);
  EXPECT_DOUBLE_EQ(b.A, 1500);
  EXPECT_FALSE(b.violation);
  auto c = update_remaining_data(0, true, 10);
  EXPECT_DOUBLE_EQ(c.A, 0);
  EXPECT_TRUE(c.violation);
}

TEST(Survival, InitialExamples) {
  SimConfig c;
  EXPECT_DOUBLE_EQ(initial_survival(c, 0), 100.0);
  EXPECT_DOUBLE_EQ(initial_survival(c, c.E), 0.0);
  EXPECT_DOUBLE_EQ(initial_survival(c, 400), 60.0);
}

TEST(Survival, UpdateExamples) {
  EXPECT_NEAR(update_survival(100, 0.1), 99.9, 1e-12);
  EXPECT_DOUBLE_EQ(update_survival(0.1, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(update_survival(0, 0.1), 0.0);
}

TEST(ComputeStatus, SingleVehicleHasNoCollisionRisk) {
  SimConfig c;
  c.K = 1;
  const std::vector<VehicleState> v = {{0, 300.0, 1500.0, 70.0, true}};
  const auto s = compute_status(v[0], v, c);
  EXPECT_DOUBLE_EQ(s.P_col, 0.0);
  EXPECT_DOUBLE_EQ(s.A, 1500.0);
  EXPECT_DOUBLE_EQ(s.S, 70.0);
  EXPECT_GT(s.D, 0.0);
}

TEST(ComputeStatus, DelayChainAtHundredMetres) {
  SimConfig c;
  const double x = rsu_position(c) - 100.0;
  const std::vector<VehicleState> v = {{0, x, 1500.0, 50.0, true}, {1, x, 1500.0, 50.0, true}};
  const auto s = compute_status(v[0], v, c);
  EXPECT_LT(oracle::rel_err(s.D, 10.0 / (7.5 * std::exp(-0.04))), 1e-9);
  EXPECT_NEAR(s.D, 1.388, 5e-4);
  EXPECT_GT(s.P_col, 0.0);
  EXPECT_LE(s.P_col, 1.0);
}

TEST(ComputeStatus, IndependentOfPopulationOrder) {
  SimConfig c;
  c.K = 60;
  auto v = init_scenario(c, Rng(3));
  std::vector<StatusVector> ref;
  for (const auto& x : v) ref.push_back(compute_status(x, v, c));
  Rng rng(4);
  for (int round = 0; round < 3; ++round) {
    std::shuffle(v.begin(), v.end(), rng.engine());
    StatusContext ctx(c, v);
    for (const auto& x : v) {
      const auto s = compute_status(x, ctx);
      EXPECT_EQ(s, ref[static_cast<std::size_t>(x.id)]);
    }
  }
}

TEST(ComputeStatus, DeterministicAndInvariantsHold) {
  SimConfig c;
  c.K = 150;
  const auto v = init_scenario(c, Rng(12));
  StatusContext a(c, v), b(c, v);
  for (const auto& x : v) {
    const auto s = compute_status(x, a);
    EXPECT_EQ(s, compute_status(x, b));
    EXPECT_GE(s.A, 0.0);
    EXPECT_GT(s.D, 0.0);
    EXPECT_GE(s.P_col, 0.0);
    EXPECT_LE(s.P_col, 1.0);
    EXPECT_GE(s.S, 0.0);
  }
}

TEST(ComputeStatus, DeadVehiclesDoNotInterfere) {
  SimConfig c;
  std::vector<VehicleState> v = {{0, 400.0, 1500.0, 60.0, true}, {1, 450.0, 1500.0, 55.0, true}};
  const double with = compute_status(v[0], v, c).P_col;
  v[1].alive = false;
  EXPECT_GT(with, 0.0);
  EXPECT_DOUBLE_EQ(compute_status(v[0], v, c).P_col, 0.0);
}

TEST(Priority, Examples) {
  EXPECT_DOUBLE_EQ(priority({0, 100, 1, 0.1, 10}), 100.0);
  EXPECT_DOUBLE_EQ(priority({0, 100, 1, 0.1, 0}), 0.0);
  const double p = priority({0, 1500, 1.388, 0.00525, 100});
  EXPECT_NEAR(p, 1500.0 / (1.388 * 0.00525 * 100.0), 1e-9);
  EXPECT_NEAR(p, 2059.0, 1.0);
}

TEST(Priority, ZeroCollisionProbability) {
  const StatusVector clean{0, 100, 1, 0.0, 10};
  EXPECT_DOUBLE_EQ(priority(clean, PriorityMode::literal), 0.0);
  EXPECT_DOUBLE_EQ(priority(clean, PriorityMode::floored, 1e-6), 100.0 / (1e-6 * 10.0));
  EXPECT_GT(priority(clean), priority({1, 100, 1, 0.01, 10}));
  EXPECT_DOUBLE_EQ(priority({0, 100, 1, 0.0, 0.0}, PriorityMode::floored), 0.0);
}

TEST(Priority, MonotoneInEachEntry) {
  Rng rng(8);
  for (int n = 0; n < 500; ++n) {
    const StatusVector s{0, 10 + 1000 * rng.uniform(), 0.5 + 2 * rng.uniform(), 0.001 + 0.5 * rng.uniform(),
                         0.5 + 90 * rng.uniform()};
    const double p = priority(s);
    auto up = [&](double StatusVector::*f) {
      StatusVector t = s;
      t.*f *= 1.1;
      return priority(t);
    };
    EXPECT_GT(up(&StatusVector::A), p);
    EXPECT_LT(up(&StatusVector::D), p);
    EXPECT_LT(up(&StatusVector::P_col), p);
    EXPECT_LT(up(&StatusVector::S), p);
  }
}
