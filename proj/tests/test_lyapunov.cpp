#include <gtest/gtest.h>

#include <cmath>

#include "feelsel/feelsel.hpp"
#include "oracles.hpp"

using namespace feelsel;

namespace {

RsuQueueState queue(double Q, double X_total = 0.0) {
  RsuQueueState q;
  q.Q = Q;
  q.X_total = X_total;
  return q;
}

}  // namespace

TEST(Arrivals, Examples) {
  EXPECT_DOUBLE_EQ(arrivals(0, 10), 0.0);
  EXPECT_DOUBLE_EQ(arrivals(4, 10), 40.0);
  EXPECT_DOUBLE_EQ(arrivals(200, 10), 2000.0);
}

TEST(QueueUpdate, Examples) {
  EXPECT_DOUBLE_EQ(queue_update(100, 40, 60), 80.0);
  EXPECT_DOUBLE_EQ(queue_update(10, 0, 50), 0.0);
  EXPECT_DOUBLE_EQ(queue_update(0, 0, 0), 0.0);
}

TEST(ExpectedAccuracy, Examples) {
  LearnParams l;
  EXPECT_DOUBLE_EQ(expected_accuracy(1.0, l), 0.0);
  EXPECT_DOUBLE_EQ(expected_accuracy(0.0, l), 0.0);
  EXPECT_LT(oracle::rel_err(expected_accuracy(47760.0, l), 1.0 - std::pow(47760.0, -0.3)), 1e-12);
  EXPECT_NEAR(expected_accuracy(47760.0, l), 0.9605, 5e-5);
  for (double x = 1.0; x < 1e7; x *= 1.7) EXPECT_GT(expected_accuracy(2 * x, l), expected_accuracy(x, l));
}

TEST(ExpectedAccuracy, ConcaveAndBounded) {
  LearnParams l;
  for (double x = 2.0; x < 1e6; x *= 1.3) {
    const double h = 0.01 * x;
    const double second = expected_accuracy(x + h, l) - 2 * expected_accuracy(x, l) + expected_accuracy(x - h, l);
    EXPECT_LE(second, 1e-12) << x;
    EXPECT_GE(expected_accuracy(x, l), 0.0);
    EXPECT_LE(expected_accuracy(x, l), 1.0);
  }
  EXPECT_DOUBLE_EQ(expected_accuracy(0.5, l), 0.0);  // clamped below
  EXPECT_NEAR(training_loss(47760.0, l) + expected_accuracy(47760.0, l), 1.0, 1e-15);
}

TEST(Utility, Examples) {
  SimConfig c;
  auto q = queue(0, 500);
  EXPECT_DOUBLE_EQ(utility(0, q, c), expected_accuracy(500, c.learn));
  EXPECT_LT(oracle::rel_err(utility(1, queue(0, 0), c), 1.0 - std::pow(10.0, -0.3)), 1e-12);
  EXPECT_NEAR(utility(1, queue(0, 0), c), 0.4988, 5e-5);
  for (int s = 0; s < 100; ++s) EXPECT_LE(utility(s, q, c), utility(s + 1, q, c));
}

TEST(Objective, Examples) {
  SimConfig c;
  const auto q0 = queue(0, 1000);
  for (int s = 0; s < 10; ++s) EXPECT_DOUBLE_EQ(objective(s, q0, 0, c), c.learn.gamma * utility(s, q0, c));

  const auto q = queue(1000, 1000);
  const double want = 1e9 * expected_accuracy(1040, c.learn) + 40000.0;
  EXPECT_LT(oracle::rel_err(objective(4, q, 0, c), want), 1e-12);

  for (int k : {0, 5, 30, 100})
    EXPECT_EQ(optimal_selection_count(queue(1500, 300), k, c, 0.0),
              optimal_selection_count(queue(1500, 300), k, c, 50.0));
}

TEST(OptimalSelection, Examples) {
  SimConfig c;
  EXPECT_EQ(optimal_selection_count(queue(2000), 100, c), 0);
  EXPECT_EQ(optimal_selection_count(queue(1950), 100, c), 5);
  EXPECT_EQ(optimal_selection_count(queue(0), 100, c), 100);
  EXPECT_EQ(optimal_selection_count(queue(0), 0, c), 0);
  EXPECT_EQ(optimal_selection_count(queue(2500), 100, c), 0);  // already over: nothing fits
}

TEST(OptimalSelection, MatchesBruteForceAndIgnoresMuHat) {
  Rng rng(99);
  for (int n = 0; n < 1000; ++n) {
    SimConfig c;
    c.learn.gamma = std::pow(10.0, rng.uniform() * 12.0 - 2.0);  // include drift-dominated regimes
    auto q = queue(std::floor(rng.uniform() * 2100.0), std::floor(rng.uniform() * 60000.0));
    const int k = static_cast<int>(rng.uniform_int(0, 250));
    const int s = optimal_selection_count(q, k, c, 0.0);
    ASSERT_EQ(s, oracle::brute_force_argmax(q, k, c, 0.0));
    for (double mu : {17.0, 999.0}) ASSERT_EQ(optimal_selection_count(q, k, c, mu), s);
    ASSERT_LE(q.Q + arrivals(s, c.D_a), std::max(q.Q, c.Q_max));
    ASSERT_LE(s, k);
  }
}

TEST(StabilityMetric, Examples) {
  const std::vector<double> zeros = {0, 0, 0};
  EXPECT_DOUBLE_EQ(stability_metric(zeros), 0.0);
  const std::vector<double> full(50, 2000.0);
  EXPECT_DOUBLE_EQ(stability_metric(full), 2000.0);
  const std::vector<double> two = {1000, 2000};
  EXPECT_DOUBLE_EQ(stability_metric(two), 1500.0);
  EXPECT_THROW(stability_metric(std::vector<double>{}), DomainError);
}
