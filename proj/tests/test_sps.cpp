#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "feelsel/feelsel.hpp"
#include "oracles.hpp"

using namespace feelsel;
using oracle::rel_err;

namespace {

SpsParams sps_for(int S, double f) {
  SpsParams s;
  s.S = S;
  set_frequency(s, f);
  return s;
}

}  // namespace

TEST(TotalResources, Examples) {
  auto a = total_resources(sps_for(4, 10));
  EXPECT_EQ(a.N_T, 400);
  EXPECT_EQ(a.N_lc, 80);
  auto b = total_resources(sps_for(2, 50));
  EXPECT_EQ(b.N_T, 40);
  EXPECT_EQ(b.N_lc, 8);
  auto c = total_resources(sps_for(2, 20));
  EXPECT_EQ(c.N_T, 100);
  EXPECT_EQ(c.N_lc, 20);
}

TEST(TotalResources, FloorsAndRejectsTinyPools) {
  SpsParams s;
  s.S = 1;
  s.f = 30.0;
  EXPECT_EQ(total_resources(s).N_T, 33);
  EXPECT_EQ(total_resources(s).N_lc, 7);
  s.f = 500.0;  // N_T = 2
  EXPECT_THROW(total_resources(s), ValidationError);
}

TEST(OccupiedResources, Examples) {
  EXPECT_DOUBLE_EQ(occupied_resources(0, 400), 0.0);
  EXPECT_NEAR(occupied_resources(1, 400), 1.0, 1e-12);
  const double closed = 400.0 * (1.0 - std::pow(399.0 / 400.0, 50.0));
  EXPECT_LT(rel_err(occupied_resources(50, 400), closed), 1e-12);
  EXPECT_NEAR(occupied_resources(50, 400), 47.06, 0.005);
}

TEST(OccupiedResources, MatchesBallPlacementOracle) {
  Rng rng(2024);
  const auto e = occupancy_monte_carlo(50, 400, 1000000, rng);
  EXPECT_LT(std::abs(e.mean - occupied_resources(50, 400)), 3.0 * e.std_error)
      << "mc " << e.mean << " se " << e.std_error;
  const auto f = occupancy_monte_carlo(10, 40, 200000, rng);
  EXPECT_LT(std::abs(f.mean - occupied_resources(10, 40)), 3.0 * f.std_error);
}

TEST(OccupiedResources, Properties) {
  for (int N_T : {5, 40, 100, 400}) {
    double prev = -1.0;
    for (int n = 0; n <= 5000; n += 7) {
      const double o = occupied_resources(n, N_T);
      EXPECT_GE(o, 0.0);
      EXPECT_LE(o, N_T);
      EXPECT_GE(o, prev);
      prev = o;
    }
    EXPECT_NEAR(occupied_resources(100000, N_T), N_T, 1e-6);
  }
}

TEST(CommonCandidates, Examples) {
  const ResourcePool pool{400, 80};
  NeighborCounts all{30, 30, 100.0};
  const auto b = common_candidate_breakdown(all, pool);
  EXPECT_DOUBLE_EQ(b.N_A, 0.0);
  EXPECT_DOUBLE_EQ(b.N_ccr, b.N_D);

  const auto x = common_candidate_breakdown({50, 30, 100.0}, pool);
  const double Nc = 400.0 * (1.0 - std::pow(399.0 / 400.0, 30.0));
  const double Noa = 400.0 * (1.0 - std::pow(399.0 / 400.0, 50.0));
  const double ND = 400.0 - Nc, NA = Noa - Nc;
  const double Nccr = (ND - NA) * std::pow(1.0 - 1.0 / ND, NA);
  EXPECT_LT(rel_err(x.N_c, Nc), 1e-12);
  EXPECT_LT(rel_err(x.N_oa, Noa), 1e-12);
  EXPECT_LT(rel_err(x.N_A, NA), 1e-12);
  EXPECT_LT(rel_err(x.N_D, ND), 1e-12);
  EXPECT_LT(rel_err(x.N_ccr, Nccr), 1e-12);
  EXPECT_NEAR(x.N_c, 28.94, 0.01);
  EXPECT_NEAR(x.N_oa, 47.06, 0.01);
  EXPECT_NEAR(x.N_A, 18.12, 0.01);
  EXPECT_NEAR(x.N_D, 371.06, 0.01);
  EXPECT_NEAR(x.N_ccr, 336.1, 0.05);

  EXPECT_DOUBLE_EQ(common_candidates({0, 0, 900.0}, pool), 400.0);
}

TEST(CommonCandidates, Errors) {
  const ResourcePool pool{40, 8};
  EXPECT_THROW(common_candidates({3, 4, 0.0}, pool), DomainError);
  // a pool fully covered by common neighbours leaves no room
  const ResourcePool tiny{1, 1};
  EXPECT_THROW(common_candidates({5, 5, 0.0}, tiny), DegenerateError);
}

TEST(CommonCandidates, BoundedAndNonIncreasingInExclusions) {
  const ResourcePool pool{100, 20};
  for (int K_C = 0; K_C <= 60; K_C += 5) {
    double prev = 1e300;
    for (int K_S = K_C; K_S <= 300; ++K_S) {
      Diagnostics d;
      const auto b = common_candidate_breakdown({K_S, K_C, 0.0}, pool, &d);
      EXPECT_LE(b.N_ccr, b.N_D + 1e-12);
      EXPECT_GE(b.N_ccr, 0.0);
      EXPECT_LE(b.N_ccr, prev + 1e-12);  // N_A grows with K_S at fixed N_D
      prev = b.N_ccr;
    }
  }
}

TEST(CommonCandidates, SubUnitFreePoolIsClampedAndCounted) {
  // N_T=5 with 4 common neighbours: N_D < 1 so (1 - 1/N_D) is negative
  const ResourcePool pool{5, 1};
  Diagnostics d;
  const auto b = common_candidate_breakdown({60, 40, 0.0}, pool, &d);
  EXPECT_LT(b.N_D, 1.0);
  EXPECT_GE(b.N_ccr, 0.0);
  EXPECT_GT(d.clamped, 0u);
}

TEST(PRcZero, Examples) {
  EXPECT_DOUBLE_EQ(p_rc_zero(sps_for(4, 10)), 0.1);
  EXPECT_DOUBLE_EQ(p_rc_zero(sps_for(4, 20)), 0.05);
  EXPECT_DOUBLE_EQ(p_rc_zero(sps_for(4, 50)), 0.02);
  SpsParams bad;
  bad.R_h = bad.R_l;
  EXPECT_THROW(p_rc_zero(bad), DomainError);
}

TEST(PSame, Examples) {
  const auto sps = sps_for(4, 10);
  const auto pool = total_resources(sps);
  const double nccr = common_candidates({50, 30, 100.0}, pool);
  const double in = p_same_from_ccr(nccr, 100.0, pool, sps);
  const double out = p_same_from_ccr(nccr, 600.0, pool, sps);
  EXPECT_LT(rel_err(in, 0.1 * nccr / 6400.0), 1e-12);
  EXPECT_NEAR(in, 0.00525, 5e-6);
  EXPECT_LT(rel_err(out, nccr / 6400.0), 1e-12);
  EXPECT_NEAR(out, 0.0525, 5e-5);
  EXPECT_DOUBLE_EQ(p_same_from_ccr(0.0, 100.0, pool, sps), 0.0);
  EXPECT_DOUBLE_EQ(p_same({50, 30, 100.0}, pool, sps), in);
  EXPECT_DOUBLE_EQ(p_same({50, 30, 600.0}, pool, sps), out);
}

TEST(PSame, OvershootIsClampedAndCounted) {
  SpsParams sps;
  sps.S = 1;
  sps.f = 200.0;
  sps.Gamma = 5.0;  // N_T=5, N_lc=1
  Diagnostics d;
  const double p = p_same({0, 0, 1000.0}, total_resources(sps), sps, &d);
  EXPECT_DOUBLE_EQ(p, 1.0);
  EXPECT_EQ(d.clamped, 1u);
}

TEST(PSame, DegeneratePoolCountsAsNoSharedCandidates) {
  SpsParams sps;
  sps.S = 1;
  sps.f = 200.0;
  Diagnostics d;
  const ResourcePool tiny{1, 1};
  EXPECT_DOUBLE_EQ(p_same({5, 5, 0.0}, tiny, sps, &d), 0.0);
  EXPECT_EQ(d.degenerate, 1u);
}

TEST(Probabilities, AlwaysInUnitInterval) {
  Rng rng(77);
  for (int n = 0; n < 5000; ++n) {
    SpsParams sps;
    sps.S = static_cast<int>(rng.uniform_int(1, 8));
    sps.f = static_cast<double>(rng.uniform_int(5, 200));
    sps.R_l = static_cast<int>(rng.uniform_int(1, 20));
    sps.R_h = sps.R_l + static_cast<int>(rng.uniform_int(1, 60));
    if (std::floor(1000.0 * sps.S / sps.f) < 5) continue;
    const auto pool = total_resources(sps);
    const int K_S = static_cast<int>(rng.uniform_int(0, 400));
    const int K_C = static_cast<int>(rng.uniform_int(0, K_S));
    const NeighborCounts nb{K_S, K_C, rng.uniform() * 1000.0};
    const double p = p_same(nb, pool, sps);
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
    const double pint = rng.uniform();
    const double pc = pair_collision(p, pint);
    ASSERT_GE(pc, 0.0);
    ASSERT_LE(pc, 1.0);
  }
}

TEST(PairCollision, Examples) {
  EXPECT_NEAR(pair_collision(0.1, 0.2), 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(pair_collision(0.37, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pair_collision(1.0, 1.0), 1.0);
}

TEST(VehicleCollision, Examples) {
  EXPECT_DOUBLE_EQ(vehicle_collision({}), 0.0);
  const std::vector<double> half = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(vehicle_collision(half), 0.75);
  const std::vector<double> ten(10, 0.02);
  EXPECT_LT(rel_err(vehicle_collision(ten), 1.0 - std::pow(0.98, 10)), 1e-12);
  EXPECT_NEAR(vehicle_collision(ten), 0.1829, 5e-5);
}

TEST(VehicleCollision, PermutationInvariantAndMonotone) {
  Rng rng(5);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> p;
    const int m = static_cast<int>(rng.uniform_int(0, 30));
    for (int j = 0; j < m; ++j) p.push_back(rng.uniform() * 0.3);
    const double base = vehicle_collision(p);
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng.engine());
    EXPECT_NEAR(vehicle_collision(q), base, 1e-14);
    q.push_back(rng.uniform());
    EXPECT_GE(vehicle_collision(q), base - 1e-15);
  }
}

TEST(NeighborCounts, MatchBruteForce) {
  Rng rng(31);
  for (int n = 0; n < 300; ++n) {
    const int K = static_cast<int>(rng.uniform_int(2, 40));
    std::vector<double> x;
    for (int j = 0; j < K; ++j) x.push_back(std::floor(rng.uniform() * 2000.0));  // ties likely
    const double d_sr = 500.0;
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const int k = static_cast<int>(rng.uniform_int(0, K - 1));
    int i = static_cast<int>(rng.uniform_int(0, K - 2));
    if (i >= k) ++i;
    int ks = 0, kc = 0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      if (std::abs(x[j] - x[k]) <= d_sr) ++ks;
      if (j != i && std::abs(x[j] - x[k]) <= d_sr && std::abs(x[j] - x[i]) <= d_sr) ++kc;
    }
    const auto nb = neighbor_counts(sorted, x[k], x[i], d_sr);
    ASSERT_EQ(nb.K_S, ks);
    ASSERT_EQ(nb.K_C, kc);
    ASSERT_DOUBLE_EQ(nb.d_ki, std::abs(x[k] - x[i]));
  }
}

TEST(SpsOracle, SingleVehicleNeverShares) {
  SpsOracleScenario sc;
  sc.sps = sps_for(2, 50);
  sc.positions = {100.0};
  Rng rng(1);
  const auto r = sps_monte_carlo(sc, 5000, rng);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_DOUBLE_EQ(r.mean_occupied, 1.0);

  sc.positions = {100.0, 150.0};
  sc.pairs = {{0, 1}};
  // two nearby vehicles always sense and exclude each other
  const auto r2 = sps_monte_carlo(sc, 20000, rng);
  EXPECT_DOUBLE_EQ(r2.pairs[0].p_same, 0.0);
}

TEST(SpsOracle, IsolatedVehiclesPickUniformly) {
  // With nothing sensed every resource ties at the noise floor, so an isolated
  // pair coincides with probability 1/N_T and occupancy follows the balls model.
  SpsOracleScenario sc;
  sc.sps = sps_for(2, 50);
  sc.positions = {0.0, 2000.0};
  sc.pairs = {{0, 1}};
  Rng rng(5);
  const auto r = sps_monte_carlo(sc, 100000, rng);
  EXPECT_LT(std::abs(r.pairs[0].p_same - 1.0 / 40.0), 3.0 * r.pairs[0].std_error);

  SpsOracleScenario oc;
  oc.sps = sps_for(4, 10);
  for (int j = 0; j < 50; ++j) oc.positions.push_back(j * 1000.0);
  const auto o = sps_monte_carlo(oc, 20000, rng);
  EXPECT_LT(std::abs(o.mean_occupied - occupied_resources(50, 400)), 0.02 * occupied_resources(50, 400));
  EXPECT_LT(std::abs(o.mean_occupied - occupied_resources(50, 400)), 3.0 * o.occupied_std_error);
}

TEST(SpsOracle, IsolatedPairMatchesAnalyticPSame) {
  // Analytic same-resource probability for two mutually isolated vehicles
  // at N_T = 40, compared with the SPS simulation.
  SpsOracleScenario sc;
  sc.sps = sps_for(2, 50);
  sc.positions = {0.0, 2000.0};
  sc.pairs = {{0, 1}};
  Rng rng(5);
  const auto r = sps_monte_carlo(sc, 100000, rng);
  const double analytic = analytic_p_same(sc, 0, 1);
  EXPECT_LT(std::abs(r.pairs[0].p_same - analytic), 3.0 * r.pairs[0].std_error)
      << "empirical " << r.pairs[0].p_same << " +- " << r.pairs[0].std_error << ", analytic " << analytic;
}

TEST(SpsOracle, DeterministicPerSeed) {
  SpsOracleScenario sc;
  sc.sps = sps_for(2, 20);
  sc.positions = {0.0, 120.0, 300.0, 800.0};
  sc.pairs = {{0, 1}, {1, 3}};
  Rng a(9), b(9);
  const auto ra = sps_monte_carlo(sc, 3000, a);
  const auto rb = sps_monte_carlo(sc, 3000, b);
  ASSERT_EQ(ra.pairs.size(), rb.pairs.size());
  for (std::size_t j = 0; j < ra.pairs.size(); ++j) EXPECT_EQ(ra.pairs[j].p_same, rb.pairs[j].p_same);
  EXPECT_EQ(ra.mean_occupied, rb.mean_occupied);
}
