#pragma once

// C-V2X Mode 4 collision model. The analytic part follows the balls-into-
// baskets approximation of the selection window: occupied resources, common
// candidate resources, same-resource probability and per-vehicle collision
// probability. sps_monte_carlo() simulates the sensing-based semi-persistent
// scheduling procedure itself and is used to check the analytic numbers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/errors.hpp"
#include "feelsel/radio.hpp"
#include "feelsel/rng.hpp"

namespace feelsel {

// Counts of values that had to be clamped into their admissible range, and
// of links treated as unusable.
struct Diagnostics {
  std::uint64_t clamped = 0;
  std::uint64_t degenerate = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    clamped += o.clamped;
    degenerate += o.degenerate;
    return *this;
  }
};

struct ResourcePool {
  int N_T = 0;   // resources in the selection window
  int N_lc = 0;  // candidate list size
};

struct NeighborCounts {
  int K_S = 0;       // vehicles sensed by v_k, v_k excluded
  int K_C = 0;       // vehicles sensed by both v_k and v_i, both excluded
  double d_ki = 0.0;
};

inline ResourcePool total_resources(const SpsParams& sps) {
  ResourcePool pool;
  pool.N_T = static_cast<int>(std::floor(1000.0 * sps.S / sps.f + 1e-9));
  pool.N_lc = static_cast<int>(std::lround(0.2 * pool.N_T));
  if (pool.N_lc < 1) throw ValidationError("sps", "candidate list is empty (1000*S/f < 5)");
  return pool;
}

// Expected number of baskets holding at least one of n balls.
inline double occupied_resources(double n, double N_T) {
  if (n <= 0.0) return 0.0;
  return N_T * (1.0 - std::pow(1.0 - 1.0 / N_T, n));
}

namespace detail {
inline double clamp_count(double v, double lo, double hi, Diagnostics* diag) {
  if (v < lo || v > hi || std::isnan(v)) {
    if (diag) ++diag->clamped;
    if (std::isnan(v)) return lo;
    return std::clamp(v, lo, hi);
  }
  return v;
}
}  // namespace detail

struct CandidateBreakdown {
  double N_c, N_oa, N_A, N_D, N_ccr;
};

inline CandidateBreakdown common_candidate_breakdown(const NeighborCounts& nb, const ResourcePool& pool,
                                                     Diagnostics* diag = nullptr) {
  if (nb.K_C > nb.K_S) throw DomainError("common_candidates: K_C exceeds K_S");
  const double N_T = pool.N_T;
  CandidateBreakdown b{};
  b.N_c = occupied_resources(nb.K_C, N_T);
  b.N_oa = occupied_resources(nb.K_S, N_T);
  b.N_A = b.N_oa - b.N_c;
  b.N_D = N_T - b.N_c;
  if (b.N_D <= 0.0) throw DegenerateError("common_candidates: pool saturated (N_D <= 0)");
  double base = 1.0 - 1.0 / b.N_D;
  if (base < 0.0) {
    // fewer than one free resource left outside the common range
    if (diag) ++diag->clamped;
    base = 0.0;
  }
  const double raw = (b.N_D - b.N_A) * (b.N_A > 0.0 ? std::pow(base, b.N_A) : 1.0);
  b.N_ccr = detail::clamp_count(raw, 0.0, b.N_D, diag);
  return b;
}

inline double common_candidates(const NeighborCounts& nb, const ResourcePool& pool, Diagnostics* diag = nullptr) {
  return common_candidate_breakdown(nb, pool, diag).N_ccr;
}

inline double p_rc_zero(const SpsParams& sps) {
  if (sps.R_h <= sps.R_l) throw DomainError("p_rc_zero: R_h must exceed R_l");
  return 1.0 / static_cast<double>(sps.R_h - sps.R_l);
}

// Probability that v_k and v_i transmit on the same resource. The counter
// factor applies only when the pair is within sensing range.
inline double p_same_from_ccr(double N_ccr, double d_ki, const ResourcePool& pool, const SpsParams& sps,
                              Diagnostics* diag = nullptr) {
  const double nlc = pool.N_lc;
  double base = N_ccr / (nlc * nlc);
  if (d_ki <= sps.d_sr) base *= p_rc_zero(sps);
  return detail::clamp_count(base, 0.0, 1.0, diag);
}

inline double p_same(const NeighborCounts& nb, const ResourcePool& pool, const SpsParams& sps,
                     Diagnostics* diag = nullptr) {
  double n_ccr = 0.0;
  try {
    n_ccr = common_candidates(nb, pool, diag);
  } catch (const DegenerateError&) {
    if (diag) ++diag->degenerate;
    n_ccr = 0.0;
  }
  return p_same_from_ccr(n_ccr, nb.d_ki, pool, sps, diag);
}

inline double pair_collision(double p_same, double p_int) { return p_same * p_int; }

inline double vehicle_collision(std::span<const double> pairs) {
  double keep = 1.0;
  for (double p : pairs) keep *= 1.0 - std::clamp(p, 0.0, 1.0);
  return std::clamp(1.0 - keep, 0.0, 1.0);
}

// Neighbour counting on a 1-D road. `sorted` holds all positions in
// ascending order (v_k and v_i included).
inline int count_in(std::span<const double> sorted, double lo, double hi) {
  if (hi < lo) return 0;
  auto a = std::lower_bound(sorted.begin(), sorted.end(), lo);
  auto b = std::upper_bound(sorted.begin(), sorted.end(), hi);
  return static_cast<int>(b - a);
}

inline NeighborCounts neighbor_counts(std::span<const double> sorted, double x_k, double x_i, double d_sr) {
  NeighborCounts nb;
  nb.d_ki = std::abs(x_k - x_i);
  nb.K_S = count_in(sorted, x_k - d_sr, x_k + d_sr) - 1;
  const double lo = std::max(x_k, x_i) - d_sr;
  const double hi = std::min(x_k, x_i) + d_sr;
  int common = count_in(sorted, lo, hi);
  // v_k and v_i themselves lie in the intersection whenever it is non-empty
  // and they are within range of each other.
  if (hi >= lo) {
    if (x_k >= lo && x_k <= hi) --common;
    if (x_i >= lo && x_i <= hi) --common;
  }
  nb.K_C = std::clamp(common, 0, nb.K_S);
  return nb;
}

// ---------------------------------------------------------------------------
// Monte-Carlo SPS oracle

struct SpsOracleScenario {
  std::vector<double> positions;                  // along the road, m
  std::vector<std::pair<int, int>> pairs;         // designated (k, i) pairs
  SpsParams sps;
  RadioParams radio;
  int warmup_windows = 200;
};

struct SpsPairEstimate {
  int k = 0;
  int i = 0;
  double p_same = 0.0;   // fraction of windows with the same resource
  double std_error = 0.0;
};

struct SpsOracleResult {
  std::vector<SpsPairEstimate> pairs;
  double mean_occupied = 0.0;
  double occupied_std_error = 0.0;
  std::uint64_t windows = 0;
  std::uint64_t threshold_raises = 0;  // +3 dB relaxations performed
};

namespace detail {

// Batch-means standard error; windows of one run are autocorrelated through
// the reservation counter.
class BatchMeans {
 public:
  explicit BatchMeans(std::uint64_t total, std::uint64_t batches = 100)
      : size_(std::max<std::uint64_t>(1, total / batches)) {}

  void add(double x) {
    sum_ += x;
    ++n_;
    cur_ += x;
    if (++in_batch_ == size_) {
      means_.push_back(cur_ / static_cast<double>(size_));
      cur_ = 0.0;
      in_batch_ = 0;
    }
  }

  double mean() const { return n_ ? sum_ / static_cast<double>(n_) : 0.0; }

  double std_error() const {
    const std::size_t b = means_.size();
    if (b < 2) return 0.0;
    double m = 0.0;
    for (double x : means_) m += x;
    m /= static_cast<double>(b);
    double v = 0.0;
    for (double x : means_) v += (x - m) * (x - m);
    v /= static_cast<double>(b - 1);
    return std::sqrt(v / static_cast<double>(b));
  }

 private:
  std::uint64_t size_;
  std::uint64_t n_ = 0;
  std::uint64_t in_batch_ = 0;
  double sum_ = 0.0;
  double cur_ = 0.0;
  std::vector<double> means_;
};

}  // namespace detail

// Simulates `windows` selection windows after a warm-up. Every vehicle sends
// one packet per window on its reserved resource. When its counter reaches
// zero it re-runs sensing and selection:
//   - exclude its own previous resource and every resource reserved by a
//     sensed vehicle whose measured RSRP exceeds the threshold;
//   - while fewer than 20% of the window remain, raise the threshold by 3 dB;
//   - rank the remaining resources by measured RSSI, keep the lowest N_lc
//     (random order among ties) and pick one uniformly;
//   - draw a new counter from {R_l..R_h}.
// Vehicles reselecting in the same window see only the previous window.
inline SpsOracleResult sps_monte_carlo(const SpsOracleScenario& sc, std::uint64_t windows, Rng& rng) {
  if (windows < 1) throw DomainError("sps_monte_carlo: windows must be >= 1");
  const ResourcePool pool = total_resources(sc.sps);
  const int n = static_cast<int>(sc.positions.size());
  const double sd = sc.radio.sigma_sh;

  // Mean received power between vehicles, and who senses whom.
  std::vector<std::vector<std::pair<int, double>>> sensed(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const double d = std::abs(sc.positions[a] - sc.positions[b]);
      if (d > sc.sps.d_sr) continue;
      const double p = rx_power(path_loss(d, sc.radio, 0.0), sc.radio);
      sensed[static_cast<std::size_t>(a)].emplace_back(b, p);
    }

  std::vector<int> res(static_cast<std::size_t>(n));
  std::vector<int> counter(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    res[static_cast<std::size_t>(a)] = static_cast<int>(rng.uniform_int(0, pool.N_T - 1));
    counter[static_cast<std::size_t>(a)] = static_cast<int>(rng.uniform_int(1, sc.sps.R_h));
  }

  SpsOracleResult out;
  std::vector<detail::BatchMeans> pair_stats(sc.pairs.size(), detail::BatchMeans(windows));
  detail::BatchMeans occ_stats(windows);

  std::vector<double> rssi(static_cast<std::size_t>(pool.N_T));
  std::vector<char> excluded(static_cast<std::size_t>(pool.N_T));
  std::vector<std::pair<double, int>> ranked;
  std::vector<double> rsrp;
  std::vector<int> next = res;
  std::vector<char> seen(static_cast<std::size_t>(pool.N_T));
  const double noise_mw = std::pow(10.0, sc.radio.N0 / 10.0);

  const std::uint64_t total = static_cast<std::uint64_t>(sc.warmup_windows) + windows;
  for (std::uint64_t w = 0; w < total; ++w) {
    next = res;
    for (int a = 0; a < n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      if (counter[ua] > 0) continue;
      const auto& nbrs = sensed[ua];
      rsrp.resize(nbrs.size());
      std::fill(rssi.begin(), rssi.end(), noise_mw);
      for (std::size_t j = 0; j < nbrs.size(); ++j) {
        rsrp[j] = rng.normal(nbrs[j].second, sd);
        rssi[static_cast<std::size_t>(res[static_cast<std::size_t>(nbrs[j].first)])] +=
            std::pow(10.0, rsrp[j] / 10.0);
      }
      double threshold = sc.sps.P_sen;
      int available = 0;
      for (;;) {
        std::fill(excluded.begin(), excluded.end(), 0);
        excluded[static_cast<std::size_t>(res[ua])] = 1;
        for (std::size_t j = 0; j < nbrs.size(); ++j)
          if (rsrp[j] > threshold) excluded[static_cast<std::size_t>(res[static_cast<std::size_t>(nbrs[j].first)])] = 1;
        available = pool.N_T - static_cast<int>(std::count(excluded.begin(), excluded.end(), 1));
        if (available * 5 >= pool.N_T) break;
        threshold += 3.0;
        ++out.threshold_raises;
      }
      ranked.clear();
      for (int r = 0; r < pool.N_T; ++r)
        if (!excluded[static_cast<std::size_t>(r)]) ranked.emplace_back(rssi[static_cast<std::size_t>(r)], r);
      std::shuffle(ranked.begin(), ranked.end(), rng.engine());
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& x, const auto& y) { return x.first < y.first; });
      const int list = std::min<int>(pool.N_lc, static_cast<int>(ranked.size()));
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, list - 1));
      next[ua] = ranked[pick].second;
      counter[ua] = static_cast<int>(rng.uniform_int(sc.sps.R_l, sc.sps.R_h));
    }
    res = next;

    if (w >= static_cast<std::uint64_t>(sc.warmup_windows)) {
      for (std::size_t p = 0; p < sc.pairs.size(); ++p) {
        const auto [k, i] = sc.pairs[p];
        pair_stats[p].add(res[static_cast<std::size_t>(k)] == res[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
      }
      std::fill(seen.begin(), seen.end(), 0);
      int occ = 0;
      for (int a = 0; a < n; ++a) {
        auto& s = seen[static_cast<std::size_t>(res[static_cast<std::size_t>(a)])];
        if (!s) { s = 1; ++occ; }
      }
      occ_stats.add(occ);
      ++out.windows;
    }
    for (int& c : counter) --c;
  }

  for (std::size_t p = 0; p < sc.pairs.size(); ++p)
    out.pairs.push_back({sc.pairs[p].first, sc.pairs[p].second, pair_stats[p].mean(), pair_stats[p].std_error()});
  out.mean_occupied = occ_stats.mean();
  out.occupied_std_error = occ_stats.std_error();
  return out;
}

// Analytic p_same for a pair of an oracle scenario, counting neighbours the
// same way the engine does.
inline double analytic_p_same(const SpsOracleScenario& sc, int k, int i, Diagnostics* diag = nullptr) {
  std::vector<double> sorted = sc.positions;
  std::sort(sorted.begin(), sorted.end());
  const NeighborCounts nb = neighbor_counts(sorted, sc.positions[static_cast<std::size_t>(k)],
                                            sc.positions[static_cast<std::size_t>(i)], sc.sps.d_sr);
  return p_same(nb, total_resources(sc.sps), sc.sps, diag);
}


// Throws n balls into N_T baskets `trials` times; mean number of non-empty
// baskets with its standard error.
struct OccupancyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline OccupancyEstimate occupancy_monte_carlo(int n, int N_T, std::uint64_t trials, Rng& rng) {
  if (N_T < 1 || n < 0 || trials < 2) throw DomainError("occupancy_monte_carlo: bad arguments");
  std::vector<char> hit(static_cast<std::size_t>(N_T));
  double sum = 0.0, sq = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::fill(hit.begin(), hit.end(), 0);
    int occ = 0;
    for (int b = 0; b < n; ++b) {
      auto& h = hit[static_cast<std::size_t>(rng.uniform_int(0, N_T - 1))];
      if (!h) { h = 1; ++occ; }
    }
    sum += occ;
    sq += static_cast<double>(occ) * occ;
  }
  const double m = sum / static_cast<double>(trials);
  const double var = std::max(0.0, (sq - static_cast<double>(trials) * m * m) / static_cast<double>(trials - 1));
  return {m, std::sqrt(var / static_cast<double>(trials))};
}

// One analytic-vs-empirical comparison.
struct OracleRow {
  std::string label;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;

  double z() const {
    const double diff = std::abs(analytic - empirical);
    if (std_error > 0.0) return diff / std_error;
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  bool within(double k) const { return z() <= k; }
};

struct OracleSuite {
  std::vector<OracleRow> occupancy;  // closed form vs ball placement and SPS
  std::vector<OracleRow> p_same;     // analytic p_same vs SPS
};

// The standard comparison set: ball placement at (N_T=400, n=50) and
// (N_T=40, n=10); SPS occupancy for 50 mutually isolated vehicles; an
// isolated pair at N_T=40; five random scenarios with N_T in {40,100} and at
// most 10 vehicles.
inline OracleSuite run_oracle_suite(std::uint64_t trials, std::uint64_t seed) {
  const Rng root(seed);
  Rng rng = root.stream(streams::oracle);
  OracleSuite out;
  auto fmt_label = [](const char* head, int a, int b) {
    return std::string(head) + " N_T=" + std::to_string(a) + " n=" + std::to_string(b);
  };

  for (auto [N_T, n] : {std::pair{400, 50}, std::pair{40, 10}}) {
    const auto e = occupancy_monte_carlo(n, N_T, trials, rng);
    out.occupancy.push_back({fmt_label("balls", N_T, n), occupied_resources(n, N_T), e.mean, e.std_error});
  }

  {
    SpsOracleScenario sc;
    set_frequency(sc.sps, 10.0);
    sc.sps.S = 4;
    for (int j = 0; j < 50; ++j) sc.positions.push_back(j * 1000.0);
    const auto r = sps_monte_carlo(sc, std::max<std::uint64_t>(1, trials / 5), rng);
    out.occupancy.push_back({fmt_label("sps isolated", 400, 50), occupied_resources(50, 400), r.mean_occupied,
                             r.occupied_std_error});
  }

  auto add_pairs = [&](const SpsOracleScenario& sc, const std::string& head) {
    const auto r = sps_monte_carlo(sc, trials, rng);
    const int N_T = total_resources(sc.sps).N_T;
    for (const auto& p : r.pairs)
      out.p_same.push_back({head + " N_T=" + std::to_string(N_T) + " K=" + std::to_string(sc.positions.size()) +
                                " pair " + std::to_string(p.k) + "-" + std::to_string(p.i),
                            analytic_p_same(sc, p.k, p.i), p.p_same, p.std_error});
  };

  {
    SpsOracleScenario sc;
    sc.sps.S = 2;
    set_frequency(sc.sps, 50.0);
    sc.positions = {0.0, 2000.0};
    sc.pairs = {{0, 1}};
    add_pairs(sc, "isolated");
  }

  Rng placement = root.stream(streams::placement);
  for (int s = 0; s < 5; ++s) {
    SpsOracleScenario sc;
    sc.sps.S = 2;
    set_frequency(sc.sps, s % 2 == 0 ? 50.0 : 20.0);  // N_T = 40 or 100
    const int K = static_cast<int>(placement.uniform_int(2, 10));
    for (int j = 0; j < K; ++j) sc.positions.push_back(placement.uniform() * 1000.0);
    sc.pairs = {{0, 1}};
    add_pairs(sc, "random#" + std::to_string(s));
  }
  return out;
}

}  // namespace feelsel
