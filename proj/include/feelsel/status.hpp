#pragma once

// Per-vehicle system status (remaining data, delay, collision probability,
// survival) and the selection priority derived from it.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/radio.hpp"
#include "feelsel/scenario.hpp"
#include "feelsel/sps.hpp"

namespace feelsel {

struct StatusVector {
  int id = 0;
  double A = 0.0;      // bytes
  double D = 0.0;      // intervals
  double P_col = 0.0;
  double S = 0.0;      // seconds

  bool operator==(const StatusVector&) const = default;
};

struct RemainingData {
  double A;
  bool violation;  // a delivery was recorded for a vehicle holding no data
};

inline RemainingData update_remaining_data(double A_prev, bool delivered, double D_a) {
  if (!delivered) return {A_prev, false};
  if (A_prev < D_a) return {0.0, true};
  return {A_prev - D_a, false};
}

inline double update_survival(double S_prev, double t_s) { return std::max(S_prev - t_s, 0.0); }

// Selection priority A/(D*P_col*S). S = 0 always gives 0. With PriorityMode::floored a
// zero collision probability is replaced by `eps` so that a clean channel
// ranks highest instead of lowest.
inline double priority(const StatusVector& sv, PriorityMode mode = PriorityMode::floored, double eps = 1e-6) {
  if (sv.S <= 0.0) return 0.0;
  double p = sv.P_col;
  if (p <= 0.0) {
    if (mode == PriorityMode::literal) return 0.0;
    p = eps;
  } else if (mode == PriorityMode::floored) {
    p = std::max(p, eps);
  }
  return sv.A / (sv.D * p * sv.S);
}

inline double priority(const StatusVector& sv, const SimConfig& cfg) {
  return priority(sv, cfg.priority_mode, cfg.priority_eps);
}

// Received-power range (dBm) over every RSU distance a vehicle can have.
inline std::pair<double, double> rx_power_range(const SimConfig& cfg) {
  double lo = 1e300, hi = -1e300;
  const double far = std::max(cfg.E / 2.0, cfg.radio.d_min);
  for (int i = 0; i <= 2000; ++i) {
    const double d = cfg.radio.d_min + (far - cfg.radio.d_min) * i / 2000.0;
    const double p = rx_power(path_loss(d, cfg.radio, cfg.v), cfg.radio);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return {lo - 1.0, hi + 1.0};
}

// Frozen view of the population for one interval. Every status computed from
// the same context sees the same snapshot. A context memoises internally, so
// give each thread its own.
class StatusContext {
 public:
  StatusContext(const SimConfig& cfg, std::span<const VehicleState> vehicles,
                std::shared_ptr<const InterferenceTable> table = nullptr)
      : cfg_(&cfg), pool_(total_resources(cfg.sps)), table_(std::move(table)) {
    if (!table_) {
      auto [lo, hi] = rx_power_range(cfg);
      table_ = InterferenceTable::shared(cfg.radio, cfg.sps.P_sen, lo, hi);
    }
    for (const auto& v : vehicles)
      if (v.alive) active_.push_back(v);
    // id order keeps the collision product independent of input order
    std::sort(active_.begin(), active_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (const auto& v : active_) {
      rx_.push_back(rx_power(path_loss(distance_to_rsu(cfg, v.x), cfg.radio, cfg.v), cfg.radio));
      sorted_.push_back(v.x);
    }
    std::sort(sorted_.begin(), sorted_.end());
  }

  const SimConfig& config() const { return *cfg_; }
  const ResourcePool& pool() const { return pool_; }
  std::span<const VehicleState> active() const { return active_; }

  // Delay from the shadow-correlation rate model.
  double delay(const VehicleState& v) const {
    const double c = shadow_correlation(distance_to_rsu(*cfg_, v.x), *cfg_);
    return tx_delay(cfg_->D_a, tx_rate(c, cfg_->radio));
  }

  // Collision probability of `v` against every other active vehicle.
  double collision_probability(const VehicleState& v, Diagnostics* diag = nullptr) const {
    const double p_k = rx_power(path_loss(distance_to_rsu(*cfg_, v.x), cfg_->radio, cfg_->v), cfg_->radio);
    const bool usable = detail::prob_above(p_k, cfg_->radio.sigma_sh, cfg_->sps.P_sen) >= 1e-12;
    if (!usable && diag) ++diag->degenerate;
    double keep = 1.0;
    for (std::size_t j = 0; j < active_.size(); ++j) {
      const VehicleState& other = active_[j];
      if (other.id == v.id) continue;
      const NeighborCounts nb = neighbor_counts(sorted_, v.x, other.x, cfg_->sps.d_sr);
      const double ps = cached_p_same(nb, diag);
      if (ps <= 0.0 || !usable) continue;
      const double pint = (*table_)(p_k, rx_[j]);
      keep *= 1.0 - pair_collision(ps, pint);
    }
    return std::clamp(1.0 - keep, 0.0, 1.0);
  }

 private:
  // p_same only depends on (K_S, K_C, in range); memoised per snapshot.
  double cached_p_same(const NeighborCounts& nb, Diagnostics* diag) const {
    const std::size_t n = active_.size() + 1;
    if (memo_.empty()) memo_.assign(2 * n * n, Memo{});
    const std::size_t key = ((nb.d_ki <= cfg_->sps.d_sr ? 1 : 0) * n + static_cast<std::size_t>(nb.K_S)) * n +
                            static_cast<std::size_t>(nb.K_C);
    Memo& m = memo_[key];
    if (!m.set) {
      Diagnostics local;
      m.value = p_same(nb, pool_, cfg_->sps, &local);
      m.diag = local;
      m.set = true;
    }
    if (diag) *diag += m.diag;
    return m.value;
  }

  struct Memo {
    double value = 0.0;
    Diagnostics diag;
    bool set = false;
  };

  const SimConfig* cfg_;
  ResourcePool pool_;
  std::shared_ptr<const InterferenceTable> table_;
  std::vector<VehicleState> active_;
  std::vector<double> rx_;
  std::vector<double> sorted_;
  mutable std::vector<Memo> memo_;
};

inline StatusVector compute_status(const VehicleState& v, const StatusContext& ctx, Diagnostics* diag = nullptr) {
  StatusVector sv;
  sv.id = v.id;
  sv.A = v.A;
  sv.D = ctx.delay(v);
  sv.P_col = ctx.collision_probability(v, diag);
  sv.S = v.S;
  return sv;
}

inline StatusVector compute_status(const VehicleState& v, std::span<const VehicleState> all, const SimConfig& cfg,
                                   Diagnostics* diag = nullptr) {
  return compute_status(v, StatusContext(cfg, all), diag);
}

}  // namespace feelsel
