#pragma once

// Interval-by-interval simulation of one RSU cell:
//   status -> count -> selection -> collisions -> enqueue/train -> departure
//   -> mobility -> metrics.

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/errors.hpp"
#include "feelsel/lyapunov.hpp"
#include "feelsel/policies.hpp"
#include "feelsel/rng.hpp"
#include "feelsel/scenario.hpp"
#include "feelsel/status.hpp"

namespace feelsel {

struct MetricsRecord {
  int t = 0;
  double Q = 0.0;
  int s_star = 0;
  int n_chosen = 0;
  int n_collisions = 0;
  double uploaded_bytes = 0.0;
  double mu = 0.0;
  double X_total = 0.0;
  double accuracy = 0.0;
  double loss = 1.0;
  int active_vehicles = 0;
  double mean_P_col = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

class Engine {
 public:
  // Called after each step with the statuses of that interval.
  using StatusObserver = std::function<void(int t, std::span<const StatusVector>)>;

  explicit Engine(const SimConfig& cfg) : Engine(cfg, init_scenario(cfg, Rng(cfg.seed))) {}

  Engine(const SimConfig& cfg, std::vector<VehicleState> vehicles)
      : cfg_(cfg),
        vehicles_(std::move(vehicles)),
        collision_rng_(Rng(cfg.seed).stream(streams::collision)),
        departure_rng_(Rng(cfg.seed).stream(streams::departure)),
        policy_rng_(Rng(cfg.seed).stream(streams::policy)) {
    queue_.Q_max = cfg.Q_max;
    auto [lo, hi] = rx_power_range(cfg);
    table_ = InterferenceTable::shared(cfg.radio, cfg.sps.P_sen, lo, hi);
    uploads_.assign(vehicles_.size(), 0);
  }

  bool terminated() const {
    return std::none_of(vehicles_.begin(), vehicles_.end(), [](const auto& v) { return v.alive; });
  }

  int interval() const { return t_; }
  const RsuQueueState& queue() const { return queue_; }
  std::span<const VehicleState> vehicles() const { return vehicles_; }
  const Diagnostics& diagnostics() const { return diag_; }
  // Successful uploads per vehicle (indexed like vehicles()).
  std::span<const int> uploads() const { return uploads_; }
  double total_arrivals() const { return sum_lambda_; }
  double total_departures() const { return sum_mu_; }

  void set_status_observer(StatusObserver obs) { observer_ = std::move(obs); }

  MetricsRecord step() {
    if (terminated()) throw ContractViolation("step: simulation already terminated");
    const SimConfig& cfg = cfg_;
    MetricsRecord rec;
    rec.t = t_;

    // (1) statuses of every vehicle in range
    StatusContext ctx(cfg, vehicles_, table_);
    std::vector<StatusVector> statuses;
    std::vector<std::size_t> index_of;  // status -> vehicles_ index
    double pcol_sum = 0.0;
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      const auto& v = vehicles_[j];
      if (!v.alive) continue;
      statuses.push_back(compute_status(v, ctx, &diag_));
      index_of.push_back(j);
      pcol_sum += statuses.back().P_col;
    }
    rec.active_vehicles = static_cast<int>(statuses.size());
    rec.mean_P_col = statuses.empty() ? 0.0 : pcol_sum / static_cast<double>(statuses.size());

    std::vector<StatusVector> eligible;
    std::vector<double> dist;
    for (std::size_t n = 0; n < statuses.size(); ++n) {
      if (statuses[n].A + 1e-9 < cfg.D_a) continue;
      eligible.push_back(statuses[n]);
      dist.push_back(distance_to_rsu(cfg, vehicles_[index_of[n]].x));
    }

    // (2) count, (3) selection
    rec.s_star = optimal_selection_count(queue_, static_cast<int>(eligible.size()), cfg);
    SelectionInput in{eligible, dist, rec.s_star, t_};
    const SelectionDecision dec = select(cfg.policy, in, cfg, policy_rng_);
    rec.n_chosen = static_cast<int>(dec.chosen.size());

    // (4) collisions, (5) enqueue survivors
    int successes = 0;
    for (int id : dec.chosen) {
      const auto it = std::find_if(eligible.begin(), eligible.end(), [&](const auto& s) { return s.id == id; });
      const bool collided = collision_rng_.bernoulli(it->P_col);
      if (collided) {
        ++rec.n_collisions;
        continue;
      }
      const std::size_t j = vehicle_index(id);
      const auto upd = update_remaining_data(vehicles_[j].A, true, cfg.D_a);
      if (upd.violation) throw ContractViolation("step: upload from a vehicle with no data");
      vehicles_[j].A = upd.A;
      ++uploads_[j];
      ++successes;
    }
    const double lam = arrivals(successes, cfg.D_a);
    rec.uploaded_bytes = lam;

    // (6) training consumes the arrivals
    queue_.X_total += lam;

    // (7) random departure
    const bool good = departure_rng_.bernoulli(cfg.depart.p_fb);
    const double mu = good ? std::min(queue_.Q + lam, cfg.depart.m_max) : 0.0;
    queue_.Q = queue_update(queue_.Q, lam, mu);
    queue_.backlog_history.push_back(queue_.Q);
    sum_lambda_ += lam;
    sum_mu_ += mu;
    rec.mu = mu;
    if (is_capped(cfg.policy) && queue_.Q > cfg.Q_max + 1e-9)
      throw ContractViolation("step: backlog exceeds Q_max under a capped policy");

    // (8) mobility and departures from the cell
    const double eps = 1e-9 * cfg.t_s;
    for (auto& v : vehicles_) {
      if (!v.alive) continue;
      v.x += cfg.v * cfg.t_s;
      v.S = update_survival(v.S, cfg.t_s);
      if (v.S <= eps || v.x > cfg.E || v.A + 1e-9 < cfg.D_a) v.alive = false;
    }

    // (9) metrics
    rec.Q = queue_.Q;
    rec.X_total = queue_.X_total;
    rec.accuracy = expected_accuracy(queue_.X_total, cfg.learn);
    rec.loss = 1.0 - rec.accuracy;
    if (observer_) observer_(t_, statuses);
    ++t_;
    return rec;
  }

 private:
  std::size_t vehicle_index(int id) const {
    if (id >= 0 && static_cast<std::size_t>(id) < vehicles_.size() && vehicles_[static_cast<std::size_t>(id)].id == id)
      return static_cast<std::size_t>(id);
    for (std::size_t j = 0; j < vehicles_.size(); ++j)
      if (vehicles_[j].id == id) return j;
    throw ContractViolation("step: unknown vehicle id");
  }

  SimConfig cfg_;
  std::vector<VehicleState> vehicles_;
  RsuQueueState queue_;
  Rng collision_rng_;
  Rng departure_rng_;
  Rng policy_rng_;
  std::shared_ptr<const InterferenceTable> table_;
  Diagnostics diag_;
  std::vector<int> uploads_;
  double sum_lambda_ = 0.0;
  double sum_mu_ = 0.0;
  int t_ = 0;
  StatusObserver observer_;
};

inline std::vector<MetricsRecord> run(Engine& engine, int T_max) {
  std::vector<MetricsRecord> trace;
  while (!engine.terminated() && engine.interval() < T_max) trace.push_back(engine.step());
  return trace;
}

inline std::vector<MetricsRecord> run(const SimConfig& cfg) {
  validate(cfg);
  Engine e(cfg);
  return run(e, cfg.T_max);
}

// Population-mean collision probability at the initial positions.
inline double mean_initial_collision(const SimConfig& cfg) {
  const auto vehicles = init_scenario(cfg, Rng(cfg.seed));
  StatusContext ctx(cfg, vehicles);
  double sum = 0.0;
  int n = 0;
  for (const auto& v : vehicles) {
    if (!v.alive) continue;
    sum += ctx.collision_probability(v);
    ++n;
  }
  return n ? sum / n : 0.0;
}

struct CollisionCurvePoint {
  int K;
  double f;
  int S;
  double mean_P_col;  // averaged over seeds
};

// Mean P_col at t0 for every (K, (f, S)) combination, averaged over `seeds`
// consecutive placement seeds starting at cfg.seed.
inline std::vector<CollisionCurvePoint> mean_collision_curve(const SimConfig& base, std::span<const int> Ks,
                                                             std::span<const std::pair<double, int>> f_S,
                                                             int seeds = 6) {
  std::vector<CollisionCurvePoint> out;
  for (const auto& [f, S] : f_S) {
    for (int K : Ks) {
      SimConfig cfg = base;
      cfg.K = K;
      cfg.sps.S = S;
      set_frequency(cfg.sps, f);
      double acc = 0.0;
      for (int s = 0; s < seeds; ++s) {
        cfg.seed = base.seed + static_cast<std::uint64_t>(s);
        acc += mean_initial_collision(cfg);
      }
      out.push_back({K, f, S, acc / seeds});
    }
  }
  return out;
}

}  // namespace feelsel
