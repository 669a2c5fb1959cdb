#pragma once

// RSU cache queue and the drift-plus-utility controller that picks how many
// vehicles upload in an interval.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/errors.hpp"

namespace feelsel {

struct RsuQueueState {
  double Q = 0.0;        // backlog, bytes
  double Q_max = 2000.0;
  double X_total = 0.0;  // bytes trained so far
  std::vector<double> backlog_history;
};

inline double arrivals(int s, double D_a) { return D_a * s; }

inline double queue_update(double Q, double lam, double mu) { return std::max(Q + lam - mu, 0.0); }

// Learning curve 1 - l_rate * x^d_rate, clamped to [0,1]; zero data gives 0.
inline double expected_accuracy(double x, const LearnParams& learn) {
  if (x <= 0.0) return 0.0;
  return std::clamp(1.0 - learn.l_rate * std::pow(x, learn.d_rate), 0.0, 1.0);
}

inline double training_loss(double x, const LearnParams& learn) { return 1.0 - expected_accuracy(x, learn); }

// Utility of admitting s uploads this interval: accuracy after training on them.
inline double utility(int s, const RsuQueueState& q, const SimConfig& cfg) {
  return expected_accuracy(q.X_total + arrivals(s, cfg.D_a), cfg.learn);
}

inline double objective(int s, const RsuQueueState& q, double mu_hat, const SimConfig& cfg) {
  return cfg.learn.gamma * utility(s, q, cfg) + q.Q * (arrivals(s, cfg.D_a) - mu_hat);
}

// Walks s = 0, 1, ... while the queue can absorb the arrivals and vehicles
// remain, keeping the best objective. Ties keep the smaller s. mu_hat is a
// constant shift of the objective and does not change the result.
inline int optimal_selection_count(const RsuQueueState& q, int k_avail, const SimConfig& cfg, double mu_hat = 0.0) {
  int best = 0;
  double best_val = 0.0;
  bool have = false;
  for (int s = 0; s <= k_avail; ++s) {
    if (q.Q + arrivals(s, cfg.D_a) > q.Q_max) break;
    const double val = objective(s, q, mu_hat, cfg);
    if (!have || val > best_val) {
      best = s;
      best_val = val;
      have = true;
    }
  }
  return best;
}

// Time-average backlog.
inline double stability_metric(std::span<const double> history) {
  if (history.empty()) throw DomainError("stability_metric: empty history");
  double s = 0.0;
  for (double q : history) s += q;
  return s / static_cast<double>(history.size());
}

}  // namespace feelsel
