#pragma once

// Vehicle selection: the priority rule and the four baselines.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/rng.hpp"
#include "feelsel/status.hpp"

namespace feelsel {

struct SelectionDecision {
  int interval = 0;
  Policy policy = Policy::proposed;
  int s_star = 0;
  std::vector<int> chosen;             // vehicle ids, in selection order
  std::vector<double> priorities;      // aligned with the input statuses (proposed only)
};

struct SelectionInput {
  std::span<const StatusVector> statuses;  // eligible vehicles only
  std::span<const double> rsu_distance;    // aligned with statuses
  int s_star = 0;
  int interval = 0;
};

namespace detail {

// k entries of `ids` drawn without replacement, in draw order.
inline std::vector<int> sample_ids(std::vector<int> ids, int k, Rng& rng) {
  const auto n = static_cast<int>(ids.size());
  k = std::clamp(k, 0, n);
  for (int j = 0; j < k; ++j) {
    const auto r = static_cast<int>(rng.uniform_int(j, n - 1));
    std::swap(ids[static_cast<std::size_t>(j)], ids[static_cast<std::size_t>(r)]);
  }
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

// First k indices ordered by `better`, ties by ascending vehicle id.
template <class Better>
std::vector<int> top_k(std::span<const StatusVector> st, int k, Better better) {
  std::vector<std::size_t> idx(st.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::clamp(k, 0, static_cast<int>(st.size()));
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (better(a, b)) return true;
    if (better(b, a)) return false;
    return st[a].id < st[b].id;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) out.push_back(st[idx[static_cast<std::size_t>(j)]].id);
  return out;
}

}  // namespace detail

// `rng` is the policy substream; only random and static draw from it.
inline SelectionDecision select(Policy policy, const SelectionInput& in, const SimConfig& cfg, Rng& rng) {
  SelectionDecision d;
  d.interval = in.interval;
  d.policy = policy;
  d.s_star = in.s_star;
  const auto n = static_cast<int>(in.statuses.size());
  std::vector<int> ids;
  ids.reserve(in.statuses.size());
  for (const auto& s : in.statuses) ids.push_back(s.id);

  switch (policy) {
    case Policy::proposed: {
      d.priorities.reserve(in.statuses.size());
      for (const auto& s : in.statuses) d.priorities.push_back(priority(s, cfg));
      const auto& pr = d.priorities;
      d.chosen = detail::top_k(in.statuses, in.s_star, [&](std::size_t a, std::size_t b) { return pr[a] > pr[b]; });
      break;
    }
    case Policy::maximum:
      d.chosen = ids;
      break;
    case Policy::static_quota:
      d.chosen = detail::sample_ids(ids, std::min(cfg.static_quota, n), rng);
      break;
    case Policy::random:
      d.chosen = detail::sample_ids(ids, std::min(in.s_star, n), rng);
      break;
    case Policy::position: {
      if (in.rsu_distance.size() != in.statuses.size())
        throw DomainError("select: position policy needs one distance per status");
      const auto& dist = in.rsu_distance;
      d.chosen = detail::top_k(in.statuses, cfg.position_quota,
                               [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
      break;
    }
  }
  return d;
}

inline SelectionDecision select(std::string_view policy_name, const SelectionInput& in, const SimConfig& cfg,
                                Rng& rng) {
  auto p = parse_policy(policy_name);
  if (!p) throw DomainError("select: unknown policy '" + std::string(policy_name) + "'");
  return select(*p, in, cfg, rng);
}

}  // namespace feelsel
