#pragma once

#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/rng.hpp"

namespace feelsel {

struct VehicleState {
  int id = 0;
  double x = 0.0;      // position along the road, m
  double A = 0.0;      // remaining data, bytes
  double S = 0.0;      // survival ability, s
  bool alive = true;

  bool operator==(const VehicleState&) const = default;
};

// Time the vehicle still spends inside the range, from its initial position.
inline double initial_survival(const SimConfig& cfg, double d_ini) { return (cfg.E - d_ini) / cfg.v; }

// RSU sits at the road midpoint.
inline double rsu_position(const SimConfig& cfg) { return cfg.E / 2.0; }

inline double distance_to_rsu(const SimConfig& cfg, double x) {
  const double d = x > rsu_position(cfg) ? x - rsu_position(cfg) : rsu_position(cfg) - x;
  return d < cfg.radio.d_min ? cfg.radio.d_min : d;
}

// K vehicles carrying A_ini bytes each. Positions come from the placement
// substream of `rng`, so other streams are untouched.
inline std::vector<VehicleState> init_scenario(const SimConfig& cfg, const Rng& rng) {
  validate(cfg);
  Rng place = rng.stream(streams::placement);
  std::vector<VehicleState> out;
  out.reserve(static_cast<std::size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    VehicleState v;
    v.id = k;
    v.x = cfg.placement == Placement::uniform ? place.uniform() * cfg.E
                                              : static_cast<double>(k) * cfg.E / cfg.K;
    v.A = cfg.A_ini;
    v.S = initial_survival(cfg, v.x);
    v.alive = v.S > 0.0;
    out.push_back(v);
  }
  return out;
}

}  // namespace feelsel
