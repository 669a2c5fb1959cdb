#pragma once

// Simulation configuration: parameter structs, defaults, validation and the
// line-oriented key=value file format.
//
// Internal units: meters, seconds, bytes, dB/dBm, Hz. All keys are optional;
// absent keys keep their defaults. Lines starting with '#' are comments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "feelsel/errors.hpp"

namespace feelsel {

enum class Policy { proposed, maximum, static_quota, random, position };

inline constexpr std::array<Policy, 5> kAllPolicies = {
    Policy::proposed, Policy::maximum, Policy::static_quota, Policy::random, Policy::position};

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::proposed: return "proposed";
    case Policy::maximum: return "maximum";
    case Policy::static_quota: return "static";
    case Policy::random: return "random";
    case Policy::position: return "position";
  }
  return "?";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  for (Policy p : kAllPolicies)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

// Policies whose per-interval count comes from the queue controller.
inline bool is_capped(Policy p) { return p == Policy::proposed || p == Policy::random; }

enum class Placement { uniform, uniform_spacing };

// How interference and noise are combined into SINR.
//  literal:   SINR = P^k - P^i - N0, a plain dB difference.
//  power_sum: SINR = P^k - 10 log10(10^(P^i/10) + 10^(N0/10)).
enum class SinrMode { literal, power_sum };

// Priority handling of P_col = 0: floored uses max(P_col, eps) in the
// denominator; literal returns 0 as the bare formula guard does.
enum class PriorityMode { floored, literal };

struct SpsParams {
  int S = 4;               // sub-channels per sub-frame
  double f = 10.0;         // packet frequency, Hz
  double Gamma = 100.0;    // resource reservation interval, ms
  int R_h = 15;
  int R_l = 5;
  double d_sr = 500.0;     // sensing range, m
  double P_sen = -90.4;    // sensing power threshold, dBm

  bool operator==(const SpsParams&) const = default;
};

struct BlerPoint {
  double sinr_db;
  double bler;
  bool operator==(const BlerPoint&) const = default;
};

// Block error rate as a function of SINR. Logistic by default; a table
// interpolates linearly and extrapolates flat.
struct BlerModel {
  enum class Kind { logistic, table };
  Kind kind = Kind::logistic;
  double s_50 = 2.5;
  double slope = 1.5;
  std::vector<BlerPoint> table;
  std::string table_path;  // provenance only, for round-tripping

  double operator()(double s) const {
    if (kind == Kind::logistic) {
      const double z = slope * (s - s_50);
      if (z > 700.0) return 0.0;
      if (z < -700.0) return 1.0;
      return 1.0 / (1.0 + std::exp(z));
    }
    if (table.empty()) return 0.0;
    if (s <= table.front().sinr_db) return table.front().bler;
    if (s >= table.back().sinr_db) return table.back().bler;
    auto it = std::upper_bound(table.begin(), table.end(), s,
                               [](double v, const BlerPoint& p) { return v < p.sinr_db; });
    const BlerPoint& hi = *it;
    const BlerPoint& lo = *(it - 1);
    const double w = (s - lo.sinr_db) / (hi.sinr_db - lo.sinr_db);
    return lo.bler + w * (hi.bler - lo.bler);
  }

  bool operator==(const BlerModel&) const = default;
};

// Two-column text: SINR dB, BLER. First column strictly increasing, BLER in
// [0,1] and non-increasing.
inline std::vector<BlerPoint> parse_bler_table(std::istream& in, const std::string& origin) {
  std::vector<BlerPoint> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == '\t' || c == ';') c = ' ';
    std::istringstream ls(line);
    double s = 0, b = 0;
    if (!(ls >> s)) continue;  // blank line
    if (!(ls >> b))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected two columns");
    pts.push_back({s, b});
  }
  if (pts.empty()) throw ConfigError(origin + ": BLER table is empty");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].bler < 0.0 || pts[i].bler > 1.0)
      throw ValidationError("radio.bler_table", "BLER outside [0,1]");
    if (i > 0 && pts[i].sinr_db <= pts[i - 1].sinr_db)
      throw ValidationError("radio.bler_table", "SINR column must be strictly increasing");
    if (i > 0 && pts[i].bler > pts[i - 1].bler)
      throw ValidationError("radio.bler_table", "BLER must be non-increasing in SINR");
  }
  return pts;
}

inline std::vector<BlerPoint> load_bler_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open BLER table '" + path + "'");
  return parse_bler_table(in, path);
}

struct RadioParams {
  double P = 23.0;            // transmit power, dBm
  double f_c = 2.5e9;         // carrier, Hz
  double h_V = 1.5;           // vehicle antenna height, m
  double h_R = 10.0;          // RSU antenna height, m
  double h_env = 0.0;         // environment height, m
  double c_light = 3.0e8;     // m/s
  double N0 = -95.0;          // noise power, dBm
  double sigma_sq = 7.5;      // rate factor of the steady-state TCP model
  double sigma_sh = 3.0;      // shadowing std per link, dB
  double d_decorr = 25.0;     // shadow decorrelation distance, m
  double d_min = 1.0;         // distance clamp, m
  double grid_lo = -40.0;     // SINR grid, dB
  double grid_hi = 60.0;
  double grid_step = 0.1;
  SinrMode sinr_mode = SinrMode::power_sum;
  BlerModel bler;

  bool operator==(const RadioParams&) const = default;
};

struct LearnParams {
  double l_rate = 1.0;
  double d_rate = -0.3;
  double gamma = 1e9;

  bool operator==(const LearnParams&) const = default;
};

struct DepartureParams {
  double p_fb = 0.9;    // probability the feedback channel is good
  double m_max = 40.0;  // bytes drained per good interval

  bool operator==(const DepartureParams&) const = default;
};

struct SimConfig {
  int K = 100;
  double E = 1000.0;
  double R = 500.0;
  double Q_max = 2000.0;
  double A_ini = 1500.0;
  double D_a = 10.0;
  double v = 10.0;      // 36 km/h
  double t_s = 0.1;
  int T_max = 1500;
  Policy policy = Policy::proposed;
  Placement placement = Placement::uniform;
  int static_quota = 4;
  int position_quota = 10;
  PriorityMode priority_mode = PriorityMode::floored;
  double priority_eps = 1e-6;
  std::uint64_t seed = 1;
  SpsParams sps;
  RadioParams radio;
  LearnParams learn;
  DepartureParams depart;

  bool operator==(const SimConfig&) const = default;
};

struct SpsRow {
  double f;
  double Gamma;
  int R_h;
  int R_l;
};

// Counter bounds per packet frequency.
inline constexpr std::array<SpsRow, 3> kSpsTable = {{
    {10.0, 100.0, 15, 5},
    {20.0, 50.0, 30, 10},
    {50.0, 20.0, 75, 25},
}};

inline std::optional<SpsRow> sps_row_for(double f) {
  for (const auto& r : kSpsTable)
    if (r.f == f) return r;
  return std::nullopt;
}

// Sets f and the matching Gamma/R_h/R_l row. Throws if f has no row.
inline void set_frequency(SpsParams& sps, double f) {
  auto row = sps_row_for(f);
  if (!row)
    throw ValidationError("sps.f", "no counter-bound row for f=" + std::to_string(f) +
                                       "; set sps.R_h and sps.R_l explicitly");
  sps.f = row->f;
  sps.Gamma = row->Gamma;
  sps.R_h = row->R_h;
  sps.R_l = row->R_l;
}

inline void validate(const SimConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
  };
  require(c.K >= 1, "K", "must be >= 1");
  require(c.Q_max > 0, "Q_max", "must be > 0");
  require(c.D_a > 0, "D_a", "must be > 0");
  require(c.A_ini > 0, "A_ini", "must be > 0");
  {
    const double n = c.A_ini / c.D_a;
    require(std::abs(n - std::round(n)) < 1e-9 * std::max(1.0, n), "A_ini",
            "must be a positive multiple of D_a");
  }
  require(c.R > 0, "R", "must be > 0");
  require(std::abs(c.E - 2.0 * c.R) <= 1e-9 * c.E, "E", "must equal 2R");
  require(c.v > 0, "v", "must be > 0");
  require(c.t_s > 0, "t_s", "must be > 0");
  require(c.T_max >= 0, "T_max", "must be >= 0");
  require(c.static_quota >= 0, "policy.static_quota", "must be >= 0");
  require(c.position_quota >= 0, "policy.position_quota", "must be >= 0");
  require(c.priority_eps > 0, "priority.eps", "must be > 0");

  const auto& s = c.sps;
  require(s.S >= 1, "sps.S", "must be >= 1");
  require(s.f > 0, "sps.f", "must be > 0");
  require(std::abs(s.Gamma * s.f - 1000.0) <= 1e-9 * 1000.0, "sps.Gamma", "Gamma*f must be 1000");
  require(s.R_l > 0, "sps.R_l", "must be > 0");
  require(s.R_h > s.R_l, "sps.R_h", "must exceed R_l");
  require(s.d_sr >= 0, "sps.d_sr", "must be >= 0");
  require(std::floor(1000.0 * s.S / s.f) >= 5, "sps.S", "pool too small: 1000*S/f must be >= 5");

  const auto& r = c.radio;
  require(r.h_V > r.h_env, "radio.h_V", "must exceed h_env");
  require(r.h_R > r.h_env, "radio.h_R", "must exceed h_env");
  require(r.f_c > 0, "radio.f_c", "must be > 0");
  require(r.c_light > 0, "radio.c", "must be > 0");
  require(r.sigma_sq > 0, "radio.sigma_sq", "must be > 0");
  require(r.sigma_sh >= 0, "radio.sigma_sh", "must be >= 0");
  require(r.d_decorr > 0, "radio.d_decorr", "must be > 0");
  require(r.d_min > 0, "radio.d_min", "must be > 0");
  require(r.grid_step > 0, "radio.grid_step", "must be > 0");
  require(r.grid_lo <= -40.0 && r.grid_hi >= 60.0, "radio.grid_lo",
          "SINR grid must cover at least [-40, 60] dB");
  if (r.bler.kind == BlerModel::Kind::logistic)
    require(r.bler.slope > 0, "radio.bler_slope", "must be > 0");
  else
    require(!r.bler.table.empty(), "radio.bler_table", "table model needs points");

  require(c.learn.l_rate > 0, "learn.l_rate", "must be > 0");
  require(c.learn.d_rate > -1.0 && c.learn.d_rate < 0.0, "learn.d_rate", "must lie in (-1, 0)");
  require(c.learn.gamma >= 0, "gamma", "must be >= 0");
  require(c.depart.p_fb >= 0 && c.depart.p_fb <= 1, "depart.p_fb", "must lie in [0,1]");
  require(c.depart.m_max >= 0, "depart.m_max", "must be >= 0");
}

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline std::string fmt(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace detail

// Applies key=value pairs on top of `base`. Frequency-dependent SPS fields
// are auto-filled from the counter-bound table unless given explicitly.
inline SimConfig apply_config(const std::vector<std::pair<std::string, std::string>>& kv,
                              SimConfig base = {}, const std::string& base_dir = {}) {
  using detail::to_double;
  using detail::to_int;
  SimConfig c = std::move(base);
  std::map<std::string, std::string> seen;
  for (const auto& [k, v] : kv) seen[k] = v;

  if (auto it = seen.find("sps.f"); it != seen.end()) {
    const double f = to_double("sps.f", it->second);
    if (auto row = sps_row_for(f)) {
      c.sps.f = f;
      c.sps.Gamma = row->Gamma;
      c.sps.R_h = row->R_h;
      c.sps.R_l = row->R_l;
    } else {
      c.sps.f = f;
      c.sps.Gamma = 1000.0 / f;
      if (!seen.count("sps.R_h") || !seen.count("sps.R_l"))
        throw ValidationError("sps.f", "no counter-bound row for this frequency; set sps.R_h and sps.R_l");
    }
  }

  for (const auto& [key, val] : kv) {
    if (key == "K") c.K = static_cast<int>(to_int(key, val));
    else if (key == "E") c.E = to_double(key, val);
    else if (key == "R") c.R = to_double(key, val);
    else if (key == "Q_max") c.Q_max = to_double(key, val);
    else if (key == "A_ini") c.A_ini = to_double(key, val);
    else if (key == "D_a") c.D_a = to_double(key, val);
    else if (key == "v") c.v = to_double(key, val);
    else if (key == "t_s") c.t_s = to_double(key, val);
    else if (key == "T_max") c.T_max = static_cast<int>(to_int(key, val));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, val));
    else if (key == "gamma") c.learn.gamma = to_double(key, val);
    else if (key == "policy") {
      auto p = parse_policy(val);
      if (!p) throw ConfigError("key 'policy': unknown policy '" + val + "'");
      c.policy = *p;
    } else if (key == "placement") {
      if (val == "uniform") c.placement = Placement::uniform;
      else if (val == "uniform-spacing") c.placement = Placement::uniform_spacing;
      else throw ConfigError("key 'placement': expected uniform|uniform-spacing, got '" + val + "'");
    } else if (key == "policy.static_quota") c.static_quota = static_cast<int>(to_int(key, val));
    else if (key == "policy.position_quota") c.position_quota = static_cast<int>(to_int(key, val));
    else if (key == "priority.mode") {
      if (val == "floored") c.priority_mode = PriorityMode::floored;
      else if (val == "literal") c.priority_mode = PriorityMode::literal;
      else throw ConfigError("key 'priority.mode': expected floored|literal, got '" + val + "'");
    } else if (key == "priority.eps") c.priority_eps = to_double(key, val);
    else if (key == "sps.S") c.sps.S = static_cast<int>(to_int(key, val));
    else if (key == "sps.f") { /* handled above */ }
    else if (key == "sps.Gamma") c.sps.Gamma = to_double(key, val);
    else if (key == "sps.R_h") c.sps.R_h = static_cast<int>(to_int(key, val));
    else if (key == "sps.R_l") c.sps.R_l = static_cast<int>(to_int(key, val));
    else if (key == "sps.d_sr") c.sps.d_sr = to_double(key, val);
    else if (key == "sps.P_sen") c.sps.P_sen = to_double(key, val);
    else if (key == "radio.P") c.radio.P = to_double(key, val);
    else if (key == "radio.f_c") c.radio.f_c = to_double(key, val);
    else if (key == "radio.h_V") c.radio.h_V = to_double(key, val);
    else if (key == "radio.h_R") c.radio.h_R = to_double(key, val);
    else if (key == "radio.h_env") c.radio.h_env = to_double(key, val);
    else if (key == "radio.c") c.radio.c_light = to_double(key, val);
    else if (key == "radio.N0") c.radio.N0 = to_double(key, val);
    else if (key == "radio.sigma_sq") c.radio.sigma_sq = to_double(key, val);
    else if (key == "radio.sigma_sh") c.radio.sigma_sh = to_double(key, val);
    else if (key == "radio.d_decorr") c.radio.d_decorr = to_double(key, val);
    else if (key == "radio.d_min") c.radio.d_min = to_double(key, val);
    else if (key == "radio.grid_lo") c.radio.grid_lo = to_double(key, val);
    else if (key == "radio.grid_hi") c.radio.grid_hi = to_double(key, val);
    else if (key == "radio.grid_step") c.radio.grid_step = to_double(key, val);
    else if (key == "radio.sinr_mode") {
      if (val == "literal") c.radio.sinr_mode = SinrMode::literal;
      else if (val == "power_sum") c.radio.sinr_mode = SinrMode::power_sum;
      else throw ConfigError("key 'radio.sinr_mode': expected literal|power_sum, got '" + val + "'");
    } else if (key == "radio.bler") {
      if (val == "logistic") c.radio.bler.kind = BlerModel::Kind::logistic;
      else if (val == "table") c.radio.bler.kind = BlerModel::Kind::table;
      else throw ConfigError("key 'radio.bler': expected logistic|table, got '" + val + "'");
    } else if (key == "radio.bler_s50") c.radio.bler.s_50 = to_double(key, val);
    else if (key == "radio.bler_slope") c.radio.bler.slope = to_double(key, val);
    else if (key == "radio.bler_table") {
      std::string path = val;
      if (!path.empty() && path.front() != '/' && !base_dir.empty()) path = base_dir + "/" + path;
      c.radio.bler.table = load_bler_table(path);
      c.radio.bler.table_path = val;
      c.radio.bler.kind = BlerModel::Kind::table;
    } else if (key == "learn.l_rate") c.learn.l_rate = to_double(key, val);
    else if (key == "learn.d_rate") c.learn.d_rate = to_double(key, val);
    else if (key == "learn.gamma") c.learn.gamma = to_double(key, val);
    else if (key == "depart.p_fb") c.depart.p_fb = to_double(key, val);
    else if (key == "depart.m_max") c.depart.m_max = to_double(key, val);
    else throw ConfigError("unknown key '" + key + "'");
  }
  return c;
}

inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                         const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string val = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), std::move(val));
  }
  return kv;
}

inline SimConfig parse_config(std::istream& in, const std::string& origin = "<config>",
                              const std::string& base_dir = {}) {
  SimConfig c = apply_config(parse_key_values(in, origin), {}, base_dir);
  validate(c);
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::string dir;
  if (auto slash = path.rfind('/'); slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(in, path, dir);
}

// Writes every key. A table BLER model is recorded by its file path.
inline std::string serialize_config(const SimConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "K=" << c.K << "\n"
    << "E=" << fmt(c.E) << "\n"
    << "R=" << fmt(c.R) << "\n"
    << "Q_max=" << fmt(c.Q_max) << "\n"
    << "A_ini=" << fmt(c.A_ini) << "\n"
    << "D_a=" << fmt(c.D_a) << "\n"
    << "v=" << fmt(c.v) << "\n"
    << "t_s=" << fmt(c.t_s) << "\n"
    << "T_max=" << c.T_max << "\n"
    << "seed=" << c.seed << "\n"
    << "gamma=" << fmt(c.learn.gamma) << "\n"
    << "policy=" << to_string(c.policy) << "\n"
    << "placement=" << (c.placement == Placement::uniform ? "uniform" : "uniform-spacing") << "\n"
    << "policy.static_quota=" << c.static_quota << "\n"
    << "policy.position_quota=" << c.position_quota << "\n"
    << "priority.mode=" << (c.priority_mode == PriorityMode::floored ? "floored" : "literal") << "\n"
    << "priority.eps=" << fmt(c.priority_eps) << "\n"
    << "sps.S=" << c.sps.S << "\n"
    << "sps.f=" << fmt(c.sps.f) << "\n"
    << "sps.Gamma=" << fmt(c.sps.Gamma) << "\n"
    << "sps.R_h=" << c.sps.R_h << "\n"
    << "sps.R_l=" << c.sps.R_l << "\n"
    << "sps.d_sr=" << fmt(c.sps.d_sr) << "\n"
    << "sps.P_sen=" << fmt(c.sps.P_sen) << "\n"
    << "radio.P=" << fmt(c.radio.P) << "\n"
    << "radio.f_c=" << fmt(c.radio.f_c) << "\n"
    << "radio.h_V=" << fmt(c.radio.h_V) << "\n"
    << "radio.h_R=" << fmt(c.radio.h_R) << "\n"
    << "radio.h_env=" << fmt(c.radio.h_env) << "\n"
    << "radio.c=" << fmt(c.radio.c_light) << "\n"
    << "radio.N0=" << fmt(c.radio.N0) << "\n"
    << "radio.sigma_sq=" << fmt(c.radio.sigma_sq) << "\n"
    << "radio.sigma_sh=" << fmt(c.radio.sigma_sh) << "\n"
    << "radio.d_decorr=" << fmt(c.radio.d_decorr) << "\n"
    << "radio.d_min=" << fmt(c.radio.d_min) << "\n"
    << "radio.grid_lo=" << fmt(c.radio.grid_lo) << "\n"
    << "radio.grid_hi=" << fmt(c.radio.grid_hi) << "\n"
    << "radio.grid_step=" << fmt(c.radio.grid_step) << "\n"
    << "radio.sinr_mode=" << (c.radio.sinr_mode == SinrMode::literal ? "literal" : "power_sum") << "\n"
    << "radio.bler_s50=" << fmt(c.radio.bler.s_50) << "\n"
    << "radio.bler_slope=" << fmt(c.radio.bler.slope) << "\n";
  if (c.radio.bler.kind == BlerModel::Kind::table && !c.radio.bler.table_path.empty())
    o << "radio.bler_table=" << c.radio.bler.table_path << "\n";
  else
    o << "radio.bler=logistic\n";
  o << "learn.l_rate=" << fmt(c.learn.l_rate) << "\n"
    << "learn.d_rate=" << fmt(c.learn.d_rate) << "\n"
    << "depart.p_fb=" << fmt(c.depart.p_fb) << "\n"
    << "depart.m_max=" << fmt(c.depart.m_max) << "\n";
  return o.str();
}

}  // namespace feelsel
