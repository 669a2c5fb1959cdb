#pragma once

// Trace CSV output, per-run summaries and parameter sweeps.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <exception>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "feelsel/engine.hpp"
#include "feelsel/errors.hpp"

namespace feelsel {

inline constexpr std::string_view kTraceHeader =
    "t,Q,s_star,n_chosen,n_collisions,uploaded_bytes,mu,X_total,accuracy,loss,active_vehicles,mean_P_col";

namespace detail {
inline std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace detail

inline void write_trace(std::ostream& os, std::span<const MetricsRecord> records) {
  using detail::g6;
  os << kTraceHeader << '\n';
  for (const auto& r : records) {
    os << r.t << ',' << g6(r.Q) << ',' << r.s_star << ',' << r.n_chosen << ',' << r.n_collisions << ','
       << g6(r.uploaded_bytes) << ',' << g6(r.mu) << ',' << g6(r.X_total) << ',' << g6(r.accuracy) << ','
       << g6(r.loss) << ',' << r.active_vehicles << ',' << g6(r.mean_P_col) << '\n';
  }
}

inline void write_trace(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_trace(os, records);
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

struct RunSummary {
  int run_length = 0;
  double total_uploaded = 0.0;
  double mean_backlog = 0.0;
  std::optional<int> first_exceed;  // first interval with Q > Q_max
  double final_accuracy = 0.0;
};

inline RunSummary summarize(std::span<const MetricsRecord> trace, double Q_max) {
  RunSummary s;
  s.run_length = static_cast<int>(trace.size());
  if (trace.empty()) return s;
  double q = 0.0;
  for (const auto& r : trace) {
    s.total_uploaded += r.uploaded_bytes;
    q += r.Q;
    if (!s.first_exceed && r.Q > Q_max) s.first_exceed = r.t;
  }
  s.mean_backlog = q / static_cast<double>(trace.size());
  s.final_accuracy = trace.back().accuracy;
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  std::vector<int> K;
  std::vector<double> f;
  std::vector<int> S;
  std::vector<Policy> policy;
  std::vector<std::uint64_t> seed;
  int replicas = 6;
  std::size_t max_runs = 10000;
};

struct SweepCell {
  SimConfig cfg;          // seed holds the cell's base seed
  std::string name;
};

struct SweepCellResult {
  SweepCell cell;
  std::vector<RunSummary> replicas;
  std::vector<std::string> files;
};

inline std::string cell_name(const SimConfig& c) {
  std::ostringstream o;
  o << "K" << c.K << "_f" << detail::g6(c.sps.f) << "_S" << c.sps.S << "_" << to_string(c.policy) << "_seed"
    << c.seed;
  return o.str();
}

// Expands the axes over `base`. Empty axes fall back to the base value.
inline std::vector<SweepCell> expand(const SweepSpec& spec, const SimConfig& base) {
  auto or_base = [](auto v, auto b) {
    if (v.empty()) v.push_back(b);
    return v;
  };
  const auto Ks = or_base(spec.K, base.K);
  const auto fs = or_base(spec.f, base.sps.f);
  const auto Ss = or_base(spec.S, base.sps.S);
  const auto ps = or_base(spec.policy, base.policy);
  const auto seeds = or_base(spec.seed, base.seed);
  if (spec.replicas < 1) throw ValidationError("replicas", "must be >= 1");
  const std::size_t runs = Ks.size() * fs.size() * Ss.size() * ps.size() * seeds.size() *
                           static_cast<std::size_t>(spec.replicas);
  if (runs > spec.max_runs)
    throw ValidationError("sweep", "sweep has " + std::to_string(runs) + " runs, limit is " +
                                       std::to_string(spec.max_runs));
  std::vector<SweepCell> cells;
  for (int K : Ks)
    for (double f : fs)
      for (int S : Ss)
        for (Policy p : ps)
          for (auto sd : seeds) {
            SimConfig c = base;
            c.K = K;
            c.sps.S = S;
            if (f != c.sps.f) set_frequency(c.sps, f);
            c.policy = p;
            c.seed = sd;
            validate(c);
            cells.push_back({c, cell_name(c)});
          }
  return cells;
}

// Runs every cell and replica; replica r of a cell uses seed base + r.
// Output does not depend on `workers`: each run owns its file and results
// are stored by cell index.
inline std::vector<SweepCellResult> run_sweep(const SweepSpec& spec, const SimConfig& base,
                                              const std::filesystem::path& out_dir, unsigned workers = 1) {
  const auto cells = expand(spec, base);
  std::filesystem::create_directories(out_dir);
  std::vector<SweepCellResult> results(cells.size());
  const std::size_t total = cells.size() * static_cast<std::size_t>(spec.replicas);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(total);

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::size_t ci = job / static_cast<std::size_t>(spec.replicas);
      const int r = static_cast<int>(job % static_cast<std::size_t>(spec.replicas));
      try {
        SimConfig c = cells[ci].cfg;
        c.seed = cells[ci].cfg.seed + static_cast<std::uint64_t>(r);
        const auto trace = run(c);
        const auto file = out_dir / ("trace_" + cells[ci].name + "_r" + std::to_string(r) + ".csv");
        write_trace(trace, file);
        auto& res = results[ci];
        res.replicas[static_cast<std::size_t>(r)] = summarize(trace, c.Q_max);
        res.files[static_cast<std::size_t>(r)] = file.filename().string();
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };

  for (std::size_t i = 0; i < cells.size(); ++i) {
    results[i].cell = cells[i];
    results[i].replicas.resize(static_cast<std::size_t>(spec.replicas));
    results[i].files.resize(static_cast<std::size_t>(spec.replicas));
  }
  workers = std::max(1u, workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

inline constexpr std::string_view kSummaryHeader =
    "policy,K,f,S,seed,replicas,run_length,total_uploaded,mean_backlog,first_exceed_Qmax,exceeded_replicas,"
    "final_accuracy";

// One row per cell with replica means. first_exceed_Qmax is the mean over
// the replicas that exceeded, empty when none did.
inline void write_summary(std::ostream& os, std::span<const SweepCellResult> results) {
  using detail::g6;
  os << kSummaryHeader << '\n';
  for (const auto& res : results) {
    const auto& c = res.cell.cfg;
    const double n = static_cast<double>(res.replicas.size());
    double len = 0, up = 0, bl = 0, acc = 0, fe = 0;
    int exceeded = 0;
    for (const auto& s : res.replicas) {
      len += s.run_length;
      up += s.total_uploaded;
      bl += s.mean_backlog;
      acc += s.final_accuracy;
      if (s.first_exceed) {
        fe += *s.first_exceed;
        ++exceeded;
      }
    }
    os << to_string(c.policy) << ',' << c.K << ',' << g6(c.sps.f) << ',' << c.sps.S << ',' << c.seed << ','
       << res.replicas.size() << ',' << g6(len / n) << ',' << g6(up / n) << ',' << g6(bl / n) << ','
       << (exceeded ? g6(fe / exceeded) : std::string()) << ',' << exceeded << ',' << g6(acc / n) << '\n';
  }
}

inline void write_summary(std::span<const SweepCellResult> results, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_summary(os, results);
}

inline void write_collision_curve(std::ostream& os, std::span<const CollisionCurvePoint> pts) {
  os << "K,f,S,mean_P_col\n";
  for (const auto& p : pts)
    os << p.K << ',' << detail::g6(p.f) << ',' << p.S << ',' << detail::g6(p.mean_P_col) << '\n';
}

}  // namespace feelsel
