// feelsel: command-line driver for single runs, sweeps, the collision curve
// and the SPS oracle report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "feelsel/feelsel.hpp"

namespace fs = std::filesystem;
using namespace feelsel;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> intervals;
  std::string out = "out";
};

void add_common(CLI::App* sc, Common& c) {
  sc->add_option("--config", c.config, "key=value configuration file")->check(CLI::ExistingFile);
  sc->add_option("--seed", c.seed, "root seed");
  sc->add_option("--intervals", c.intervals, "maximum number of intervals (T_max)");
  sc->add_option("--out", c.out, "output directory")->capture_default_str();
}

SimConfig base_config(const Common& c) {
  SimConfig cfg = c.config.empty() ? SimConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.intervals) cfg.T_max = *c.intervals;
  return cfg;
}

Policy policy_or_throw(const std::string& name) {
  auto p = parse_policy(name);
  if (!p) throw ValidationError("policy", "unknown policy '" + name + "'");
  return *p;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle selection simulator for a C-V2X mode 4 federated edge learning cell"};
  app.require_subcommand(1);

  // run
  Common run_c;
  std::optional<std::string> run_policy;
  std::optional<int> run_K, run_S;
  std::optional<double> run_f;
  auto* run_cmd = app.add_subcommand("run", "single scenario, writes trace.csv");
  add_common(run_cmd, run_c);
  run_cmd->add_option("--policy", run_policy, "proposed|maximum|static|random|position");
  run_cmd->add_option("--vehicles", run_K, "vehicle count K");
  run_cmd->add_option("--subchannels", run_S, "sub-channels S");
  run_cmd->add_option("--freq", run_f, "packet frequency f (10, 20 or 50 Hz)");

  // sweep
  Common sw_c;
  std::vector<std::string> sw_policies;
  std::vector<int> sw_K, sw_S;
  std::vector<double> sw_f;
  int sw_replicas = 6;
  unsigned sw_workers = 1;
  std::size_t sw_max = 10000;
  auto* sweep_cmd = app.add_subcommand("sweep", "cartesian sweep, one trace per run plus summary.csv");
  add_common(sweep_cmd, sw_c);
  sweep_cmd->add_option("--policy", sw_policies, "policy axis (comma list, default all five)")->delimiter(',');
  sweep_cmd->add_option("--vehicles", sw_K, "K axis (comma list)")->delimiter(',');
  sweep_cmd->add_option("--subchannels", sw_S, "S axis (comma list)")->delimiter(',');
  sweep_cmd->add_option("--freq", sw_f, "f axis (comma list)")->delimiter(',');
  sweep_cmd->add_option("--replicas", sw_replicas, "replicas per cell, seeds root+i")->capture_default_str();
  sweep_cmd->add_option("--workers", sw_workers, "concurrent runs")->capture_default_str();
  sweep_cmd->add_option("--max-runs", sw_max, "refuse sweeps larger than this")->capture_default_str();

  // collision-curve
  Common cc_c;
  std::vector<int> cc_K = {25, 50, 75, 100, 125, 150, 175, 200};
  int cc_seeds = 6;
  auto* cc_cmd = app.add_subcommand("collision-curve", "mean P_col at initial positions per (K, f, S)");
  add_common(cc_cmd, cc_c);
  cc_cmd->add_option("--vehicles", cc_K, "K values (comma list)")->delimiter(',')->capture_default_str();
  cc_cmd->add_option("--replicas", cc_seeds, "placement seeds averaged")->capture_default_str();

  // oracle
  Common or_c;
  std::uint64_t or_trials = 100000;
  auto* or_cmd = app.add_subcommand("oracle", "Monte-Carlo vs analytic report for the collision model");
  add_common(or_cmd, or_c);
  or_cmd->add_option("--trials", or_trials, "trials (windows) per point")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      SimConfig cfg = base_config(run_c);
      if (run_policy) cfg.policy = policy_or_throw(*run_policy);
      if (run_K) cfg.K = *run_K;
      if (run_S) cfg.sps.S = *run_S;
      if (run_f) set_frequency(cfg.sps, *run_f);
      validate(cfg);
      const auto dir = prepare_out(run_c.out);
      const auto trace = run(cfg);
      write_trace(trace, dir / "trace.csv");
      const auto s = summarize(trace, cfg.Q_max);
      std::printf("policy=%s K=%d intervals=%d uploaded=%.6g mean_backlog=%.6g final_accuracy=%.6g\n",
                  std::string(to_string(cfg.policy)).c_str(), cfg.K, s.run_length, s.total_uploaded,
                  s.mean_backlog, s.final_accuracy);
    } else if (*sweep_cmd) {
      SimConfig cfg = base_config(sw_c);
      SweepSpec spec;
      spec.K = sw_K;
      spec.S = sw_S;
      spec.f = sw_f;
      if (sw_policies.empty())
        spec.policy.assign(kAllPolicies.begin(), kAllPolicies.end());
      else
        for (const auto& p : sw_policies) spec.policy.push_back(policy_or_throw(p));
      if (sw_c.seed) spec.seed = {*sw_c.seed};
      spec.replicas = sw_replicas;
      spec.max_runs = sw_max;
      const auto dir = prepare_out(sw_c.out);
      const auto results = run_sweep(spec, cfg, dir, sw_workers);
      write_summary(results, dir / "summary.csv");
      write_summary(std::cout, results);
    } else if (*cc_cmd) {
      SimConfig cfg = base_config(cc_c);
      validate(cfg);
      if (cc_seeds < 1) throw ValidationError("replicas", "must be >= 1");
      for (int K : cc_K)
        if (K < 1) throw ValidationError("K", "must be >= 1");
      const std::vector<std::pair<double, int>> fS = {{10, 4}, {20, 4}, {50, 4}, {10, 2}, {20, 2}, {50, 2}};
      const auto pts = mean_collision_curve(cfg, cc_K, fS, cc_seeds);
      const auto dir = prepare_out(cc_c.out);
      std::ofstream os(dir / "collision_curve.csv", std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write collision_curve.csv");
      write_collision_curve(os, pts);
      write_collision_curve(std::cout, pts);
    } else if (*or_cmd) {
      const SimConfig cfg = base_config(or_c);
      if (or_trials < 2) throw ValidationError("trials", "must be >= 2");
      const auto suite = run_oracle_suite(or_trials, cfg.seed);
      const auto dir = prepare_out(or_c.out);
      std::ofstream os(dir / "oracle_report.txt", std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write oracle_report.txt");
      auto emit = [&](const char* title, const std::vector<OracleRow>& rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%s\n%-40s %12s %12s %12s %8s\n", title, "case", "analytic", "empirical",
                      "std_error", "z");
        os << line;
        std::cout << line;
        for (const auto& r : rows) {
          std::snprintf(line, sizeof line, "%-40s %12.6g %12.6g %12.6g %8.3g\n", r.label.c_str(), r.analytic,
                        r.empirical, r.std_error, r.z());
          os << line;
          std::cout << line;
        }
      };
      emit("# occupied resources", suite.occupancy);
      emit("# same-resource probability", suite.p_same);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
