#pragma once

// Manifest-driven command pipeline. Each subcommand fills a RunManifest,
// derives a stable hash from it, and stamps that hash plus the seed into
// every artifact it writes, so rerunning the same manifest reproduces the
// files byte for byte. Worker count and the output directory are execution
// knobs, deliberately outside the hash: they must never change data bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "maintroute/baseline.hpp"
#include "maintroute/calibration.hpp"
#include "maintroute/common.hpp"
#include "maintroute/degradation.hpp"
#include "maintroute/iam.hpp"
#include "maintroute/instance.hpp"
#include "maintroute/maintcost.hpp"
#include "maintroute/simulate.hpp"
#include "maintroute/tsptw.hpp"

namespace maintroute {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInputError = 4;

struct RunManifest {
  std::string command;                      // curve | solve | oracle | pm | compare
  std::string instance_path;                // solve / oracle / pm
  std::vector<std::string> instance_paths;  // compare
  std::string scenario_path;                // sensor history JSON (curve-driven commands)
  std::string out_dir = ".";

  // Curve construction. costs.t_o is overwritten from the scenario file so the
  // cost clock and the posterior share the same origin.
  CostParams costs{1000.0, 4000.0, 10.0};
  double grid_step = 0.25;
  double grid_max = 2.0 * kDefaultHorizon;
  std::size_t curve_samples = 20000;
  std::uint64_t seed = 0;

  // Interval solver.
  int b = 3;
  double epsilon = 1.0;
  int max_iterations = 40;
  bool exact_solves = false;

  // Oracle.
  double pi_grid_step = 0.1;
  std::size_t k_lines = 40;

  // Fixed age-window benchmark.
  double window_lo = 100.0;
  double window_hi = 112.0;
  double flat_cost = 1000.0;

  // Policy comparison.
  int n_scenarios = 100;
  std::vector<int> flex_sweep;
  bool resolve_per_scenario = true;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["instance_path"] = m.instance_path;
  j["instance_paths"] = m.instance_paths;
  j["scenario_path"] = m.scenario_path;
  j["out_dir"] = m.out_dir;
  j["cp"] = m.costs.cp;
  j["cf"] = m.costs.cf;
  j["t_o"] = m.costs.t_o;
  j["grid_step"] = m.grid_step;
  j["grid_max"] = m.grid_max;
  j["curve_samples"] = m.curve_samples;
  j["seed"] = m.seed;
  j["b"] = m.b;
  j["epsilon"] = m.epsilon;
  j["max_iterations"] = m.max_iterations;
  j["exact_solves"] = m.exact_solves;
  j["pi_grid_step"] = m.pi_grid_step;
  j["k_lines"] = m.k_lines;
  j["window_lo"] = m.window_lo;
  j["window_hi"] = m.window_hi;
  j["flat_cost"] = m.flat_cost;
  j["n_scenarios"] = m.n_scenarios;
  j["flex_sweep"] = m.flex_sweep;
  j["resolve_per_scenario"] = m.resolve_per_scenario;
  return j;
}

// FNV-1a over the canonical manifest JSON, minus out_dir: relocating the
// artifacts must not change their bytes.
inline std::string manifest_hash(const RunManifest& m) {
  auto j = manifest_to_json(m);
  j.erase("out_dir");
  const std::string s = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Instance load_instance(const std::string& path) {
  return parse_instance(read_text_file(path));
}

// Scenario file: {"t_o": <age at dispatch>, "observations": [[time, amplitude], ...]}
inline SignalHistory load_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  SignalHistory h;
  h.t_o = j.at("t_o").get<double>();
  for (const auto& row : j.at("observations"))
    h.observations.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
  return h;
}

namespace detail {

template <typename F>
int run_guarded(std::ostream& err, F&& fn) {
  try {
    return fn();
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

inline std::string manifest_comment(const RunManifest& m, const std::string& hash) {
  return "# manifest: " + hash + "\n# command: " + m.command +
         "\n# seed: " + std::to_string(m.seed) + "\n";
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write: " + p.string());
  out << bytes;
}

inline void write_manifest_record(const RunManifest& m, const std::string& hash) {
  auto j = manifest_to_json(m);
  j["manifest_hash"] = hash;
  write_file(std::filesystem::path(m.out_dir) / "manifest.json", j.dump(2) + "\n");
}

// Posterior from the scenario file, then an empirical curve under the run's
// cost parameters. Mutates m.costs.t_o to the scenario's dispatch age.
inline CostCurve curve_from_scenario(RunManifest& m) {
  SignalHistory hist = load_history(m.scenario_path);
  m.costs.t_o = hist.t_o;
  auto model = calibrated_model();
  auto post = posterior_update(calibrated_prior(), hist, model);
  auto rld = simulate_rld(post, model, m.curve_samples, kDefaultHorizon, kDefaultSimStep, m.seed);
  return build_cost_curve(rld, m.costs, m.grid_step, m.grid_max);
}

}  // namespace detail

inline int cmd_curve(RunManifest m, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    m.command = "curve";
    auto curve = detail::curve_from_scenario(m);
    const std::string hash = manifest_hash(m);
    std::filesystem::create_directories(m.out_dir);
    std::string csv = detail::manifest_comment(m, hash);
    csv += "# t_min: " + detail::fmt(curve.t_min) + "\n";
    csv += "# lambda_min: " + detail::fmt(curve.lambda_min) + "\n";
    csv += "t,cost\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
      csv += detail::fmt(curve.grid[i]) + "," + detail::fmt(curve.values[i]) + "\n";
    const auto path = std::filesystem::path(m.out_dir) / "curve.csv";
    detail::write_file(path, csv);
    detail::write_manifest_record(m, hash);
    out << "curve: t_min=" << detail::fmt(curve.t_min)
        << " lambda_min=" << detail::fmt(curve.lambda_min) << " points=" << curve.grid.size()
        << " -> " << path.string() << "\n";
    return kExitOk;
  });
}

inline int cmd_solve(RunManifest m, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    m.command = "solve";
    Instance inst = load_instance(m.instance_path);
    auto curve = detail::curve_from_scenario(m);
    IamConfig cfg;
    cfg.b = m.b;
    cfg.epsilon = m.epsilon;
    cfg.max_iterations = m.max_iterations;
    cfg.exact_solves = m.exact_solves;
    cfg.solver.seed = m.seed;
    auto res = run_iam(inst, curve, cfg);
    const std::string hash = manifest_hash(m);
    std::filesystem::create_directories(m.out_dir);

    std::string trace = detail::manifest_comment(m, hash) + "v,upper,lower,delta,survivors\n";
    for (const auto& r : res.trace)
      trace += std::to_string(r.v) + "," + detail::fmt(r.upper) + "," + detail::fmt(r.lower) +
               "," + detail::fmt(r.delta) + "," + std::to_string(r.survivors) + "\n";
    detail::write_file(std::filesystem::path(m.out_dir) / "trace.csv", trace);

    nlohmann::json j;
    j["manifest_hash"] = hash;
    j["seed"] = m.seed;
    j["z"] = res.best.z;
    j["converged"] = res.converged;
    j["gap"] = res.gap;
    j["iterations"] = res.trace.size();
    if (!res.trace.empty()) {
      j["upper"] = res.trace.back().upper;
      j["lower"] = res.trace.back().lower;
    }
    j["schedule"] = nlohmann::json::parse(schedule_to_json(res.best.schedule));
    detail::write_file(std::filesystem::path(m.out_dir) / "solution.json", j.dump(2) + "\n");
    detail::write_manifest_record(m, hash);
    out << "solve: z=" << detail::fmt(res.best.z) << " gap=" << detail::fmt(res.gap)
        << " iterations=" << res.trace.size() << " converged=" << (res.converged ? "yes" : "no")
        << "\n";
    return res.converged ? kExitOk : kExitNotConverged;
  });
}

inline int cmd_oracle(RunManifest m, unsigned workers, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    m.command = "oracle";
    Instance inst = load_instance(m.instance_path);
    auto curve = detail::curve_from_scenario(m);
    OracleConfig cfg;
    cfg.pi_grid_step = m.pi_grid_step;
    cfg.workers = workers;
    auto sol = solve_exact_sdm(inst, curve, cfg);
    // Tangents anchored on the decreasing branch; the envelope itself is valid
    // over the whole grid, so the bound holds for any arrival the scan visits.
    auto env = build_tangent_envelope(curve, m.k_lines,
                                      {std::min(m.grid_step, curve.t_min), curve.t_min});
    double lb = solve_envelope_lb(inst, env, curve, cfg);
    const std::string hash = manifest_hash(m);
    std::filesystem::create_directories(m.out_dir);
    auto j = oracle_report_json(sol, lb);
    j["manifest_hash"] = hash;
    j["seed"] = m.seed;
    detail::write_file(std::filesystem::path(m.out_dir) / "oracle.json", j.dump(2) + "\n");
    detail::write_manifest_record(m, hash);
    out << "oracle: z=" << detail::fmt(sol.z) << " envelope_lb=" << detail::fmt(lb) << "\n";
    return kExitOk;
  });
}

inline int cmd_pm(RunManifest m, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    m.command = "pm";
    Instance inst = load_instance(m.instance_path);
    PmPolicy policy;
    policy.age_window = {m.window_lo, m.window_hi};
    policy.flat_cost = m.flat_cost;
    SolveConfig scfg;
    scfg.seed = m.seed;
    auto sol = solve_pm(inst, policy, scfg, m.exact_solves);
    const std::string hash = manifest_hash(m);
    std::filesystem::create_directories(m.out_dir);
    nlohmann::json j;
    j["manifest_hash"] = hash;
    j["seed"] = m.seed;
    j["objective"] = sol.objective;
    j["window_violated"] = sol.window_violated;
    j["window_miss"] = sol.window_miss;
    j["schedule"] = nlohmann::json::parse(schedule_to_json(sol.schedule));
    detail::write_file(std::filesystem::path(m.out_dir) / "pm.json", j.dump(2) + "\n");
    detail::write_manifest_record(m, hash);
    out << "pm: objective=" << detail::fmt(sol.objective);
    if (sol.schedule.maint_time) out << " maint_time=" << detail::fmt(*sol.schedule.maint_time);
    if (sol.window_violated) out << " window_violated miss=" << detail::fmt(sol.window_miss);
    out << "\n";
    return kExitOk;
  });
}

inline int cmd_compare(RunManifest m, unsigned workers, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    m.command = "compare";
    std::vector<Instance> instances;
    for (const auto& p : m.instance_paths) instances.push_back(load_instance(p));
    if (instances.empty()) throw std::invalid_argument("compare: no instances given");

    CompareConfig cfg;
    cfg.n_scenarios = m.n_scenarios;
    cfg.seed = m.seed;
    cfg.flex_sweep = m.flex_sweep;
    cfg.costs = m.costs;
    cfg.grid_step = m.grid_step;
    cfg.grid_max = m.grid_max;
    cfg.curve_samples = m.curve_samples;
    cfg.resolve_per_scenario = m.resolve_per_scenario;
    cfg.workers = workers;
    cfg.iam.b = m.b;
    cfg.iam.epsilon = m.epsilon;
    cfg.iam.max_iterations = m.max_iterations;
    cfg.iam.exact_solves = m.exact_solves;
    cfg.iam.solver.seed = m.seed;
    cfg.pm.age_window = {m.window_lo, m.window_hi};
    cfg.pm.flat_cost = m.flat_cost;

    auto report = compare_policies(instances, calibrated_model(), calibrated_prior(), cfg);
    const std::string hash = manifest_hash(m);
    std::filesystem::create_directories(m.out_dir);
    const std::string comment = detail::manifest_comment(m, hash);
    detail::write_file(std::filesystem::path(m.out_dir) / "costs.csv",
                       comment + compare_costs_csv(report));
    detail::write_file(std::filesystem::path(m.out_dir) / "failures.csv",
                       comment + compare_failures_csv(report));
    if (!m.flex_sweep.empty())
      detail::write_file(std::filesystem::path(m.out_dir) / "sweep.csv",
                         comment + compare_sweep_csv(report));
    auto j = compare_report_json(report);
    j["manifest_hash"] = hash;
    j["seed"] = m.seed;
    detail::write_file(std::filesystem::path(m.out_dir) / "report.json", j.dump(2) + "\n");
    detail::write_manifest_record(m, hash);

    bool any = false;
    for (const auto& r : report.rows) {
      if (r.sweep) continue;
      if (r.skipped) {
        out << r.instance << ": skipped (" << r.skip_reason << ")\n";
        continue;
      }
      any = true;
      out << r.instance << ": sdm_total=" << detail::fmt(r.sdm.mean_total)
          << " pm_total=" << detail::fmt(r.pm.mean_total) << " failures=" << r.sdm.failures << "/"
          << r.pm.failures << " reduction=" << detail::fmt(100.0 * r.pct_reduction) << "%\n";
    }
    for (const auto& r : report.rows)
      if (r.sweep && !r.skipped)
        out << "  sweep " << r.instance << " p=" << r.p
            << " sdm_total=" << detail::fmt(r.sdm.mean_total)
            << (r.inherited_plans ? " (inherited)" : "") << "\n";
    if (!any) throw InfeasibleError("every instance was skipped");
    return kExitOk;
  });
}

}  // namespace maintroute
