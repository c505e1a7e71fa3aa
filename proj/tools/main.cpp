#include <algorithm>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "maintroute/cli.hpp"

using namespace maintroute;

int main(int argc, char** argv) {
  CLI::App app{"maintenance-aware routing: cost curves, solvers, and policy comparison"};
  app.require_subcommand(1);

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--workers", workers, "parallel worker cap; never changes results")
      ->capture_default_str();

  RunManifest m;
  bool static_mode = false;

  auto add_out = [&](CLI::App* s) {
    s->add_option("--out", m.out_dir, "output directory")->capture_default_str();
  };
  auto add_curve_opts = [&](CLI::App* s) {
    s->add_option("--scenario", m.scenario_path, "sensor history JSON file")->required();
    s->add_option("--seed", m.seed, "Monte-Carlo seed")->capture_default_str();
    s->add_option("--samples", m.curve_samples, "remaining-life sample count")
        ->capture_default_str();
    s->add_option("--grid-step", m.grid_step, "curve grid step")->capture_default_str();
    s->add_option("--grid-max", m.grid_max, "curve grid extent")->capture_default_str();
    s->add_option("--cp", m.costs.cp, "preventive maintenance cost")->capture_default_str();
    s->add_option("--cf", m.costs.cf, "corrective failure cost")->capture_default_str();
  };
  auto add_iam_opts = [&](CLI::App* s) {
    s->add_option("--b", m.b, "subintervals per split")->capture_default_str();
    s->add_option("--epsilon", m.epsilon, "convergence gap in cost units")->capture_default_str();
    s->add_option("--max-iterations", m.max_iterations, "iteration cap")->capture_default_str();
    s->add_flag("--exact", m.exact_solves, "exact subproblem solves (small instances)");
  };
  auto add_window_opts = [&](CLI::App* s) {
    s->add_option("--window-lo", m.window_lo, "age-window lower edge")->capture_default_str();
    s->add_option("--window-hi", m.window_hi, "age-window upper edge")->capture_default_str();
    s->add_option("--flat-cost", m.flat_cost, "flat maintenance charge")->capture_default_str();
  };

  auto* curve = app.add_subcommand("curve", "build a maintenance cost curve from sensor data");
  add_curve_opts(curve);
  add_out(curve);

  auto* solve = app.add_subcommand("solve", "solve one instance with the interval method");
  solve->add_option("--instance", m.instance_path, "instance file")->required();
  add_curve_opts(solve);
  add_iam_opts(solve);
  add_out(solve);

  auto* oracle = app.add_subcommand("oracle", "brute-force optimum and envelope lower bound");
  oracle->add_option("--instance", m.instance_path, "instance file (small n)")->required();
  add_curve_opts(oracle);
  oracle->add_option("--pi-grid-step", m.pi_grid_step, "forced-arrival scan step")
      ->capture_default_str();
  oracle->add_option("--k-lines", m.k_lines, "tangent line count")->capture_default_str();
  add_out(oracle);

  auto* pm = app.add_subcommand("pm", "fixed age-window benchmark schedule");
  pm->add_option("--instance", m.instance_path, "instance file")->required();
  pm->add_option("--seed", m.seed, "solver seed")->capture_default_str();
  pm->add_flag("--exact", m.exact_solves, "exact route solves (small instances)");
  add_window_opts(pm);
  add_out(pm);

  auto* compare = app.add_subcommand("compare", "Monte-Carlo policy comparison across instances");
  compare->add_option("--instance", m.instance_paths, "instance files (repeatable)")->required();
  compare->add_option("--scenarios", m.n_scenarios, "replications per instance")
      ->capture_default_str();
  compare->add_option("--seed", m.seed, "scenario and solver seed")->capture_default_str();
  compare->add_option("--samples", m.curve_samples, "remaining-life sample count")
      ->capture_default_str();
  compare->add_option("--grid-step", m.grid_step, "curve grid step")->capture_default_str();
  compare->add_option("--grid-max", m.grid_max, "curve grid extent")->capture_default_str();
  compare->add_option("--cp", m.costs.cp, "preventive maintenance cost")->capture_default_str();
  compare->add_option("--cf", m.costs.cf, "corrective failure cost")->capture_default_str();
  compare->add_option("--sweep", m.flex_sweep, "flexibility sweep p values, e.g. 1,2,3,5,7")
      ->delimiter(',');
  compare->add_flag("--static", static_mode, "reuse one sensor draw and plan for all scenarios");
  add_iam_opts(compare);
  add_window_opts(compare);
  add_out(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  m.resolve_per_scenario = !static_mode;
  if (curve->parsed()) return cmd_curve(m, std::cout, std::cerr);
  if (solve->parsed()) return cmd_solve(m, std::cout, std::cerr);
  if (oracle->parsed()) return cmd_oracle(m, workers, std::cout, std::cerr);
  if (pm->parsed()) return cmd_pm(m, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(m, workers, std::cout, std::cerr);
  return kExitInputError;
}
