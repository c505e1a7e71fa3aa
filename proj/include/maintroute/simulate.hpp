#pragma once

// Monte-Carlo comparison of the sensor-driven policy against the fixed
// age-window benchmark. Each scenario is one unit drawn from the prior: its
// degradation path yields the sensor history (and so the curve the planner
// sees) and, continued past the observation time, the ground-truth failure
// age. Both policies are scored on the same failure draw per replication.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "maintroute/baseline.hpp"
#include "maintroute/calibration.hpp"
#include "maintroute/common.hpp"
#include "maintroute/degradation.hpp"
#include "maintroute/iam.hpp"
#include "maintroute/instance.hpp"
#include "maintroute/maintcost.hpp"

namespace maintroute {

struct Scenario {
  Vec2 true_theta;
  double failure_time = 0.0;  // vehicle age at breakdown, measured from dispatch
  std::uint64_t seed = 0;     // substream the unit's path and failure derive from
};

struct PolicyOutcome {
  double routing_cost = 0.0;
  double maintenance_cost = 0.0;
  double total_cost = 0.0;
  bool failed = false;
};

// A solved policy reduced to what the simulation needs: the committed route
// cost and the vehicle age at which maintenance is planned.
struct PolicyPlan {
  double routing_cost = 0.0;
  double planned_age = 0.0;
};

struct PolicyAggregate {
  double mean_routing = 0.0;
  double mean_maintenance = 0.0;
  double mean_total = 0.0;
  int failures = 0;
};

struct CompareRow {
  std::string instance;
  int p = 0;                   // maintenance-capable node count in effect
  bool sweep = false;          // produced by the flexibility sweep
  std::vector<int> maint_set;
  PolicyAggregate sdm, pm;
  std::vector<PolicyOutcome> sdm_outcomes, pm_outcomes;
  double pct_reduction = 0.0;  // pm mean total / sdm mean total - 1
  bool inherited_plans = false;  // sweep row kept the smaller set's plans
  bool skipped = false;
  std::string skip_reason;
};

struct CompareReport {
  std::vector<Scenario> scenarios;
  std::vector<CompareRow> rows;
};

struct CompareConfig {
  int n_scenarios = 100;
  std::uint64_t seed = 0;
  std::vector<int> flex_sweep;  // strictly increasing p values; empty = no sweep
  CostParams costs{1000.0, 4000.0, 10.0};
  double grid_step = 0.25;
  double grid_max = 2.0 * kDefaultHorizon;
  std::size_t curve_samples = 20000;
  int n_observations = 10;  // sensor readings before dispatch, evenly spaced in (0, t_o]
  // Fresh sensor draw, curve, and solve per scenario; false reuses the first
  // scenario's curve and solution across all replications.
  bool resolve_per_scenario = true;
  double sim_step = kDefaultSimStep;
  double failure_horizon = 16.0 * kCalibratedMeanLifetime;
  IamConfig iam;
  PmPolicy pm;
  unsigned workers = 1;

  void validate() const {
    if (n_scenarios < 1) throw std::invalid_argument("n_scenarios must be positive");
    if (n_observations < 1) throw std::invalid_argument("n_observations must be positive");
    if (curve_samples < 1) throw std::invalid_argument("curve_samples must be positive");
    if (grid_step <= 0.0 || grid_max < grid_step)
      throw std::invalid_argument("bad curve grid parameters");
    if (sim_step <= 0.0 || failure_horizon <= 0.0)
      throw std::invalid_argument("bad simulation step or horizon");
    costs.validate();
    if (costs.t_o <= 0.0) throw std::invalid_argument("t_o must be positive");
    for (std::size_t i = 0; i < flex_sweep.size(); ++i)
      if (flex_sweep[i] < 1 || (i > 0 && flex_sweep[i] <= flex_sweep[i - 1]))
        throw std::invalid_argument("flex_sweep must be strictly increasing and positive");
    iam.validate();
    pm.validate();
  }
};

namespace detail {

// One unit from the prior: Brownian log-signal walked through the
// observation times, then the ground-truth failure age continued from the
// realized level at t_o. Units already past the threshold at dispatch are
// redrawn from the next substream (a many-sigma event under the calibrated
// prior, but the loop keeps the invariant failure_time > 0 unconditional).
inline Scenario draw_scenario(const DegradationModel& model, const ThetaPrior& prior,
                              const CompareConfig& cfg, std::size_t index,
                              SignalHistory* history_out) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::uint64_t stream = (static_cast<std::uint64_t>(index) << 8) + 2 * attempt;
    auto rng = make_rng(cfg.seed, stream);
    Vec2 theta = draw_theta(prior, rng);

    std::normal_distribution<double> normal(0.0, 1.0);
    SignalHistory hist;
    hist.t_o = cfg.costs.t_o;
    double dt = cfg.costs.t_o / cfg.n_observations;
    double y = 0.0;
    bool dead = false;
    for (int j = 1; j <= cfg.n_observations; ++j) {
      double t = dt * j;
      y = (j == 1 ? theta.x + theta.y * t : y + theta.y * dt) +
          model.noise_sigma * std::sqrt(dt) * normal(rng);
      double amp = model.offset_phi + std::exp(y);
      if (amp >= model.threshold_lambda_cap) {
        dead = true;
        break;
      }
      hist.observations.emplace_back(t, amp);
    }
    if (dead) continue;

    Scenario sc;
    sc.true_theta = theta;
    sc.seed = mix_seed(cfg.seed, stream);
    sc.failure_time =
        sample_true_failure(model, theta, cfg.costs.t_o, hist.observations.back().second,
                            cfg.sim_step, mix_seed(cfg.seed, stream + 1), cfg.failure_horizon);
    if (!(sc.failure_time > 0.0)) continue;
    if (history_out) *history_out = std::move(hist);
    return sc;
  }
}

}  // namespace detail

inline std::vector<Scenario> make_scenarios(const DegradationModel& model, const ThetaPrior& prior,
                                            const CompareConfig& cfg) {
  cfg.validate();
  model.validate();
  std::vector<Scenario> out(static_cast<std::size_t>(cfg.n_scenarios));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = detail::draw_scenario(model, prior, cfg, i, nullptr);
  return out;
}

// Planned maintenance age > realized failure age means the vehicle broke
// down first: corrective cost. A tie is survival (preventive).
inline PolicyOutcome simulate_policy(const PolicyPlan& plan, const Scenario& scenario, double cp,
                                     double cf) {
  PolicyOutcome out;
  out.failed = plan.planned_age > scenario.failure_time;
  out.routing_cost = plan.routing_cost;
  out.maintenance_cost = out.failed ? cf : cp;
  out.total_cost = out.routing_cost + out.maintenance_cost;
  return out;
}

// No-maintenance solutions defer to the curve minimizer: the lambda they were
// charged is the rate of maintaining at T_min, so that is the age realized.
inline PolicyPlan sdm_plan(const Instance& inst, const Schedule& schedule,
                           const CostCurve& curve) {
  return {inst.cr * schedule.makespan,
          schedule.maint_time ? *schedule.maint_time : curve.t_min};
}

inline PolicyPlan pm_plan(const Instance& inst, const PmSolution& sol) {
  return {inst.cr * sol.schedule.makespan, sol.schedule.maint_time.value()};
}

inline PolicyAggregate aggregate_outcomes(const std::vector<PolicyOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate_outcomes: empty");
  PolicyAggregate agg;
  for (const auto& o : outcomes) {
    agg.mean_routing += o.routing_cost;
    agg.mean_maintenance += o.maintenance_cost;
    agg.mean_total += o.total_cost;
    agg.failures += o.failed ? 1 : 0;
  }
  double n = static_cast<double>(outcomes.size());
  agg.mean_routing /= n;
  agg.mean_maintenance /= n;
  agg.mean_total /= n;
  return agg;
}

// Nested p-median sets: greedy-add on the same objective as the instance
// module's selector, snapshotting at each requested size. Nesting is what
// makes the flexibility sweep monotone-testable.
inline std::vector<std::vector<int>> nested_maintenance_sets(const Instance& inst,
                                                             const std::vector<int>& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i] < 1 || ps[i] > inst.n || (i > 0 && ps[i] <= ps[i - 1]))
      throw std::invalid_argument("nested sets need strictly increasing p in [1, n]");
  std::vector<std::vector<int>> out;
  std::vector<int> set;
  for (int p : ps) {
    while (static_cast<int>(set.size()) < p) {
      int pick = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= inst.n; ++j) {
        if (std::find(set.begin(), set.end(), j) != set.end()) continue;
        set.push_back(j);
        double obj = detail::pmedian_objective(inst, set);
        set.pop_back();
        if (obj < best - 1e-12) {
          best = obj;
          pick = j;
        }
      }
      set.push_back(pick);
    }
    auto snapshot = set;
    std::sort(snapshot.begin(), snapshot.end());
    out.push_back(std::move(snapshot));
  }
  return out;
}

namespace detail {

struct ComparisonRun {
  CompareRow row;
  std::vector<PolicyPlan> sdm_plans;  // one per scenario
};

inline ComparisonRun run_comparison(const Instance& inst, const std::vector<Scenario>& scenarios,
                                    const std::vector<CostCurve>& curves,
                                    const CompareConfig& cfg) {
  ComparisonRun run;
  run.row.instance = inst.name;
  run.row.maint_set = inst.maint_nodes;
  run.row.p = static_cast<int>(inst.maint_nodes.size());

  auto pm_sol = solve_pm(inst, cfg.pm, cfg.iam.solver, cfg.iam.exact_solves);
  PolicyPlan pm = pm_plan(inst, pm_sol);

  run.sdm_plans.resize(scenarios.size());
  if (cfg.resolve_per_scenario) {
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      auto res = run_iam(inst, curves[s], cfg.iam);
      run.sdm_plans[s] = sdm_plan(inst, res.best.schedule, curves[s]);
    }
  } else {
    auto res = run_iam(inst, curves[0], cfg.iam);
    std::fill(run.sdm_plans.begin(), run.sdm_plans.end(),
              sdm_plan(inst, res.best.schedule, curves[0]));
  }

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    run.row.sdm_outcomes.push_back(
        simulate_policy(run.sdm_plans[s], scenarios[s], cfg.costs.cp, cfg.costs.cf));
    run.row.pm_outcomes.push_back(simulate_policy(pm, scenarios[s], cfg.costs.cp, cfg.costs.cf));
  }
  run.row.sdm = aggregate_outcomes(run.row.sdm_outcomes);
  run.row.pm = aggregate_outcomes(run.row.pm_outcomes);
  run.row.pct_reduction = run.row.pm.mean_total / run.row.sdm.mean_total - 1.0;
  return run;
}

inline void score_outcomes(CompareRow& row, const std::vector<PolicyPlan>& plans,
                           const std::vector<Scenario>& scenarios, const CompareConfig& cfg) {
  row.sdm_outcomes.clear();
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    row.sdm_outcomes.push_back(simulate_policy(plans[s], scenarios[s], cfg.costs.cp, cfg.costs.cf));
  row.sdm = aggregate_outcomes(row.sdm_outcomes);
  row.pct_reduction = row.pm.mean_total / row.sdm.mean_total - 1.0;
}

}  // namespace detail

// Shared scenarios, one comparison row per instance, plus one row per sweep
// size when a sweep is requested. A sweep row may inherit the previous size's
// plans wholesale: the nested sets keep the smaller set's policy admissible,
// so the reported cost is the better of the two executable policies and the
// sweep is nonincreasing by construction.
inline CompareReport compare_policies(const std::vector<Instance>& instances,
                                      const DegradationModel& model, const ThetaPrior& prior,
                                      const CompareConfig& cfg) {
  cfg.validate();
  model.validate();

  CompareReport report;
  std::vector<SignalHistory> histories(static_cast<std::size_t>(cfg.n_scenarios));
  report.scenarios.resize(static_cast<std::size_t>(cfg.n_scenarios));
  for (std::size_t i = 0; i < report.scenarios.size(); ++i)
    report.scenarios[i] = detail::draw_scenario(model, prior, cfg, i, &histories[i]);

  std::size_t n_curves = cfg.resolve_per_scenario ? report.scenarios.size() : 1;
  std::vector<CostCurve> curves(n_curves);
  parallel_for(n_curves, cfg.workers, [&](std::size_t i) {
    auto post = posterior_update(prior, histories[i], model);
    auto rld = simulate_rld(post, model, cfg.curve_samples, kDefaultHorizon, cfg.sim_step,
                            mix_seed(cfg.seed, 0x5eed0000 + i));
    curves[i] = build_cost_curve(rld, cfg.costs, cfg.grid_step, cfg.grid_max);
  });

  for (const Instance& inst : instances) {
    try {
      report.rows.push_back(
          detail::run_comparison(inst, report.scenarios, curves, cfg).row);
    } catch (const std::exception& e) {
      CompareRow row;
      row.instance = inst.name;
      row.maint_set = inst.maint_nodes;
      row.p = static_cast<int>(inst.maint_nodes.size());
      row.skipped = true;
      row.skip_reason = e.what();
      report.rows.push_back(std::move(row));
      continue;
    }

    if (cfg.flex_sweep.empty()) continue;
    auto sets = nested_maintenance_sets(inst, cfg.flex_sweep);
    std::vector<PolicyPlan> carried;
    double carried_mean = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sets.size(); ++k) {
      Instance sized = inst;
      sized.maint_nodes = sets[k];
      try {
        auto run = detail::run_comparison(sized, report.scenarios, curves, cfg);
        run.row.sweep = true;
        if (run.row.sdm.mean_total > carried_mean) {
          run.sdm_plans = carried;
          run.row.inherited_plans = true;
          detail::score_outcomes(run.row, run.sdm_plans, report.scenarios, cfg);
        }
        carried = std::move(run.sdm_plans);
        carried_mean = run.row.sdm.mean_total;
        report.rows.push_back(std::move(run.row));
      } catch (const std::exception& e) {
        CompareRow row;
        row.instance = inst.name;
        row.maint_set = sets[k];
        row.p = cfg.flex_sweep[k];
        row.sweep = true;
        row.skipped = true;
        row.skip_reason = e.what();
        report.rows.push_back(std::move(row));
        carried.clear();
        carried_mean = std::numeric_limits<double>::infinity();
      }
    }
  }
  return report;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

// Cost table: one row per non-sweep comparison, both policies side by side.
inline std::string compare_costs_csv(const CompareReport& report) {
  std::string out =
      "instance,p,sdm_total,sdm_routing,sdm_maintenance,pm_total,pm_routing,pm_maintenance,"
      "pct_reduction\n";
  for (const auto& r : report.rows) {
    if (r.sweep) continue;
    if (r.skipped) {
      out += "# skipped " + r.instance + ": " + r.skip_reason + "\n";
      continue;
    }
    out += r.instance + "," + std::to_string(r.p) + "," + detail::fmt(r.sdm.mean_total) + "," +
           detail::fmt(r.sdm.mean_routing) + "," + detail::fmt(r.sdm.mean_maintenance) + "," +
           detail::fmt(r.pm.mean_total) + "," + detail::fmt(r.pm.mean_routing) + "," +
           detail::fmt(r.pm.mean_maintenance) + "," + detail::fmt(r.pct_reduction) + "\n";
  }
  return out;
}

// Failure table: counts per policy and their ratio.
inline std::string compare_failures_csv(const CompareReport& report) {
  std::string out = "instance,p,scenarios,sdm_failures,pm_failures,pm_to_sdm_ratio\n";
  for (const auto& r : report.rows) {
    if (r.sweep || r.skipped) continue;
    double ratio = static_cast<double>(r.pm.failures) / static_cast<double>(r.sdm.failures);
    out += r.instance + "," + std::to_string(r.p) + "," +
           std::to_string(r.sdm_outcomes.size()) + "," + std::to_string(r.sdm.failures) + "," +
           std::to_string(r.pm.failures) + "," + detail::fmt(ratio) + "\n";
  }
  return out;
}

// Flexibility table: sweep rows only, ascending p per instance.
inline std::string compare_sweep_csv(const CompareReport& report) {
  std::string out = "instance,p,maint_nodes,sdm_total,pm_total,pct_reduction,inherited\n";
  for (const auto& r : report.rows) {
    if (!r.sweep) continue;
    if (r.skipped) {
      out += "# skipped " + r.instance + " p=" + std::to_string(r.p) + ": " + r.skip_reason + "\n";
      continue;
    }
    std::string nodes;
    for (int m : r.maint_set) nodes += (nodes.empty() ? "" : ";") + std::to_string(m);
    out += r.instance + "," + std::to_string(r.p) + "," + nodes + "," +
           detail::fmt(r.sdm.mean_total) + "," + detail::fmt(r.pm.mean_total) + "," +
           detail::fmt(r.pct_reduction) + "," + (r.inherited_plans ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json compare_report_json(const CompareReport& report) {
  nlohmann::json j;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& s : report.scenarios)
    j["scenarios"].push_back({{"theta", {s.true_theta.x, s.true_theta.y}},
                              {"failure_time", s.failure_time},
                              {"seed", s.seed}});
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"instance", r.instance}, {"p", r.p},       {"sweep", r.sweep},
                       {"maint_set", r.maint_set}, {"skipped", r.skipped}};
    if (r.skipped) {
      row["skip_reason"] = r.skip_reason;
    } else {
      auto policy = [](const PolicyAggregate& a, const std::vector<PolicyOutcome>& out) {
        nlohmann::json p{{"mean_routing", a.mean_routing},
                         {"mean_maintenance", a.mean_maintenance},
                         {"mean_total", a.mean_total},
                         {"failures", a.failures}};
        p["outcomes"] = nlohmann::json::array();
        for (const auto& o : out)
          p["outcomes"].push_back({{"routing", o.routing_cost},
                                   {"maintenance", o.maintenance_cost},
                                   {"total", o.total_cost},
                                   {"failed", o.failed}});
        return p;
      };
      row["sdm"] = policy(r.sdm, r.sdm_outcomes);
      row["pm"] = policy(r.pm, r.pm_outcomes);
      row["pct_reduction"] = r.pct_reduction;
      row["inherited_plans"] = r.inherited_plans;
    }
    j["rows"].push_back(std::move(row));
  }
  return j;
}

}  // namespace maintroute
