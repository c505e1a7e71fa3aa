#pragma once

// Iterative alignment: split each maintenance node's window into subintervals
// of bounded cost variation delta, solve a restricted TSPTW per subinterval,
// eliminate dominated slices, and tighten global bounds until U - L <= epsilon.
//
// Elimination is safe two ways: within a node, a subinterval whose best case
// exceeds another's worst case cannot hold the optimum; across nodes, anything
// whose best case exceeds the global upper bound is dropped. Bounds use only
// surviving subintervals: a dominated slice's lower value already exceeds the
// minimum upper value, so it can tighten neither side.
//
// Exactly one maintenance stop is scheduled (or none, allowed only when the
// no-maintenance makespan stays within the cost curve's minimizer T_min).

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "maintroute/maintcost.hpp"
#include "maintroute/tsptw.hpp"

namespace maintroute {

enum class SubStatus { pending, solved, infeasible, dominated };

struct Subinterval {
  int node = 0;
  double lo = 0.0, hi = 0.0;
  double g_lo = 0.0, g_hi = 0.0;  // min/max maintenance cost over [lo, hi]
  double tau = std::numeric_limits<double>::infinity();
  SubStatus status = SubStatus::pending;
  Schedule schedule;
};

struct PoolEntry {
  Schedule schedule;
  double z = std::numeric_limits<double>::infinity();
};

struct Ledger {
  std::map<int, std::vector<Subinterval>> intervals;  // surviving slices per node
  int v = 0;
  double delta_v = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  std::vector<PoolEntry> pool;
  std::optional<PoolEntry> no_maint_candidate;  // present only when tau <= T_min
  bool lower_clamped = false;  // heuristic route times pushed L above U once
};

struct IamConfig {
  int b = 3;  // subintervals per split
  double epsilon = 1.0;
  int max_iterations = 40;
  SolveConfig solver;
  bool exact_solves = false;  // use the bitmask DP per subinterval (n <= 16)

  void validate() const {
    if (b < 2) throw std::invalid_argument("b must be at least 2");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
    solver.validate();
  }
};

struct IterationStat {
  int v = 0;
  double upper = 0.0, lower = 0.0, delta = 0.0;
  int survivors = 0;
};

struct IamResult {
  PoolEntry best;
  std::vector<IterationStat> trace;
  bool converged = false;
  double gap = std::numeric_limits<double>::infinity();
  Ledger ledger;
};

namespace detail {

// first t >= from where the interpolated curve meets `level`, walking the grid
inline double walk_to_level(const CostCurve& curve, double from, double hi, double level) {
  double prev_t = from, prev_f = eval_cost(curve, from);
  if (std::abs(prev_f - level) <= kTolEnvelope) return from;
  double step = curve.grid.size() > 1 ? curve.grid[1] - curve.grid[0] : 1.0;
  for (double t = std::min(hi, std::floor(from / step + 1.0) * step);;
       t = std::min(hi, t + step)) {
    double f = eval_cost(curve, t);
    if ((prev_f - level) * (f - level) <= 0.0) {
      if (std::abs(f - prev_f) < 1e-15) return t;
      double w = (level - prev_f) / (f - prev_f);
      return prev_t + w * (t - prev_t);
    }
    if (t >= hi) return hi;  // noise kept the level out of reach; close out
    prev_t = t;
    prev_f = f;
  }
}

inline double interval_argmin(const CostCurve& curve, double lo, double hi) {
  double best_t = lo, best = eval_cost(curve, lo);
  double fhi = eval_cost(curve, hi);
  if (fhi < best) {
    best = fhi;
    best_t = hi;
  }
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    double t = curve.grid[i];
    if (t <= lo || t >= hi) continue;
    if (curve.values[i] < best) {
      best = curve.values[i];
      best_t = t;
    }
  }
  return best_t;
}

inline Subinterval make_sub(const CostCurve& curve, int node, double lo, double hi) {
  Subinterval s;
  s.node = node;
  s.lo = lo;
  s.hi = hi;
  auto [g_lo, g_hi] = interval_cost_bounds(curve, lo, hi);
  s.g_lo = g_lo;
  s.g_hi = g_hi;
  return s;
}

// equal-|df| boundaries across one monotone stretch
inline void split_monotone(const CostCurve& curve, int node, double lo, double hi, int pieces,
                           std::vector<Subinterval>& out) {
  double f_lo = eval_cost(curve, lo), f_hi = eval_cost(curve, hi);
  double prev = lo;
  for (int q = 1; q < pieces; ++q) {
    double level = f_lo + (f_hi - f_lo) * q / pieces;
    double h = std::min(hi, std::max(prev, walk_to_level(curve, prev, hi, level)));
    out.push_back(make_sub(curve, node, prev, h));
    prev = h;
  }
  out.push_back(make_sub(curve, node, prev, hi));
}

}  // namespace detail

inline std::vector<Subinterval> split_interval(const CostCurve& curve, int node, double lo,
                                               double hi, int b) {
  if (b < 2) throw std::invalid_argument("b must be at least 2");
  if (hi < lo) throw std::invalid_argument("interval bounds out of order");
  std::vector<Subinterval> out;
  if (hi - lo <= 0.0) {
    out.push_back(detail::make_sub(curve, node, lo, hi));
    return out;
  }
  double f_lo = eval_cost(curve, lo), f_hi = eval_cost(curve, hi);
  double t_star = detail::interval_argmin(curve, lo, hi);
  double f_star = eval_cost(curve, t_star);
  bool interior_min = t_star > lo && t_star < hi && f_star < std::min(f_lo, f_hi) - kTolEnvelope;
  if (!interior_min) {
    double delta = std::abs(f_hi - f_lo) / b;
    if (delta <= kTolEnvelope) {
      out.push_back(detail::make_sub(curve, node, lo, hi));
      return out;
    }
    detail::split_monotone(curve, node, lo, hi, b, out);
    return out;
  }
  double d_left = f_lo - f_star, d_right = f_hi - f_star;
  double delta = (d_left + d_right) / b;
  int n_left = std::max(1, static_cast<int>(std::ceil(d_left / delta - 1e-12)));
  int n_right = std::max(1, static_cast<int>(std::ceil(d_right / delta - 1e-12)));
  detail::split_monotone(curve, node, lo, t_star, n_left, out);
  detail::split_monotone(curve, node, t_star, hi, n_right, out);
  return out;
}

inline Subinterval solve_subinterval(const Instance& inst, Subinterval sub,
                                     const SolveConfig& config, bool exact = false) {
  if (sub.status != SubStatus::pending)
    throw std::invalid_argument("subinterval already processed");
  double wlo = std::max(inst.tw[sub.node].first, sub.lo);
  double whi = std::min(inst.tw[sub.node].second, sub.hi);
  if (wlo > whi + kTolSchedule) {
    sub.status = SubStatus::infeasible;
    return sub;
  }
  TwOverride ov{sub.node, sub.lo, sub.hi};
  Schedule s = exact ? solve_exact_dp(inst, sub.node, ov)
                     : solve_heuristic(inst, sub.node, ov, config);
  if (!s.feasible) {
    sub.status = SubStatus::infeasible;
    return sub;
  }
  sub.schedule = s;
  sub.tau = s.makespan;
  sub.status = SubStatus::solved;
  return sub;
}

inline double evaluate_total_cost(const Schedule& schedule, const CostCurve& curve,
                                  const Instance& inst) {
  if (!schedule.feasible) throw std::invalid_argument("schedule must be feasible");
  if (schedule.maint_node) {
    if (!schedule.maint_time) throw std::invalid_argument("maintenance time missing");
    return inst.cr * schedule.makespan + eval_cost(curve, *schedule.maint_time);
  }
  if (schedule.makespan > curve.t_min + kTolSchedule)
    throw InfeasibleError("route duration exceeds T_min with no maintenance scheduled");
  return inst.cr * schedule.makespan + curve.lambda_min;
}

inline Ledger eliminate_dominated(Ledger led, double cr) {
  for (auto& [node, subs] : led.intervals) {
    std::vector<Subinterval> kept;
    double min_upper = std::numeric_limits<double>::infinity();
    for (const auto& s : subs)
      if (s.status == SubStatus::solved)
        min_upper = std::min(min_upper, cr * s.tau + s.g_hi);
    for (auto& s : subs) {
      if (s.status == SubStatus::infeasible) continue;  // removed outright
      if (s.status == SubStatus::solved) {
        double best_case = cr * s.tau + s.g_lo;
        if (best_case > min_upper + kTolSchedule || best_case > led.upper + kTolSchedule)
          s.status = SubStatus::dominated;
      }
      kept.push_back(s);
    }
    subs = std::move(kept);
  }
  return led;
}

inline std::pair<double, double> update_bounds(Ledger& led, double cr) {
  double min_upper = std::numeric_limits<double>::infinity();
  double min_lower = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& [node, subs] : led.intervals)
    for (const auto& s : subs) {
      if (s.status != SubStatus::solved) continue;
      any = true;
      min_upper = std::min(min_upper, cr * s.tau + s.g_hi);
      min_lower = std::min(min_lower, cr * s.tau + s.g_lo);
    }
  if (led.no_maint_candidate) {
    any = true;
    min_upper = std::min(min_upper, led.no_maint_candidate->z);
    min_lower = std::min(min_lower, led.no_maint_candidate->z);
  }
  if (!any) throw InfeasibleError("no surviving maintenance placement");
  led.upper = std::min(led.upper, min_upper);
  led.lower = std::max(led.lower, min_lower);
  if (led.lower > led.upper) {  // only possible with heuristic route times
    led.lower = led.upper;
    led.lower_clamped = true;
  }
  return {led.upper, led.lower};
}

inline IamResult run_iam(const Instance& inst, const CostCurve& curve, const IamConfig& config) {
  config.validate();
  IamResult res;
  Ledger& led = res.ledger;

  bool exact = config.exact_solves;
  Schedule no_maint = exact ? solve_exact_dp(inst) : solve_heuristic(inst, std::nullopt,
                                                                     std::nullopt, config.solver);
  if (!no_maint.feasible)
    throw InfeasibleError("no feasible tour exists");  // extra p cannot restore feasibility
  if (no_maint.makespan <= curve.t_min + kTolSchedule)
    led.no_maint_candidate = PoolEntry{no_maint, evaluate_total_cost(no_maint, curve, inst)};
  if (inst.maint_nodes.empty() && !led.no_maint_candidate)
    throw InfeasibleError("route outlasts T_min and no node permits maintenance");

  double delta0 = 0.0;
  for (int node : inst.maint_nodes) {
    auto subs = split_interval(curve, node, inst.tw[node].first, inst.tw[node].second, config.b);
    for (const auto& s : subs) delta0 = std::max(delta0, s.g_hi - s.g_lo);
    led.intervals[node] = std::move(subs);
  }
  led.delta_v = delta0;

  auto remember = [&](const Subinterval& s) {
    double z = evaluate_total_cost(s.schedule, curve, inst);
    if (res.best.z > z) res.best = PoolEntry{s.schedule, z};
  };
  if (led.no_maint_candidate) res.best = *led.no_maint_candidate;

  for (led.v = 0;; ++led.v) {
    for (auto& [node, subs] : led.intervals)
      for (auto& s : subs)
        if (s.status == SubStatus::pending) {
          s = solve_subinterval(inst, s, config.solver, exact);
          if (s.status == SubStatus::solved) remember(s);
        }
    led = eliminate_dominated(std::move(led), inst.cr);
    auto [upper, lower] = update_bounds(led, inst.cr);
    int survivors = 0;
    for (const auto& [node, subs] : led.intervals)
      for (const auto& s : subs)
        if (s.status == SubStatus::solved) ++survivors;
    res.trace.push_back({led.v, upper, lower, led.delta_v, survivors});
    res.gap = upper - lower;
    if (res.gap <= config.epsilon) {
      res.converged = true;
      break;
    }
    if (led.v + 1 >= config.max_iterations) break;

    double delta_next = 0.0;
    for (auto& [node, subs] : led.intervals) {
      std::vector<Subinterval> next;
      for (auto& s : subs) {
        if (s.status == SubStatus::dominated) {  // kept for the record, never re-split
          next.push_back(std::move(s));
          continue;
        }
        if (s.status != SubStatus::solved) continue;
        auto children = split_interval(curve, node, s.lo, s.hi, config.b);
        if (children.size() == 1 && children[0].lo == s.lo && children[0].hi == s.hi) {
          next.push_back(std::move(s));  // flat or zero-width: keep the solved slice
          continue;
        }
        for (auto& c : children) {
          delta_next = std::max(delta_next, c.g_hi - c.g_lo);
          next.push_back(std::move(c));
        }
      }
      subs = std::move(next);
    }
    led.delta_v = delta_next;
  }
  if (led.no_maint_candidate) led.pool.push_back(*led.no_maint_candidate);
  if (res.best.z < std::numeric_limits<double>::infinity()) led.pool.push_back(res.best);
  return res;
}

}  // namespace maintroute
