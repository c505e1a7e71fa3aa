#pragma once

// Feasible-schedule evaluation and TSPTW makespan minimization. Arrivals use
// earliest-start propagation: u_0 = 0, u_next = max(e_next, u_cur + d + p if
// the current node hosts maintenance), waiting only up to the window opening.
// The maintenance duration p applies to every arc leaving the maintenance
// node, including the final return to the depot. The depot window is not
// enforced on return.
//
// solve_exact_dp is a bitmask dynamic program over (visited set, last node)
// keeping minimal feasible arrival; exact for n <= 16. solve_heuristic runs
// seeded multistart cheapest insertion plus relocate and 2-opt local search,
// stopping early after max_no_improve consecutive restarts without improving
// the best makespan.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "maintroute/instance.hpp"

namespace maintroute {

inline constexpr double kTolSchedule = 1e-9;
inline constexpr double kImproveEps = 1e-9;
inline constexpr int kMaxExactNodes = 16;

struct Route {
  std::vector<int> order;  // permutation of {1..n}, depot implicit at both ends
};

struct TwOverride {
  int node = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Schedule {
  std::vector<int> order;
  std::vector<double> arrivals;  // parallel to order
  double makespan = std::numeric_limits<double>::infinity();
  std::optional<int> maint_node;
  std::optional<double> maint_time;
  bool feasible = false;
  bool proven_optimal = false;
  bool timed_out = false;

  double arrival_at(int node) const {
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] == node) return arrivals[i];
    throw std::invalid_argument("node not on route");
  }
};

struct SolveConfig {
  int restarts = 24;
  int max_no_improve = 12;
  std::uint64_t seed = 0;
  double time_limit = 600.0;  // seconds

  void validate() const {
    if (restarts < 1 || max_no_improve < 1 || time_limit <= 0.0)
      throw std::invalid_argument("solver configuration values must be positive");
  }
};

namespace detail {

inline std::vector<std::pair<double, double>> effective_windows(
    const Instance& inst, const std::optional<TwOverride>& ov) {
  auto tw = inst.tw;
  if (ov) {
    if (ov->node < 1 || ov->node > inst.n)
      throw std::invalid_argument("window override node out of range");
    auto& w = tw[ov->node];
    w.first = std::max(w.first, ov->lo);
    w.second = std::min(w.second, ov->hi);
  }
  return tw;
}

// propagation core; tolerates partial orders so construction can reuse it
inline Schedule schedule_of(const Instance& inst, const std::vector<int>& order,
                            std::optional<int> maint,
                            const std::vector<std::pair<double, double>>& tw) {
  Schedule s;
  s.order = order;
  s.maint_node = maint;
  s.feasible = true;
  double u = 0.0;
  int prev = 0;
  for (int node : order) {
    double arrive = u + inst.d[prev][node] + (maint && prev == *maint ? inst.p_maint : 0.0);
    u = std::max(tw[node].first, arrive);
    if (u > tw[node].second + kTolSchedule) s.feasible = false;
    s.arrivals.push_back(u);
    if (maint && node == *maint) s.maint_time = u;
    prev = node;
  }
  s.makespan = u + inst.d[prev][0] + (maint && prev == *maint ? inst.p_maint : 0.0);
  return s;
}

inline void validate_route(const Instance& inst, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != inst.n)
    throw std::invalid_argument("route must visit every customer");
  std::vector<char> seen(inst.n + 1, 0);
  for (int node : order) {
    if (node < 1 || node > inst.n || seen[node])
      throw std::invalid_argument("route is not a permutation of customers");
    seen[node] = 1;
  }
}

inline void validate_maint(const Instance& inst, std::optional<int> maint) {
  if (!maint) return;
  if (std::find(inst.maint_nodes.begin(), inst.maint_nodes.end(), *maint) ==
      inst.maint_nodes.end())
    throw std::invalid_argument("maintenance node " + std::to_string(*maint) +
                                " is not maintenance-capable");
}

}  // namespace detail

inline Schedule evaluate_route(const Instance& inst, const Route& route,
                               std::optional<int> maint_node = std::nullopt,
                               std::optional<TwOverride> tw_override = std::nullopt) {
  detail::validate_route(inst, route.order);
  detail::validate_maint(inst, maint_node);
  auto tw = detail::effective_windows(inst, tw_override);
  return detail::schedule_of(inst, route.order, maint_node, tw);
}

inline Schedule solve_exact_dp(const Instance& inst, std::optional<int> maint_node = std::nullopt,
                               std::optional<TwOverride> tw_override = std::nullopt) {
  if (inst.n > kMaxExactNodes)
    throw std::invalid_argument("exact solve limited to " + std::to_string(kMaxExactNodes) +
                                " customers");
  detail::validate_maint(inst, maint_node);
  auto tw = detail::effective_windows(inst, tw_override);
  int n = inst.n;
  double p = inst.p_maint;
  auto leave = [&](int node) {
    return maint_node && node == *maint_node ? p : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t states = std::size_t{1} << n;
  std::vector<double> val(states * n, inf);
  std::vector<int> parent(states * n, 0);
  auto at = [&](std::size_t mask, int j) -> std::size_t { return mask * n + (j - 1); };
  for (int j = 1; j <= n; ++j) {
    double u = std::max(tw[j].first, inst.d[0][j]);
    if (u <= tw[j].second + kTolSchedule) val[at(std::size_t{1} << (j - 1), j)] = u;
  }
  for (std::size_t mask = 1; mask < states; ++mask)
    for (int j = 1; j <= n; ++j) {
      if (!(mask >> (j - 1) & 1)) continue;
      double u = val[at(mask, j)];
      if (u == inf) continue;
      for (int k = 1; k <= n; ++k) {
        if (mask >> (k - 1) & 1) continue;
        double arrive = std::max(tw[k].first, u + inst.d[j][k] + leave(j));
        if (arrive > tw[k].second + kTolSchedule) continue;
        std::size_t idx = at(mask | std::size_t{1} << (k - 1), k);
        if (arrive < val[idx]) {
          val[idx] = arrive;
          parent[idx] = j;
        }
      }
    }
  std::size_t full = states - 1;
  double best = inf;
  int best_last = 0;
  for (int j = 1; j <= n; ++j) {
    double u = val[at(full, j)];
    if (u == inf) continue;
    double tau = u + inst.d[j][0] + leave(j);
    if (tau < best - kTolSchedule) {
      best = tau;
      best_last = j;
    }
  }
  if (best_last == 0) {
    Schedule s;
    s.maint_node = maint_node;
    s.proven_optimal = true;
    return s;
  }
  std::vector<int> order;
  std::size_t mask = full;
  for (int j = best_last; j != 0;) {
    order.push_back(j);
    int pj = parent[at(mask, j)];
    mask &= ~(std::size_t{1} << (j - 1));
    j = pj;
  }
  std::reverse(order.begin(), order.end());
  Schedule s = detail::schedule_of(inst, order, maint_node, tw);
  s.proven_optimal = true;
  return s;
}

namespace detail {

// best-improvement relocate + 2-opt descent; accepted makespans land in trace
inline Schedule local_search(const Instance& inst, std::vector<int> order,
                             std::optional<int> maint,
                             const std::vector<std::pair<double, double>>& tw,
                             std::chrono::steady_clock::time_point deadline,
                             std::vector<double>* trace = nullptr) {
  Schedule cur = schedule_of(inst, order, maint, tw);
  if (!cur.feasible) return cur;
  int n = static_cast<int>(order.size());
  bool improved = true;
  while (improved) {
    improved = false;
    if (std::chrono::steady_clock::now() > deadline) break;
    Schedule best = cur;
    for (int i = 0; i < n; ++i) {
      // relocate customer i to every other slot
      std::vector<int> base = cur.order;
      int node = base[i];
      base.erase(base.begin() + i);
      for (int j = 0; j <= n - 1; ++j) {
        if (j == i) continue;
        std::vector<int> cand = base;
        cand.insert(cand.begin() + j, node);
        Schedule s = schedule_of(inst, cand, maint, tw);
        if (s.feasible && s.makespan < best.makespan - kImproveEps) best = s;
      }
      // 2-opt: reverse [i..j]
      for (int j = i + 1; j < n; ++j) {
        std::vector<int> cand = cur.order;
        std::reverse(cand.begin() + i, cand.begin() + j + 1);
        Schedule s = schedule_of(inst, cand, maint, tw);
        if (s.feasible && s.makespan < best.makespan - kImproveEps) best = s;
      }
    }
    if (best.makespan < cur.makespan - kImproveEps) {
      cur = best;
      improved = true;
      if (trace) trace->push_back(cur.makespan);
    }
  }
  return cur;
}

inline std::optional<std::vector<int>> cheapest_insertion(
    const Instance& inst, const std::vector<int>& insertion_order, std::optional<int> maint,
    const std::vector<std::pair<double, double>>& tw) {
  std::vector<int> route;
  for (int node : insertion_order) {
    double best = std::numeric_limits<double>::infinity();
    int best_pos = -1;
    for (std::size_t pos = 0; pos <= route.size(); ++pos) {
      std::vector<int> cand = route;
      cand.insert(cand.begin() + pos, node);
      Schedule s = schedule_of(inst, cand, maint, tw);
      if (s.feasible && s.makespan < best) {
        best = s.makespan;
        best_pos = static_cast<int>(pos);
      }
    }
    if (best_pos < 0) return std::nullopt;
    route.insert(route.begin() + best_pos, node);
  }
  return route;
}

}  // namespace detail

inline Schedule solve_heuristic(const Instance& inst, std::optional<int> maint_node,
                                std::optional<TwOverride> tw_override, const SolveConfig& config) {
  config.validate();
  detail::validate_maint(inst, maint_node);
  auto tw = detail::effective_windows(inst, tw_override);
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(config.time_limit));
  Schedule best;
  best.maint_node = maint_node;
  int stale = 0;
  for (int restart = 0; restart < config.restarts; ++restart) {
    if (restart > 0 && std::chrono::steady_clock::now() > deadline) {
      best.timed_out = true;
      break;
    }
    std::vector<int> ins(inst.n);
    std::iota(ins.begin(), ins.end(), 1);
    if (restart == 0) {
      std::sort(ins.begin(), ins.end(),
                [&](int a, int b) { return tw[a].first < tw[b].first; });
    } else {
      auto rng = make_rng(config.seed, static_cast<std::uint64_t>(restart));
      std::shuffle(ins.begin(), ins.end(), rng);
    }
    auto built = detail::cheapest_insertion(inst, ins, maint_node, tw);
    if (!built) {
      if (++stale >= config.max_no_improve && best.feasible) break;
      continue;
    }
    Schedule s = detail::local_search(inst, *built, maint_node, tw, deadline);
    if (s.feasible && s.makespan < best.makespan - kImproveEps) {
      best = s;
      stale = 0;
    } else if (++stale >= config.max_no_improve && best.feasible) {
      break;
    }
  }
  return best;
}

inline std::string schedule_to_json(const Schedule& s) {
  nlohmann::json j;
  j["order"] = s.order;
  j["arrivals"] = s.arrivals;
  j["makespan"] = s.makespan;
  j["feasible"] = s.feasible;
  j["proven_optimal"] = s.proven_optimal;
  j["timed_out"] = s.timed_out;
  if (s.maint_node) j["maint_node"] = *s.maint_node;
  if (s.maint_time) j["maint_time"] = *s.maint_time;
  return j.dump();
}

inline std::string schedule_csv_line(const Schedule& s) {
  std::ostringstream out;
  out << (s.feasible ? 1 : 0) << ',' << s.makespan << ',';
  out << (s.maint_node ? std::to_string(*s.maint_node) : "-") << ',';
  if (s.maint_time)
    out << *s.maint_time;
  else
    out << '-';
  out << ',';
  for (std::size_t i = 0; i < s.order.size(); ++i) out << (i ? " " : "") << s.order[i];
  return out.str();
}

}  // namespace maintroute
