#pragma once

// TSPTW instance parsing, travel-time matrices, and maintenance-node selection.
//
// Input format is Gendreau-style whitespace-delimited text: optional header or
// comment lines, then one row per node `index x y demand ready due service`,
// node 0 first (the depot). A row with index 999 terminates the list. Comment
// lines start with '#' or '!'; two structured comments are understood:
//   #name: <instance name>
//   #maint: p_maint=<dur> cr=<cost> nodes=<i,j,...>
// Service times are folded into outgoing arcs (d[i][j] += service[i], i != j)
// so downstream schedule arithmetic needs no separate service term.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "maintroute/common.hpp"

namespace maintroute {

inline constexpr double kTolTriangle = 1e-9;
inline constexpr double kDefaultTravelCost = 0.72;
inline constexpr long long kExactPMedianBudget = 10'000'000;

enum class Rounding { none, one_decimal, integer_truncate };
enum class PMedianMethod { exact, greedy_interchange };

struct Instance {
  int n = 0;                                    // customers; node 0 is the depot
  std::vector<Vec2> coords;                     // n+1 points
  std::vector<std::vector<double>> d;           // (n+1)^2, service already folded in
  std::vector<std::pair<double, double>> tw;    // [e_i, l_i] per node
  std::vector<double> service;                  // as read from the file
  std::vector<int> maint_nodes;                 // sorted subset of {1..n}
  double p_maint = 0.0;
  double cr = kDefaultTravelCost;
  std::string name;
  std::vector<std::string> warnings;

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n == b.n && a.coords == b.coords && a.d == b.d && a.tw == b.tw &&
           a.service == b.service && a.maint_nodes == b.maint_nodes &&
           a.p_maint == b.p_maint && a.cr == b.cr && a.name == b.name;
  }
};

namespace detail {

inline double apply_rounding(double v, Rounding r) {
  switch (r) {
    case Rounding::none: return v;
    case Rounding::one_decimal: return std::round(v * 10.0) / 10.0;
    case Rounding::integer_truncate: return std::trunc(v);
  }
  throw std::invalid_argument("unknown rounding mode");
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// parses "key=value ..." payloads of the structured comments
inline bool next_kv(std::istringstream& in, std::string& key, std::string& value) {
  std::string tok;
  if (!(in >> tok)) return false;
  auto eq = tok.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got: " + tok);
  key = tok.substr(0, eq);
  value = tok.substr(eq + 1);
  return true;
}

inline void build_travel_matrix(Instance& inst, Rounding rounding) {
  int m = inst.n + 1;
  inst.d.assign(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      double dx = inst.coords[i].x - inst.coords[j].x;
      double dy = inst.coords[i].y - inst.coords[j].y;
      inst.d[i][j] = apply_rounding(std::sqrt(dx * dx + dy * dy), rounding) + inst.service[i];
    }
  int violations = 0;
  for (int i = 0; i < m && violations < 8; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        if (inst.d[i][j] > inst.d[i][k] + inst.d[k][j] + kTolTriangle) {
          if (++violations <= 8)
            inst.warnings.push_back("triangle inequality violated at (" + std::to_string(i) +
                                    "," + std::to_string(k) + "," + std::to_string(j) + ")");
          break;
        }
}

}  // namespace detail

inline Instance parse_instance(const std::string& text, Rounding rounding = Rounding::none) {
  Instance inst;
  std::vector<double> xs, ys;
  bool rows_started = false, terminated = false;
  int next_index = 0, line_no = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream in(line);
    std::string first;
    if (!(in >> first)) continue;
    if (first[0] == '#' || first[0] == '!') {
      std::string rest = first.size() > 1 ? first.substr(1) : "";
      if (first[0] == '#') {
        if (rest.empty()) in >> rest;
        if (rest == "name:") {
          std::string nm;
          std::getline(in >> std::ws, nm);
          inst.name = nm;
        } else if (rest == "maint:") {
          std::string key, value;
          while (detail::next_kv(in, key, value)) {
            if (key == "p_maint") {
              inst.p_maint = std::stod(value);
            } else if (key == "cr") {
              inst.cr = std::stod(value);
            } else if (key == "nodes") {
              inst.maint_nodes.clear();
              std::istringstream ns(value);
              std::string item;
              while (std::getline(ns, item, ','))
                if (!item.empty()) inst.maint_nodes.push_back(std::stoi(item));
            } else {
              throw std::invalid_argument("line " + std::to_string(line_no) +
                                          ": unknown #maint key: " + key);
            }
          }
        }
      }
      continue;
    }
    char* end = nullptr;
    double idx = std::strtod(first.c_str(), &end);
    bool numeric = end && *end == '\0';
    if (!numeric) {
      if (rows_started)
        throw std::invalid_argument("line " + std::to_string(line_no) + ": malformed row");
      continue;  // header line
    }
    if (terminated)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": data after terminator");
    if (idx == 999 && next_index > 0) {
      terminated = true;
      continue;
    }
    double x, y, demand, ready, due, svc;
    if (!(in >> x >> y >> demand >> ready >> due >> svc)) {
      if (!rows_started) continue;  // numeric header (e.g. a node count)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected index x y demand ready due service");
    }
    if (!rows_started && idx != 0) continue;  // header with extra columns
    if (idx != next_index)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected node index " +
                                  std::to_string(next_index));
    if (due < ready)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": time window has due < ready");
    rows_started = true;
    ++next_index;
    inst.coords.push_back({x, y});
    inst.tw.push_back({ready, due});
    inst.service.push_back(svc);
  }
  if (next_index < 2) throw std::invalid_argument("instance needs a depot and a customer");
  inst.n = next_index - 1;
  for (int node : inst.maint_nodes)
    if (node < 1 || node > inst.n)
      throw std::invalid_argument("#maint node " + std::to_string(node) + " out of range");
  detail::build_travel_matrix(inst, rounding);
  return inst;
}

inline std::string serialize_instance(const Instance& inst) {
  std::ostringstream out;
  if (!inst.name.empty()) out << "#name: " << inst.name << "\n";
  out << "#maint: p_maint=" << detail::fmt_double(inst.p_maint)
      << " cr=" << detail::fmt_double(inst.cr) << " nodes=";
  for (std::size_t i = 0; i < inst.maint_nodes.size(); ++i)
    out << (i ? "," : "") << inst.maint_nodes[i];
  out << "\n";
  for (int i = 0; i <= inst.n; ++i) {
    out << i << ' ' << detail::fmt_double(inst.coords[i].x) << ' '
        << detail::fmt_double(inst.coords[i].y) << " 0 " << detail::fmt_double(inst.tw[i].first)
        << ' ' << detail::fmt_double(inst.tw[i].second) << ' '
        << detail::fmt_double(inst.service[i]) << "\n";
  }
  out << "999\n";
  return out.str();
}

namespace detail {

inline double pmedian_objective(const Instance& inst, const std::vector<int>& set) {
  if (set.empty()) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int j = 1; j <= inst.n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int i : set) best = std::min(best, j == i ? 0.0 : inst.d[j][i]);
    total += best;
  }
  return total;
}

// greedy add then single-swap descent; every accepted step's objective lands in trace
inline std::vector<int> greedy_interchange(const Instance& inst, int p, std::uint64_t seed,
                                           std::vector<double>* trace = nullptr) {
  std::vector<int> order(inst.n);
  std::iota(order.begin(), order.end(), 1);
  auto rng = make_rng(seed, 0);
  std::shuffle(order.begin(), order.end(), rng);  // seeded tie-break: first in shuffled order wins
  std::vector<int> set;
  std::vector<char> in_set(inst.n + 1, 0);
  for (int step = 0; step < p; ++step) {
    int best_node = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int c : order) {
      if (in_set[c]) continue;
      set.push_back(c);
      double obj = pmedian_objective(inst, set);
      set.pop_back();
      if (obj < best_obj) {
        best_obj = obj;
        best_node = c;
      }
    }
    set.push_back(best_node);
    in_set[best_node] = 1;
    if (trace) trace->push_back(best_obj);
  }
  double cur = pmedian_objective(inst, set);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t si = 0; si < set.size() && !improved; ++si)
      for (int c : order) {
        if (in_set[c]) continue;
        int old = set[si];
        set[si] = c;
        double obj = pmedian_objective(inst, set);
        if (obj < cur - 1e-12) {
          cur = obj;
          in_set[old] = 0;
          in_set[c] = 1;
          if (trace) trace->push_back(obj);
          improved = true;
          break;
        }
        set[si] = old;
      }
  }
  std::sort(set.begin(), set.end());
  return set;
}

inline std::vector<int> exact_pmedian(const Instance& inst, int p) {
  long long combos = 1;
  for (int i = 0; i < p; ++i) {
    combos = combos * (inst.n - i) / (i + 1);
    if (combos > kExactPMedianBudget) break;
  }
  if (static_cast<long long>(inst.n) * combos > kExactPMedianBudget)
    throw std::invalid_argument("exact p-median beyond enumeration budget");
  std::vector<int> pick(p), best;
  std::iota(pick.begin(), pick.end(), 1);
  double best_obj = std::numeric_limits<double>::infinity();
  while (true) {
    double obj = pmedian_objective(inst, pick);
    if (obj < best_obj) {
      best_obj = obj;
      best = pick;
    }
    int i = p - 1;
    while (i >= 0 && pick[i] == inst.n - (p - 1 - i)) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < p; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

}  // namespace detail

inline std::vector<int> select_maintenance_nodes(const Instance& inst, int p, PMedianMethod method,
                                                 std::uint64_t seed) {
  if (p < 1 || p > inst.n) throw std::invalid_argument("p must be in [1, n]");
  if (method == PMedianMethod::exact) return detail::exact_pmedian(inst, p);
  return detail::greedy_interchange(inst, p, seed);
}

}  // namespace maintroute
