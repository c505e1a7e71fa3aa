#pragma once

// Dynamic maintenance cost-rate curve
//
//   f(t) = (P(R > t) * cp + P(R < t) * cf) / (integral_0^t P(R > z) dz + t_o)
//
// sampled on a time grid from an empirical remaining-life distribution,
// its minimizer (T_min, lambda), interval min/max queries, and a tangent
// line lower-bound envelope for relaxations.

#include <cmath>
#include <cstddef>
#include <vector>

#include "maintroute/degradation.hpp"

namespace maintroute {

constexpr double kTolEnvelope = 1e-9;
constexpr double kTolConvexFactor = 1e-6;  // scaled by cf

struct CostParams {
  double cp = 1000.0;  // preventive maintenance cost
  double cf = 4000.0;  // corrective (failure) cost
  double t_o = 0.0;    // unit age at the observation that produced the RLD

  void validate() const {
    if (!(0.0 < cp && cp < cf))
      throw std::invalid_argument("CostParams: require 0 < cp < cf");
    if (t_o < 0.0) throw std::invalid_argument("CostParams: t_o must be >= 0");
  }
};

struct CostCurve {
  std::vector<double> grid;                   // strictly increasing query times
  std::vector<double> values;                 // f at each grid time
  std::vector<double> cum_survival_integral;  // integral of P(R > z) up to each grid time
  double t_min = 0.0;
  double lambda_min = 0.0;
  CostParams params;
  bool unimodal_on_grid = false;

  double grid_max() const { return grid.back(); }
};

struct TangentEnvelope {
  std::vector<std::pair<double, double>> lines;  // (intercept l_k, slope s_k)
  std::vector<double> anchor_points;
  bool convexity_warning = false;
};

namespace detail {

// Exact integral of the empirical survival function: mean of min(sample, t),
// with censored units counting as alive throughout. Prefix sums make each
// query O(log M).
struct SurvivalIntegral {
  std::vector<double> sorted;  // uncensored sample values, ascending
  std::vector<double> prefix;  // running sums of `sorted`
  double m = 0.0;
  double censored = 0.0;

  explicit SurvivalIntegral(const RemainingLifeDistribution& rld) {
    std::size_t n_unc = rld.samples.size() - rld.censored;
    sorted.assign(rld.samples.begin(), rld.samples.begin() + n_unc);
    prefix.resize(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];
    m = static_cast<double>(rld.samples.size());
    censored = static_cast<double>(rld.censored);
  }

  double at(double t) const {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    std::size_t k = static_cast<std::size_t>(it - sorted.begin());  // samples <= t
    double dead_mass = prefix[k];
    double alive = static_cast<double>(sorted.size() - k) + censored;
    return (dead_mass + t * alive) / m;
  }
};

}  // namespace detail

inline CostCurve build_cost_curve(const RemainingLifeDistribution& rld, const CostParams& params,
                                  double grid_step, double grid_max) {
  params.validate();
  if (grid_step <= 0.0) throw std::invalid_argument("build_cost_curve: grid_step must be > 0");
  if (grid_max < grid_step)
    throw std::invalid_argument("build_cost_curve: grid_max must be >= grid_step");
  if (rld.samples.empty()) throw std::invalid_argument("build_cost_curve: empty distribution");

  CostCurve curve;
  curve.params = params;
  detail::SurvivalIntegral integral(rld);

  // t = 0 has a vanishing denominator when t_o = 0, so the grid starts one
  // step in for that case.
  double start = params.t_o > 0.0 ? 0.0 : grid_step;
  std::size_t n_points = static_cast<std::size_t>((grid_max - start) / grid_step + 1e-9) + 1;
  for (std::size_t i = 0; i < n_points; ++i) {
    double t = start + static_cast<double>(i) * grid_step;
    double s = survival(rld, t);
    double cum = integral.at(t);
    double denom = cum + params.t_o;
    if (denom <= 0.0)
      throw std::invalid_argument("build_cost_curve: degenerate denominator (already failed and t_o = 0)");
    curve.grid.push_back(t);
    curve.cum_survival_integral.push_back(cum);
    curve.values.push_back((s * params.cp + (1.0 - s) * params.cf) / denom);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.values.size(); ++i)
    if (curve.values[i] < curve.values[best]) best = i;
  curve.t_min = curve.grid[best];
  curve.lambda_min = curve.values[best];

  curve.unimodal_on_grid = true;
  for (std::size_t i = 1; i < curve.values.size(); ++i) {
    bool rising = curve.values[i] > curve.values[i - 1];
    if ((i <= best && rising) || (i > best && !rising && curve.values[i] != curve.values[i - 1])) {
      curve.unimodal_on_grid = false;
      break;
    }
  }
  return curve;
}

// Linear interpolation between grid values; exact at grid points. Queries
// below the first grid time (possible only when t_o = 0) clamp to the first
// value; queries past grid_max are caller errors.
inline double eval_cost(const CostCurve& curve, double t) {
  if (t < 0.0) throw std::invalid_argument("eval_cost: t must be >= 0");
  if (t > curve.grid_max() + 1e-9)
    throw std::out_of_range("eval_cost: t beyond grid_max, extend the grid");
  if (t <= curve.grid.front()) return curve.values.front();
  double step = curve.grid[1] - curve.grid[0];
  std::size_t i = std::min(curve.grid.size() - 2,
                           static_cast<std::size_t>((t - curve.grid.front()) / step));
  while (curve.grid[i + 1] < t && i + 2 < curve.grid.size()) ++i;
  while (curve.grid[i] > t && i > 0) --i;
  double w = (t - curve.grid[i]) / (curve.grid[i + 1] - curve.grid[i]);
  return curve.values[i] + w * (curve.values[i + 1] - curve.values[i]);
}

// Min and max of the interpolated curve over [lo, hi]. Extrema of a
// piecewise-linear function live at segment ends, so scanning the grid
// points inside the interval plus the two interpolated endpoints is exact.
inline std::pair<double, double> interval_cost_bounds(const CostCurve& curve, double lo, double hi) {
  if (lo < 0.0 || lo > hi || hi > curve.grid_max() + 1e-9)
    throw std::invalid_argument("interval_cost_bounds: need 0 <= lo <= hi <= grid_max");
  double f_lo = eval_cost(curve, lo), f_hi = eval_cost(curve, hi);
  double g_lo = std::min(f_lo, f_hi), g_hi = std::max(f_lo, f_hi);
  if (curve.unimodal_on_grid) {
    if (curve.t_min >= lo && curve.t_min <= hi) g_lo = curve.lambda_min;
    return {g_lo, g_hi};
  }
  auto first = std::lower_bound(curve.grid.begin(), curve.grid.end(), lo);
  auto last = std::upper_bound(curve.grid.begin(), curve.grid.end(), hi);
  for (auto it = first; it != last; ++it) {
    double v = curve.values[static_cast<std::size_t>(it - curve.grid.begin())];
    g_lo = std::min(g_lo, v);
    g_hi = std::max(g_hi, v);
  }
  return {g_lo, g_hi};
}

// Tangent lower-bound envelope: k_lines anchors equally spaced over `range`
// and snapped to the grid, slopes by central finite differences, intercepts
// l_k = f(h_k) - s_k h_k, then each line shifted down by its measured worst
// violation so the envelope property holds exactly on the whole grid.
inline TangentEnvelope build_tangent_envelope(const CostCurve& curve, std::size_t k_lines,
                                              std::pair<double, double> range) {
  if (k_lines < 1) throw std::invalid_argument("build_tangent_envelope: k_lines must be >= 1");
  if (range.first < 0.0 || range.first > range.second || range.second > curve.grid_max() + 1e-9)
    throw std::invalid_argument("build_tangent_envelope: bad range");

  auto nearest_index = [&](double t) {
    std::size_t best = 0;
    double err = 1e300;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      double e = std::abs(curve.grid[i] - t);
      if (e < err) {
        err = e;
        best = i;
      }
    }
    return best;
  };

  TangentEnvelope env;
  double tol_convex = kTolConvexFactor * curve.params.cf;
  std::size_t i_lo = nearest_index(range.first), i_hi = nearest_index(range.second);
  for (std::size_t i = std::max<std::size_t>(i_lo, 1); i + 1 <= i_hi && i + 1 < curve.grid.size(); ++i) {
    double second = curve.values[i + 1] - 2.0 * curve.values[i] + curve.values[i - 1];
    if (second < -tol_convex) {
      env.convexity_warning = true;
      break;
    }
  }

  for (std::size_t k = 0; k < k_lines; ++k) {
    double h = k_lines == 1
                   ? 0.5 * (range.first + range.second)
                   : range.first + (range.second - range.first) * static_cast<double>(k) /
                                       static_cast<double>(k_lines - 1);
    std::size_t i = nearest_index(h);
    std::size_t il = i > 0 ? i - 1 : i;
    std::size_t ir = i + 1 < curve.grid.size() ? i + 1 : i;
    double slope = (curve.values[ir] - curve.values[il]) / (curve.grid[ir] - curve.grid[il]);
    double anchor = curve.grid[i];
    double intercept = curve.values[i] - slope * anchor;

    double worst = 0.0;
    for (std::size_t g = 0; g < curve.grid.size(); ++g)
      worst = std::max(worst, intercept + slope * curve.grid[g] - curve.values[g]);
    intercept -= worst;

    env.lines.emplace_back(intercept, slope);
    env.anchor_points.push_back(anchor);
  }
  return env;
}

inline double envelope_lower_bound(const TangentEnvelope& env, double t) {
  if (env.lines.empty()) throw std::invalid_argument("envelope_lower_bound: empty envelope");
  double best = -1e300;
  for (const auto& [l, s] : env.lines) best = std::max(best, l + s * t);
  return best;
}

}  // namespace maintroute
