#pragma once

// Log-linear degradation signal with Brownian error,
//
//   ln(D(t) - phi) = a + b*t + eps(t),   Var[eps(t)] = sigma^2 * t,
//
// conjugate Bayesian update of theta = (a, b), and Monte-Carlo estimation of
// the remaining-life distribution as the first crossing of the failure
// threshold after the observation time t_o.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "maintroute/common.hpp"

namespace maintroute {

struct DegradationModel {
  double offset_phi = 0.2;            // deterministic floor of the signal
  double noise_sigma = 0.02;          // per-unit-time sd of the Brownian log-error
  double threshold_lambda_cap = 1.0;  // failure threshold on the amplitude

  double log_threshold() const { return std::log(threshold_lambda_cap - offset_phi); }

  void validate() const {
    if (noise_sigma < 0.0)
      throw std::invalid_argument("DegradationModel: noise_sigma must be >= 0");
    if (threshold_lambda_cap <= offset_phi)
      throw std::invalid_argument("DegradationModel: threshold must exceed offset_phi");
  }
};

struct ThetaPrior {
  Vec2 mean;        // (a, b)
  Sym2 covariance;  // SPD
};

struct SignalHistory {
  std::vector<std::pair<double, double>> observations;  // (time, amplitude)
  double t_o = 0.0;                                     // time of the last observation
};

struct ThetaPosterior {
  Vec2 mean;
  Sym2 covariance;
  double conditioned_amplitude = 0.0;  // D(t_o), the value forward simulation starts from
  double t_o = 0.0;                    // observation time the posterior conditions on
};

struct RemainingLifeDistribution {
  std::vector<double> samples;  // sorted ascending, censored values recorded at horizon
  double t_o = 0.0;
  double horizon = 0.0;
  double step = 0.0;
  std::size_t censored = 0;
  bool already_failed = false;  // conditioned amplitude was at or past the threshold
};

namespace detail {

// Whitened observation sequence: the first log-amplitude and the subsequent
// increments are independent Gaussians under the Brownian error model.
//   z_1 = a + b t_1 + sigma W(t_1)        ~ N(a + b t_1, sigma^2 t_1)
//   z_j = b (t_j - t_{j-1}) + sigma dW_j  ~ N(b dt_j,    sigma^2 dt_j)
inline void validate_history(const SignalHistory& history, const DegradationModel& model) {
  if (history.observations.empty())
    throw std::invalid_argument("posterior_update: empty signal history");
  double prev = 0.0;
  for (const auto& [t, d] : history.observations) {
    if (t <= prev)
      throw std::invalid_argument("posterior_update: observation times must be strictly increasing and positive");
    if (d <= model.offset_phi)
      throw std::invalid_argument("posterior_update: amplitude at or below offset_phi");
    prev = t;
  }
  if (history.observations.back().first != history.t_o)
    throw std::invalid_argument("posterior_update: t_o must equal the last observation time");
}

}  // namespace detail

// Exact conjugate bivariate-normal posterior of (a, b) given the history.
inline ThetaPosterior posterior_update(const ThetaPrior& prior, const SignalHistory& history,
                                       const DegradationModel& model) {
  model.validate();
  if (!prior.covariance.spd())
    throw std::invalid_argument("posterior_update: prior covariance must be SPD");
  if (model.noise_sigma <= 0.0)
    throw std::invalid_argument("posterior_update: noise_sigma must be positive");
  detail::validate_history(history, model);

  double s2 = model.noise_sigma * model.noise_sigma;
  Sym2 precision = prior.covariance.inverse();
  Vec2 rhs = precision.mul(prior.mean);

  double t_prev = 0.0, y_prev = 0.0;
  bool first = true;
  for (const auto& [t, d] : history.observations) {
    double y = std::log(d - model.offset_phi);
    double dt = t - t_prev;
    double z = first ? y : y - y_prev;
    // design row of the increment: (1, t_1) for the first, (0, dt) after
    double cx = first ? 1.0 : 0.0;
    double cy = first ? t : dt;
    double w = 1.0 / (s2 * dt);
    precision.xx += w * cx * cx;
    precision.xy += w * cx * cy;
    precision.yy += w * cy * cy;
    rhs.x += w * cx * z;
    rhs.y += w * cy * z;
    t_prev = t;
    y_prev = y;
    first = false;
  }

  ThetaPosterior post;
  post.covariance = precision.inverse();
  post.mean = post.covariance.mul(rhs);
  post.conditioned_amplitude = history.observations.back().second;
  post.t_o = history.t_o;
  return post;
}

// Fraction of remaining-life samples strictly greater than t. Censored
// samples count as alive at every t, including past the horizon.
inline double survival(const RemainingLifeDistribution& rld, double t) {
  if (t < 0.0) throw std::invalid_argument("survival: t must be >= 0");
  if (rld.samples.empty()) throw std::invalid_argument("survival: empty distribution");
  double m = static_cast<double>(rld.samples.size());
  if (t >= rld.horizon) return static_cast<double>(rld.censored) / m;
  auto it = std::upper_bound(rld.samples.begin(), rld.samples.end(), t);
  return static_cast<double>(rld.samples.end() - it) / m;
}

namespace detail {

// First crossing of the log-threshold on the step grid, starting from
// log-level y0 at t_o with drift b; returns the duration past t_o, or
// `horizon` when the path stays below the threshold (censored).
inline double first_crossing(double y0, double b, double sigma, double log_thresh,
                             double horizon, double step, std::mt19937_64& rng) {
  if (y0 >= log_thresh) return 0.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  double sqrt_step = std::sqrt(step);
  double y = y0;
  std::size_t k_max = static_cast<std::size_t>(horizon / step + 1e-9);
  for (std::size_t k = 1; k <= k_max; ++k) {
    y += b * step;
    if (sigma > 0.0) y += sigma * sqrt_step * normal(rng);
    if (y >= log_thresh) return static_cast<double>(k) * step;
  }
  return horizon;
}

}  // namespace detail

// Monte-Carlo remaining-life distribution: per sample, draw theta from the
// posterior, run the signal forward from (t_o, conditioned_amplitude) with
// fresh Brownian increments, record the first grid time at or past the
// threshold. Sample i uses the substream (seed, i), so results do not depend
// on evaluation order.
inline RemainingLifeDistribution simulate_rld(const ThetaPosterior& posterior,
                                              const DegradationModel& model,
                                              std::size_t m_samples, double horizon,
                                              double step, std::uint64_t seed,
                                              unsigned workers = 1) {
  model.validate();
  if (m_samples < 1) throw std::invalid_argument("simulate_rld: m_samples must be >= 1");
  if (step <= 0.0) throw std::invalid_argument("simulate_rld: step must be > 0");
  if (horizon < step) throw std::invalid_argument("simulate_rld: horizon must be >= step");

  RemainingLifeDistribution rld;
  rld.t_o = posterior.t_o;
  rld.horizon = horizon;
  rld.step = step;
  rld.samples.assign(m_samples, 0.0);

  if (posterior.conditioned_amplitude >= model.threshold_lambda_cap) {
    rld.already_failed = true;
    return rld;
  }

  double y0 = std::log(posterior.conditioned_amplitude - model.offset_phi);
  double log_thresh = model.log_threshold();
  double l11, l21, l22;
  posterior.covariance.chol(l11, l21, l22);

  parallel_for(m_samples, workers, [&](std::size_t i) {
    auto rng = make_rng(seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    double z1 = normal(rng), z2 = normal(rng);
    double b = posterior.mean.y + l21 * z1 + l22 * z2;  // intercept draw is irrelevant
    rld.samples[i] = detail::first_crossing(y0, b, model.noise_sigma, log_thresh,
                                            horizon, step, rng);
  });

  std::sort(rld.samples.begin(), rld.samples.end());
  for (double s : rld.samples)
    if (s >= horizon) ++rld.censored;
  return rld;
}

// Ground-truth failure draw for policy simulation: one first-crossing time
// from the true parameters, measured from t_o.
inline double sample_true_failure(const DegradationModel& model, Vec2 true_theta, double t_o,
                                  double amplitude_at_to, double step, std::uint64_t seed,
                                  double horizon = 1e4) {
  model.validate();
  if (amplitude_at_to >= model.threshold_lambda_cap)
    throw std::invalid_argument("sample_true_failure: amplitude already at threshold");
  if (amplitude_at_to <= model.offset_phi)
    throw std::invalid_argument("sample_true_failure: amplitude at or below offset_phi");
  (void)t_o;  // the Brownian error is Markov, so only the level at t_o matters
  auto rng = make_rng(seed, 0);
  double y0 = std::log(amplitude_at_to - model.offset_phi);
  return detail::first_crossing(y0, true_theta.y, model.noise_sigma, model.log_threshold(),
                                horizon, step, rng);
}

}  // namespace maintroute
