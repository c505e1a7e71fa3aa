#pragma once

// Frozen calibration of the synthetic degradation environment. The slope
// prior mean was tuned by bisection until the Monte-Carlo mean lifetime from
// a fresh unit (prior parameter draw, signal started at its floor level)
// came out at ~125 time units; everything else is a fixed default.

#include "maintroute/degradation.hpp"

namespace maintroute {

inline DegradationModel calibrated_model() { return DegradationModel{0.2, 0.02, 1.0}; }

inline ThetaPrior calibrated_prior() { return ThetaPrior{{-3.0, 0.0223}, {0.04, 0.0, 1e-6}}; }

constexpr double kCalibratedMeanLifetime = 125.0;
constexpr double kDefaultSimStep = 0.25;
constexpr double kDefaultHorizon = 4.0 * kCalibratedMeanLifetime;  // censor far in the tail

inline Vec2 draw_theta(const ThetaPrior& prior, std::mt19937_64& rng) {
  double l11, l21, l22;
  prior.covariance.chol(l11, l21, l22);
  std::normal_distribution<double> normal(0.0, 1.0);
  double z1 = normal(rng), z2 = normal(rng);
  return {prior.mean.x + l11 * z1, prior.mean.y + l21 * z1 + l22 * z2};
}

// Monte-Carlo mean time to failure of a fresh unit under the prior.
inline double mean_lifetime_estimate(const DegradationModel& model, const ThetaPrior& prior,
                                     std::size_t n_units, double step, std::uint64_t seed) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_units; ++i) {
    auto rng = make_rng(seed, 2 * i);
    Vec2 theta = draw_theta(prior, rng);
    double amp0 = model.offset_phi + std::exp(theta.x);
    sum += sample_true_failure(model, theta, 0.0, amp0, step, mix_seed(seed, 2 * i + 1),
                               16.0 * kCalibratedMeanLifetime);
  }
  return sum / static_cast<double>(n_units);
}

}  // namespace maintroute
