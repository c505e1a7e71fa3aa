#pragma once

// Grid-quadrature Bayes oracle for the log-linear degradation model.
//
// Evaluates the exact Gaussian likelihood of the raw log-amplitudes with the
// dense Brownian covariance K_ij = sigma^2 * min(t_i, t_j) via a generic
// Cholesky solve, multiplies by the bivariate-normal prior on an (a, b)
// grid, and integrates moments with trapezoid weights. This is deliberately
// a different computational path from the library's whitened conjugate
// update; agreement validates both.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "maintroute/degradation.hpp"

namespace testsupport {

struct GridPosterior {
  maintroute::Vec2 mean;
  maintroute::Sym2 covariance;
};

// Lower Cholesky factor of a dense SPD matrix (row-major m x m).
inline std::vector<double> chol_dense(std::vector<double> k, int m) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = k[i * m + j];
      for (int q = 0; q < j; ++q) s -= k[i * m + q] * k[j * m + q];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("chol_dense: matrix not SPD");
        k[i * m + j] = std::sqrt(s);
      } else {
        k[i * m + j] = s / k[j * m + j];
      }
    }
    for (int j = i + 1; j < m; ++j) k[i * m + j] = 0.0;
  }
  return k;
}

inline GridPosterior grid_bayes_posterior(const maintroute::ThetaPrior& prior,
                                          const maintroute::SignalHistory& history,
                                          const maintroute::DegradationModel& model,
                                          int n_grid = 400, double span_sigmas = 6.0) {
  using maintroute::Vec2;
  const int m = static_cast<int>(history.observations.size());
  std::vector<double> times(m), ys(m);
  for (int i = 0; i < m; ++i) {
    times[i] = history.observations[i].first;
    ys[i] = std::log(history.observations[i].second - model.offset_phi);
  }

  double s2 = model.noise_sigma * model.noise_sigma;
  std::vector<double> cov(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) cov[i * m + j] = s2 * std::min(times[i], times[j]);
  std::vector<double> chol = chol_dense(cov, m);
  double logdet_half = 0.0;
  for (int i = 0; i < m; ++i) logdet_half += std::log(chol[i * m + i]);

  auto loglik = [&](double a, double b) {
    // forward-substitute L w = r, then ||w||^2 = r^T K^{-1} r
    std::vector<double> w(m);
    double quad = 0.0;
    for (int i = 0; i < m; ++i) {
      double s = ys[i] - (a + b * times[i]);
      for (int q = 0; q < i; ++q) s -= chol[i * m + q] * w[q];
      w[i] = s / chol[i * m + i];
      quad += w[i] * w[i];
    }
    return -0.5 * quad - logdet_half;
  };

  maintroute::Sym2 prior_prec = prior.covariance.inverse();
  auto logprior = [&](double a, double b) {
    Vec2 r{a - prior.mean.x, b - prior.mean.y};
    return -0.5 * dot(r, prior_prec.mul(r));
  };

  double sa = std::sqrt(prior.covariance.xx), sb = std::sqrt(prior.covariance.yy);
  double a_lo = prior.mean.x - span_sigmas * sa, a_hi = prior.mean.x + span_sigmas * sa;
  double b_lo = prior.mean.y - span_sigmas * sb, b_hi = prior.mean.y + span_sigmas * sb;
  double da = (a_hi - a_lo) / (n_grid - 1), db = (b_hi - b_lo) / (n_grid - 1);

  std::vector<double> logw(static_cast<std::size_t>(n_grid) * n_grid);
  double logmax = -1e300;
  for (int i = 0; i < n_grid; ++i) {
    double a = a_lo + i * da;
    for (int j = 0; j < n_grid; ++j) {
      double b = b_lo + j * db;
      double lw = logprior(a, b) + loglik(a, b);
      logw[static_cast<std::size_t>(i) * n_grid + j] = lw;
      if (lw > logmax) logmax = lw;
    }
  }

  double z = 0.0, ma = 0.0, mb = 0.0;
  auto edge = [&](int i) { return (i == 0 || i == n_grid - 1) ? 0.5 : 1.0; };
  for (int i = 0; i < n_grid; ++i) {
    double a = a_lo + i * da;
    for (int j = 0; j < n_grid; ++j) {
      double b = b_lo + j * db;
      double w = edge(i) * edge(j) * std::exp(logw[static_cast<std::size_t>(i) * n_grid + j] - logmax);
      z += w;
      ma += w * a;
      mb += w * b;
    }
  }
  ma /= z;
  mb /= z;

  double caa = 0.0, cab = 0.0, cbb = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    double a = a_lo + i * da;
    for (int j = 0; j < n_grid; ++j) {
      double b = b_lo + j * db;
      double w = edge(i) * edge(j) * std::exp(logw[static_cast<std::size_t>(i) * n_grid + j] - logmax);
      caa += w * (a - ma) * (a - ma);
      cab += w * (a - ma) * (b - mb);
      cbb += w * (b - mb) * (b - mb);
    }
  }

  GridPosterior g;
  g.mean = {ma, mb};
  g.covariance = {caa / z, cab / z, cbb / z};
  return g;
}

// Simulates a signal path from true theta on the observation grid and
// packages it as a history; shared by several test suites.
inline maintroute::SignalHistory make_history(const maintroute::DegradationModel& model,
                                              maintroute::Vec2 true_theta,
                                              const std::vector<double>& times,
                                              std::mt19937_64& rng) {
  maintroute::SignalHistory h;
  std::normal_distribution<double> normal(0.0, 1.0);
  double y = true_theta.x, t_prev = 0.0;
  for (double t : times) {
    double dt = t - t_prev;
    y += true_theta.y * dt;
    if (model.noise_sigma > 0.0) y += model.noise_sigma * std::sqrt(dt) * normal(rng);
    h.observations.emplace_back(t, model.offset_phi + std::exp(y));
    t_prev = t;
  }
  h.t_o = times.back();
  return h;
}

}  // namespace testsupport
