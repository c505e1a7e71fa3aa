#pragma once

// Small shared utilities: 2-d linear algebra for the (a, b) parameter pair,
// deterministic seed derivation for substreams, and a slot-based parallel map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace maintroute {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 u, Vec2 v) { return {u.x + v.x, u.y + v.y}; }
inline Vec2 operator-(Vec2 u, Vec2 v) { return {u.x - v.x, u.y - v.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }

// Symmetric 2x2 matrix, upper triangle storage.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det() const { return xx * yy - xy * xy; }
  bool spd() const { return xx > 0.0 && det() > 0.0; }

  Sym2 inverse() const {
    double d = det();
    if (d == 0.0) throw std::invalid_argument("Sym2::inverse: singular matrix");
    return {yy / d, -xy / d, xx / d};
  }

  Vec2 mul(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  // Lower Cholesky factor (l11, l21, l22); tolerates positive semidefinite
  // input so point-mass distributions (zero covariance) can be sampled.
  void chol(double& l11, double& l21, double& l22) const {
    l11 = xx > 0.0 ? std::sqrt(xx) : 0.0;
    l21 = l11 > 0.0 ? xy / l11 : 0.0;
    double rest = yy - l21 * l21;
    l22 = rest > 0.0 ? std::sqrt(rest) : 0.0;
  }
};

inline Sym2 operator+(Sym2 a, Sym2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy}; }

// splitmix64 finalizer; decorrelates (seed, stream) pairs into substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

// No feasible solution exists for the requested problem.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative method hit its iteration cap before reaching its gap target.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Runs fn(i) for i in [0, n) on `workers` threads in contiguous chunks.
// Callers must write only to per-index slots so results are independent of
// the worker count.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace maintroute
