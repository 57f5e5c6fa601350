#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace flowridge {

inline constexpr const char* kVersion = "0.1.0";

/// Tuning grid of `count` points equally spaced on the log scale over
/// [lo, hi].  When lo*hi == 1 the grid is built symmetrically so that
/// grid[k] * grid[count-1-k] == 1 up to one rounding each, which keeps the
/// lambda = 1/t pairing exact under CSV round-trips.
inline std::vector<double> log_spaced_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2)
    throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> g(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  if (lo * hi == 1.0) {
    for (std::size_t k = 0; k < (count + 1) / 2; ++k) {
      const double u = llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(count - 1);
      g[k] = std::exp(u);
      g[count - 1 - k] = 1.0 / g[k];
    }
    return g;
  }
  for (std::size_t k = 0; k < count; ++k)
    g[k] = std::exp(llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline std::vector<double> default_tuning_grid() {
  return log_spaced_grid(std::pow(2.0, -10), std::pow(2.0, 10), 200);
}

/// Golden-section minimization on [lo, hi], assuming unimodality there.
/// Terminates when the bracket has relative width <= rel_tol.
template <class F>
double golden_section_minimize(F&& f, double lo, double hi, double rel_tol = 1e-8,
                               int max_iter = 400) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > rel_tol * (std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - (b - a) * inv_phi;
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + (b - a) * inv_phi;
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Coarse scan over `grid` followed by golden-section refinement between the
/// neighbors of the grid argmin.  Search runs on the log scale; the grid must
/// be positive and ascending.
template <class F>
double grid_then_golden_minimize(F&& f, std::span<const double> grid, double rel_tol = 1e-6) {
  if (grid.empty()) throw std::invalid_argument("grid_then_golden_minimize: empty grid");
  std::size_t best = 0;
  double fbest = f(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double fk = f(grid[k]);
    if (fk < fbest) { fbest = fk; best = k; }
  }
  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  if (!(hi > lo)) return grid[best];
  auto g = [&](double u) { return f(std::exp(u)); };
  const double u = golden_section_minimize(g, std::log(lo), std::log(hi), rel_tol);
  const double x = std::exp(u);
  return f(x) <= fbest ? x : grid[best];
}

/// Solves f(x) = target for monotone nonincreasing f by bisection on the log
/// scale.  The bracket [lo, hi] is expanded geometrically until it straddles
/// the target.  Returns the midpoint once |f(x) - target| <= rel_tol*target
/// or the bracket is exhausted; `ok` reports whether the match was reached.
struct MonotoneSolveResult {
  double x = 0.0;
  bool ok = false;
};

template <class F>
MonotoneSolveResult bisect_decreasing(F&& f, double target, double lo, double hi,
                                      double rel_tol = 1e-10, int max_iter = 400) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("bisect_decreasing: bad bracket");
  int guard = 0;
  while (f(lo) < target && guard++ < 80) lo *= 0.25;
  guard = 0;
  while (f(hi) > target && guard++ < 80) hi *= 4.0;
  if (f(lo) < target || f(hi) > target) return {0.0, false};
  double a = std::log(lo), b = std::log(hi);
  double x = std::exp(0.5 * (a + b));
  for (int i = 0; i < max_iter; ++i) {
    x = std::exp(0.5 * (a + b));
    const double fx = f(x);
    if (std::abs(fx - target) <= rel_tol * std::max(std::abs(target), 1e-300)) return {x, true};
    (fx > target ? a : b) = std::log(x);
  }
  return {x, std::abs(f(x) - target) <= rel_tol * std::max(std::abs(target), 1e-300)};
}

namespace detail {

inline double simpson_segment(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_segment(a, fa, m, fm, flm);
  const double right = simpson_segment(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-8, int max_depth = 40) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = detail::simpson_segment(a, fa, b, fb, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

/// Quadrature of a decaying integrand over [0, b]: the range is split into
/// dyadic panels [0,1], [1,2], [2,4], ... so that a bump near the origin is
/// never skipped over by the first Simpson samples of a long interval.
template <class F>
double integrate_decaying(F&& f, double b, double tol = 1e-8) {
  if (!(b > 0.0)) return 0.0;
  double total = 0.0;
  double lo = 0.0, hi = std::min(1.0, b);
  const double panel_tol = tol / (10.0 + std::max(0.0, std::log2(std::max(b, 1.0))));
  while (true) {
    total += adaptive_simpson(f, lo, hi, panel_tol);
    if (hi >= b) break;
    lo = hi;
    hi = std::min(2.0 * hi, b);
  }
  return total;
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial recurrence.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

/// Pairwise (cascade) summation; the reduction result is independent of any
/// batching of the inputs.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

/// SplitMix64 step; used to derive independent substream seeds from a master
/// seed (substream k of seed s is splitmix64(s + k + 1)).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + index + 1);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers.  Tasks must be
/// independent; results must not depend on the worker assignment.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, std::thread::hardware_concurrency() ? std::thread::hardware_concurrency() : 1u));
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace flowridge
