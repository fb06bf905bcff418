#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "leotrack/common.hpp"
#include "leotrack/orbit.hpp"

namespace leo {

struct SimplexConfig {
  double initial_edge = 0.01;  // rad
  double diameter_tol = 1e-7;  // rad
  int max_iterations = 500;
};

struct SimplexResult {
  Vec3 x;
  double value = 0.0;
  int iterations = 0;
};

// Nelder-Mead over R^3, maximizing. Derivative-free on purpose: the orbit
// objective carries a |.| kink wherever the matched-filter output crosses
// zero.
inline SimplexResult nelder_mead(const std::function<double(const Vec3&)>& f,
                                 const Vec3& x0,
                                 const SimplexConfig& cfg = {}) {
  constexpr int n = 3;
  std::vector<Vec3> pts(n + 1, x0);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += cfg.initial_edge;
  std::vector<double> vals(n + 1);
  for (int i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  auto order = [&] {
    std::vector<int> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return vals[a] > vals[b]; });
    std::vector<Vec3> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    order();
    double diam = 0.0;
    for (int i = 1; i <= n; ++i)
      diam = std::max(diam, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
    if (diam < cfg.diameter_tol) break;

    const Vec3 cen = (pts[0] + pts[1] + pts[2]) / 3.0;  // excludes worst
    const Vec3 xr = cen + (cen - pts[n]);
    const double fr = f(xr);
    if (fr > vals[0]) {
      const Vec3 xe = cen + 2.0 * (cen - pts[n]);
      const double fe = f(xe);
      if (fe > fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr > vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const Vec3 xc = cen + 0.5 * (pts[n] - cen);
      const double fc = f(xc);
      if (fc > vals[n]) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  return {pts[0], vals[0], it};
}

// Multi-start wrapper: best terminal point across starts.
inline SimplexResult optimize_gamma(
    const std::function<double(const Vec3&)>& f,
    const std::vector<OrbitParams>& starts, const SimplexConfig& cfg = {}) {
  if (starts.empty()) throw ConfigError("optimize_gamma needs >= 1 start");
  SimplexResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (const OrbitParams& s : starts) {
    const SimplexResult r = nelder_mead(f, s.vec(), cfg);
    if (r.value > best.value) best = r;
  }
  return best;
}

}  // namespace leo
