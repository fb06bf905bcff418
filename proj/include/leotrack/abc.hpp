#pragma once

#include <algorithm>
#include <vector>

#include "leotrack/common.hpp"
#include "leotrack/orbit.hpp"
#include "leotrack/rng.hpp"

namespace leo {

struct AbcConfig {
  int n_samp = 2000;
  long max_trials = 1000000;
  double dt_visibility = 20.0;  // s, look-ahead for the visibility test
  double dt_rate = 1.0;         // s, finite-difference step for the rising test
};

struct AbcSample {
  OrbitParams gamma;
  double fitness = 0.0;  // t=0 direction dotted with the initial AoA
};

// Rejection/ranking sampler for p(Gamma | initial AoA): draw from the prior,
// keep candidates visible at dt and rising at t=0, rank by direction fitness,
// return the n_samp best (fitness descending).
inline std::vector<AbcSample> abc_sample(const Vec3& initial_aoa,
                                         const OrbitConstants& oc,
                                         const AbcConfig& cfg, Rng& rng) {
  std::vector<AbcSample> accepted;
  for (long trial = 0; trial < cfg.max_trials; ++trial) {
    const OrbitParams g = sample_prior(rng);
    if (!is_visible(cfg.dt_visibility, g, oc)) continue;
    if (polar_rate(0.0, g, oc, cfg.dt_rate) >= 0.0) continue;
    accepted.push_back({g, direction(0.0, g, oc).dot(initial_aoa)});
  }
  if (static_cast<int>(accepted.size()) < cfg.n_samp)
    throw InsufficientSamples("ABC accepted " +
                              std::to_string(accepted.size()) + " of " +
                              std::to_string(cfg.n_samp) + " requested");
  std::partial_sort(accepted.begin(), accepted.begin() + cfg.n_samp,
                    accepted.end(), [](const AbcSample& a, const AbcSample& b) {
                      return a.fitness > b.fitness;
                    });
  accepted.resize(cfg.n_samp);
  return accepted;
}

}  // namespace leo
