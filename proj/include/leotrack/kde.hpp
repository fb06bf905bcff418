#pragma once

#include <vector>

#include "leotrack/common.hpp"
#include "leotrack/orbit.hpp"

namespace leo {

// Gaussian-kernel density over orbit parameters. beta and eta0 are angles:
// kernel differences are wrapped to (-pi, pi] so samples near 0/2pi do not
// produce spurious boundary troughs. alpha is left unwrapped.
struct KdePrior {
  std::vector<OrbitParams> samples;
  double bandwidth = 0.005;  // rad, shared across components
};

inline double kde_log_density(const OrbitParams& g, const KdePrior& prior) {
  if (prior.samples.empty()) throw ConfigError("KDE prior needs >= 1 sample");
  const double bw2 = prior.bandwidth * prior.bandwidth;
  // log of (1/N) sum_l prod_i N(g_i; sample_i, bw^2), via log-sum-exp.
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> expo(prior.samples.size());
  for (size_t l = 0; l < prior.samples.size(); ++l) {
    const OrbitParams& s = prior.samples[l];
    const double da = g.alpha - s.alpha;
    const double db = wrap_pi(g.beta - s.beta);
    const double de = wrap_pi(g.eta0 - s.eta0);
    expo[l] = -0.5 * (da * da + db * db + de * de) / bw2;
    max_e = std::max(max_e, expo[l]);
  }
  double acc = 0.0;
  for (double e : expo) acc += std::exp(e - max_e);
  return max_e + std::log(acc) -
         std::log(static_cast<double>(prior.samples.size())) -
         1.5 * std::log(kTwoPi * bw2);
}

}  // namespace leo
