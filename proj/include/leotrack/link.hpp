#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "leotrack/array.hpp"
#include "leotrack/common.hpp"
#include "leotrack/orbit.hpp"
#include "leotrack/rng.hpp"

namespace leo {

// (elevation degrees, attenuation dB) knots, elevation ascending.
using AtmosTable = std::vector<std::pair<double, double>>;

// Slant-path attenuation for 28 GHz at 0.01% exceedance; coarse but
// monotone, and replaceable through the scenario config.
inline AtmosTable default_atmos_table() {
  return {{0.0, 20.0}, {5.0, 10.0}, {10.0, 6.0}, {20.0, 3.5},
          {30.0, 2.5}, {45.0, 1.8}, {60.0, 1.4}, {90.0, 1.0}};
}

struct LinkBudget {
  double tx_power_W = 5.0;
  double carrier_freq_hz = 28e9;
  // 32x32 transmit array assumed perfectly pointed: 10*log10(1024) array
  // factor plus the per-element gain.
  double tx_gain_db = 30.102999566398119 + 5.46;
  double rx_element_gain_db = 5.46;
  AtmosTable atmos_table = default_atmos_table();
  double exceedance_p = 1e-4;
};

inline double fspl_db(double distance_m, double freq_hz) {
  return 20.0 *
         std::log10(4.0 * kPi * distance_m * freq_hz / kSpeedOfLight);
}

// Piecewise-linear interpolation with constant extrapolation at the ends.
inline double atmos_db(double elevation_deg, const LinkBudget& budget) {
  const AtmosTable& tab = budget.atmos_table;
  if (tab.empty()) throw ConfigError("empty attenuation table");
  for (size_t i = 1; i < tab.size(); ++i)
    if (tab[i].first <= tab[i - 1].first)
      throw ConfigError("attenuation table elevations not ascending");
  if (elevation_deg <= tab.front().first) return tab.front().second;
  if (elevation_deg >= tab.back().first) return tab.back().second;
  for (size_t i = 1; i < tab.size(); ++i) {
    if (elevation_deg <= tab[i].first) {
      const auto [e0, a0] = tab[i - 1];
      const auto [e1, a1] = tab[i];
      const double w = (elevation_deg - e0) / (e1 - e0);
      return a0 + w * (a1 - a0);
    }
  }
  return tab.back().second;
}

// Deterministic channel amplitude: path loss, atmosphere, and the fixed
// tx/rx gains. The receive array gain arises from combining, not here.
inline double channel_amplitude(double t, const OrbitParams& g,
                                const OrbitConstants& oc,
                                const LinkBudget& budget) {
  const Vec3 p = position(t, g, oc);
  if (p.z() <= 0.0) throw BelowHorizon("satellite below horizon");
  const double dist = p.norm();
  const double elev = rad2deg(std::asin(p.z() / dist));
  const double gain_db = budget.tx_gain_db + budget.rx_element_gain_db -
                         fspl_db(dist, budget.carrier_freq_hz) -
                         atmos_db(elev, budget);
  return std::pow(10.0, gain_db / 20.0) * std::sqrt(budget.tx_power_W);
}

struct ChannelDraw {
  double rho = 0.0;  // linear amplitude
  double chi = 0.0;  // phase, [0, 2pi)
  cplx h;
};

inline ChannelDraw draw_channel(double t, const OrbitParams& g,
                                const OrbitConstants& oc,
                                const LinkBudget& budget, Rng& rng) {
  ChannelDraw d;
  d.rho = channel_amplitude(t, g, oc, budget);
  d.chi = rng.uniform(0.0, kTwoPi);
  d.h = std::polar(d.rho, d.chi);
  return d;
}

// Noise precision gamma_v realizing the target per-sample post-combining SNR
// at t = 0 with pointing matched to the true direction:
//   SNR = |h0|^2 ||x0||^2 / (M*N_s / gamma_v).
inline double noise_precision_for_snr(double snr_db, const OrbitParams& g,
                                      const OrbitConstants& oc,
                                      const LinkBudget& budget,
                                      const HybridConfig& hybrid,
                                      const CVec& s) {
  const Vec3 d0 = direction(0.0, g, oc);
  if (position(0.0, g, oc).z() <= 0.0)
    throw BelowHorizon("satellite below horizon at t=0");
  const double rho = channel_amplitude(0.0, g, oc, budget);
  const double x2 = beamformed_template(d0, d0, hybrid, s).squaredNorm();
  const double sig = rho * rho * x2;
  if (sig <= 0.0) throw ConfigError("zero signal power at t=0");
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  const double n = static_cast<double>(hybrid.num_subarrays()) * s.size();
  return snr_lin * n / sig;
}

}  // namespace leo
