#pragma once

#include <cmath>
#include <utility>

#include "leotrack/common.hpp"
#include "leotrack/rng.hpp"

namespace leo {

// Circular-orbit parameters estimated by the tracker.
struct OrbitParams {
  double alpha = 0.0;  // inclination-like rotation, radians
  double beta = 0.0;   // azimuthal rotation, radians
  double eta0 = 0.0;   // starting angle, radians

  Vec3 vec() const { return {alpha, beta, eta0}; }
  static OrbitParams from_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

// Shared constants of the orbit model: circle radius, angular rate, and the
// ground-station offset from the circle center along local zenith.
struct OrbitConstants {
  double radius_R = 0.0;  // m
  double omega = 0.0;     // rad/s
  double h_e = kEarthRadius;  // m
};

// Mean motion of a circular orbit at the given altitude.
inline double kepler_omega(double altitude_m) {
  const double R = kEarthRadius + altitude_m;
  return std::sqrt(kMuEarth / (R * R * R));
}

inline OrbitConstants orbit_constants_for_altitude(double altitude_m) {
  return {kEarthRadius + altitude_m, kepler_omega(altitude_m), kEarthRadius};
}

// u spans the orbit plane's horizontal node line, v completes it; both have
// length R and are orthogonal for every (alpha, beta).
inline std::pair<Vec3, Vec3> basis_vectors(const OrbitParams& g,
                                           const OrbitConstants& c) {
  const double sa = std::sin(g.alpha), ca = std::cos(g.alpha);
  const double sb = std::sin(g.beta), cb = std::cos(g.beta);
  Vec3 u{-sb, cb, 0.0};
  Vec3 v{-ca * cb, -ca * sb, sa};
  return {c.radius_R * u, c.radius_R * v};
}

// Satellite position in the ground-station frame (z to zenith).
inline Vec3 position(double t, const OrbitParams& g, const OrbitConstants& c) {
  const auto [u, v] = basis_vectors(g, c);
  const double ph = c.omega * t - g.eta0;
  return u * std::cos(ph) + v * std::sin(ph) - Vec3{0.0, 0.0, c.h_e};
}

// Unit direction from the ground station to the satellite.
inline Vec3 direction(double t, const OrbitParams& g, const OrbitConstants& c) {
  const Vec3 p = position(t, g, c);
  const double n = p.norm();
  if (n < 1.0)
    throw DegeneratePosition("satellite position within 1 m of the station");
  return p / n;
}

// Finite-difference rate of the direction's polar angle; negative = rising.
inline double polar_rate(double t, const OrbitParams& g,
                         const OrbitConstants& c, double dt = 1.0) {
  const double th0 = std::acos(std::clamp(direction(t, g, c).z(), -1.0, 1.0));
  const double th1 =
      std::acos(std::clamp(direction(t + dt, g, c).z(), -1.0, 1.0));
  return (th1 - th0) / dt;
}

inline bool is_visible(double t, const OrbitParams& g,
                       const OrbitConstants& c) {
  return position(t, g, c).z() > 0.0;
}

// Prior over orbit parameters: alpha ~ U(1.25, 1.87), beta, eta0 ~ U(0, 2pi).
inline constexpr double kAlphaLo = 1.25;
inline constexpr double kAlphaHi = 1.87;

inline OrbitParams sample_prior(Rng& rng) {
  OrbitParams g;
  g.alpha = rng.uniform(kAlphaLo, kAlphaHi);
  g.beta = rng.uniform(0.0, kTwoPi);
  g.eta0 = rng.uniform(0.0, kTwoPi);
  return g;
}

}  // namespace leo
