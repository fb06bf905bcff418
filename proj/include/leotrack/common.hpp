#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace leo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Physical constants (SI).
inline constexpr double kMuEarth = 3.986004418e14;   // m^3/s^2
inline constexpr double kEarthRadius = 6.371e6;      // m
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

// Wrap to (-pi, pi].
inline double wrap_pi(double x) {
  double w = std::remainder(x, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

// Wrap to [0, 2*pi).
inline double wrap_2pi(double x) {
  double w = std::fmod(x, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised on invalid configuration or malformed inputs (exit code 2 in the CLI).
struct ConfigError : Error { using Error::Error; };

// Runtime estimation failures (exit code 3 in the CLI).
struct DegeneratePosition : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct BelowHorizon : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct SingularHessian : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Azimuth measured from +x toward +y, elevation from the horizon plane.
inline double azimuth_of(const Vec3& d) { return std::atan2(d.y(), d.x()); }

inline double elevation_of(const Vec3& d) {
  return std::asin(std::clamp(d.z(), -1.0, 1.0));
}

inline Vec3 direction_from_azel(double az, double el) {
  const double ce = std::cos(el);
  return {ce * std::cos(az), ce * std::sin(az), std::sin(el)};
}

// Angle between two unit vectors, degrees.
inline double angular_error(const Vec3& est, const Vec3& truth) {
  return rad2deg(std::acos(std::clamp(est.dot(truth), -1.0, 1.0)));
}

}  // namespace leo
