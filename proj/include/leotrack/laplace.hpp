#pragma once

#include <functional>

#include "leotrack/common.hpp"

namespace leo {

inline constexpr double kHessianStep = 1e-4;  // rad
inline constexpr double kEigenvalueFloor = 1e-12;
inline constexpr double kMaxCondition = 1e14;

// Central-difference Hessian, symmetrized.
inline Mat3 numeric_hessian(const std::function<double(const Vec3&)>& f,
                            const Vec3& x, double step = kHessianStep) {
  Mat3 H;
  const double f0 = f(x);
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    H(i, i) = (f(hi) - 2.0 * f0 + f(lo)) / (step * step);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      Vec3 pp = x, pm = x, mp = x, mm = x;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return 0.5 * (H + H.transpose());
}

// Laplace covariance at a mode: [-H]^(-1), with an eigenvalue floor applied
// to -H when the numerical Hessian is not negative definite (flat or noisy
// directions of the objective).
inline Mat3 laplace_covariance(const std::function<double(const Vec3&)>& f,
                               const Vec3& mode, double step = kHessianStep) {
  const Mat3 neg_h = -numeric_hessian(f, mode, step);
  Eigen::SelfAdjointEigenSolver<Mat3> es(neg_h);
  Vec3 ev = es.eigenvalues();
  for (int i = 0; i < 3; ++i) ev[i] = std::max(ev[i], kEigenvalueFloor);
  if (ev.maxCoeff() / ev.minCoeff() > kMaxCondition)
    throw SingularHessian("objective Hessian condition number exceeds 1e14");
  const Mat3 cov = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose());
}

// Chi-square CDF with 3 degrees of freedom (closed form).
inline double chi2_cdf_3(double x) {
  if (x <= 0.0) return 0.0;
  return std::erf(std::sqrt(0.5 * x)) -
         std::sqrt(2.0 / kPi) * std::sqrt(x) * std::exp(-0.5 * x);
}

// Quantile by bisection; used for the 95% CI Mahalanobis gate.
inline double chi2_quantile_3(double level) {
  if (level <= 0.0 || level >= 1.0) throw ConfigError("level must be in (0,1)");
  double lo = 0.0, hi = 1.0;
  while (chi2_cdf_3(hi) < level) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf_3(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace leo
