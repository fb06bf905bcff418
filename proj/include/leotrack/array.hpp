#pragma once

#include <vector>

#include "leotrack/common.hpp"
#include "leotrack/orbit.hpp"

namespace leo {

// A lambda/2-spaced uniform planar array slab.
struct UpaConfig {
  int rows = 4;
  int cols = 4;
  double spacing = 0.5;          // wavelengths, fixed
  double element_gain_db = 5.46;  // applied in the link budget, not here
};

// Partially-connected hybrid architecture: a grid of sub_rows x sub_cols
// subarrays (one RF chain each), every subarray an elem_rows x elem_cols UPA.
struct HybridConfig {
  int sub_rows = 8;
  int sub_cols = 8;
  int elem_rows = 4;
  int elem_cols = 4;
  double carrier_freq_hz = 28e9;

  int num_subarrays() const { return sub_rows * sub_cols; }
  int subarray_size() const { return elem_rows * elem_cols; }
  UpaConfig subarray_upa() const { return {elem_rows, elem_cols}; }
};

// Half-wavelength steering vector; element (p, q) -> exp(j*pi*(p*ux + q*uy)),
// row-major.
inline CVec steering_vector(const Vec3& d, const UpaConfig& upa) {
  CVec a(static_cast<Eigen::Index>(upa.rows) * upa.cols);
  for (int p = 0; p < upa.rows; ++p) {
    for (int q = 0; q < upa.cols; ++q) {
      const double ph = kPi * (p * d.x() + q * d.y());
      a[p * upa.cols + q] = std::polar(1.0, ph);
    }
  }
  return a;
}

// Phase of subarray m relative to subarray 0, from the phase-center offset in
// element-spacing units. Periodic in ux (and uy) with period 2/elem_rows:
// the source of the grating ambiguity.
inline cplx subarray_phase_factor(const Vec3& d, int m,
                                  const HybridConfig& h) {
  if (m < 0 || m >= h.num_subarrays())
    throw IndexOutOfRange("subarray index out of range");
  const int r = m / h.sub_cols;
  const int c = m % h.sub_cols;
  const double dp = static_cast<double>(r) * h.elem_rows;
  const double dq = static_cast<double>(c) * h.elem_cols;
  return std::polar(1.0, kPi * (dp * d.x() + dq * d.y()));
}

// Fixed-amplitude analog weights: each subarray steered toward `pointing`.
inline std::vector<CVec> combining_weights(const Vec3& pointing,
                                           const HybridConfig& h) {
  const CVec b = steering_vector(pointing, h.subarray_upa());
  return std::vector<CVec>(static_cast<size_t>(h.num_subarrays()), b);
}

namespace detail {

// N-element uniform linear array factor sum_{i=0}^{n-1} exp(j*pi*i*delta).
inline cplx ula_factor(double delta, int n) {
  cplx acc(0.0, 0.0);
  for (int i = 0; i < n; ++i) acc += std::polar(1.0, kPi * i * delta);
  return acc;
}

}  // namespace detail

// Per-subarray complex response g_m = (b^m)^H a^m(d) f^m(d). The combined
// inner product separates into row/column ULA factors of the direction-cosine
// offsets from the pointing.
inline CVec effective_response(const Vec3& d, const Vec3& pointing,
                               const HybridConfig& h) {
  const double dx = d.x() - pointing.x();
  const double dy = d.y() - pointing.y();
  const cplx env = detail::ula_factor(dx, h.elem_rows) *
                   detail::ula_factor(dy, h.elem_cols);
  CVec g(h.num_subarrays());
  for (int r = 0; r < h.sub_rows; ++r) {
    for (int c = 0; c < h.sub_cols; ++c) {
      const double ph =
          kPi * (r * h.elem_rows * d.x() + c * h.elem_cols * d.y());
      g[r * h.sub_cols + c] = env * std::polar(1.0, ph);
    }
  }
  return g;
}

// Noiseless frame template x = kron(g, s), subarray-major.
inline CVec beamformed_template(const Vec3& d, const Vec3& pointing,
                                const HybridConfig& h, const CVec& s) {
  const CVec g = effective_response(d, pointing, h);
  const Eigen::Index ns = s.size();
  CVec x(g.size() * ns);
  for (Eigen::Index m = 0; m < g.size(); ++m) x.segment(m * ns, ns) = g[m] * s;
  return x;
}

inline CVec template_of_gamma(double t, const OrbitParams& g,
                              const OrbitConstants& oc, const Vec3& pointing,
                              const HybridConfig& h, const CVec& s) {
  return beamformed_template(direction(t, g, oc), pointing, h, s);
}

inline constexpr double kGradStep = 1e-5;  // rad, central differences

// d(effective_response)/d(alpha, beta, eta0), columns in Gamma order.
inline CMat effective_response_gradient(double t, const OrbitParams& g,
                                        const OrbitConstants& oc,
                                        const Vec3& pointing,
                                        const HybridConfig& h,
                                        double step = kGradStep) {
  CMat J(h.num_subarrays(), 3);
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = g.vec(), lo = g.vec();
    hi[i] += step;
    lo[i] -= step;
    const CVec gp =
        effective_response(direction(t, OrbitParams::from_vec(hi), oc),
                           pointing, h);
    const CVec gm =
        effective_response(direction(t, OrbitParams::from_vec(lo), oc),
                           pointing, h);
    J.col(i) = (gp - gm) / (2.0 * step);
  }
  return J;
}

// Gradient of the stacked template; kron structure reused from the
// effective-response gradient.
inline CMat template_gradient(double t, const OrbitParams& g,
                              const OrbitConstants& oc, const Vec3& pointing,
                              const HybridConfig& h, const CVec& s,
                              double step = kGradStep) {
  const CMat Jg = effective_response_gradient(t, g, oc, pointing, h, step);
  const Eigen::Index ns = s.size();
  CMat J(Jg.rows() * ns, 3);
  for (int i = 0; i < 3; ++i)
    for (Eigen::Index m = 0; m < Jg.rows(); ++m)
      J.col(i).segment(m * ns, ns) = Jg(m, i) * s;
  return J;
}

}  // namespace leo
