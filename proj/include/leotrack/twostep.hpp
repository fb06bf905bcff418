#pragma once

#include <vector>

#include "leotrack/array.hpp"
#include "leotrack/common.hpp"
#include "leotrack/signal.hpp"

namespace leo {

struct MusicConfig {
  double half_width_deg = 1.25;   // 2.5 degree window total
  double resolution_deg = 0.05;
  int signal_dim = 1;
};

// MUSIC on the per-subarray outputs of one frame: the N_s pilot samples are
// the snapshots, the sample covariance is M x M, and the pseudospectrum is
// scanned over an az/el grid centered on the predicted AoA using the
// effective (combined) subarray response.
inline Vec3 music_estimate(const SignalFrame& frame, const Vec3& predicted_aoa,
                           const HybridConfig& hybrid,
                           const MusicConfig& cfg = {}) {
  const int m = hybrid.num_subarrays();
  const Eigen::Index ns = frame.y.size() / m;
  if (ns < 2) throw RankDeficient("MUSIC needs >= 2 snapshots");
  CMat snaps(m, ns);
  for (int i = 0; i < m; ++i)
    snaps.row(i) = frame.y.segment(i * ns, ns).transpose();
  const CMat cov = (snaps * snaps.adjoint()) / static_cast<double>(ns);

  Eigen::SelfAdjointEigenSolver<CMat> es(cov);
  // Signal subspace: `signal_dim` largest eigenvectors (Eigen sorts
  // ascending). The pseudospectrum denominator uses
  // ||E_n^H a||^2 = ||a||^2 - ||E_s^H a||^2.
  const CMat e_sig = es.eigenvectors().rightCols(cfg.signal_dim);

  const double az0 = azimuth_of(predicted_aoa);
  const double el0 = elevation_of(predicted_aoa);
  const double half = deg2rad(cfg.half_width_deg);
  const double step = deg2rad(cfg.resolution_deg);
  const int n_steps = static_cast<int>(std::round(2.0 * half / step));

  double best = -1.0;
  Vec3 best_dir = predicted_aoa;
  for (int i = 0; i <= n_steps; ++i) {
    const double az = az0 - half + i * step;
    for (int j = 0; j <= n_steps; ++j) {
      const double el =
          std::clamp(el0 - half + j * step, -0.5 * kPi, 0.5 * kPi);
      const Vec3 d = direction_from_azel(az, el);
      const CVec a = effective_response(d, frame.pointing, hybrid);
      const double denom =
          std::max(a.squaredNorm() - (e_sig.adjoint() * a).squaredNorm(),
                   1e-30);
      const double p = 1.0 / denom;
      if (p > best) {
        best = p;
        best_dir = d;
      }
    }
  }
  return best_dir;
}

// Constant-velocity Kalman filter over (azimuth, elevation).
struct KalmanState {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();  // az, el, az rate, el rate
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
  double process_noise = 1e-8;  // rad^2/s^3 white-acceleration intensity
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * 7.6e-7;

  Vec3 direction() const { return direction_from_azel(x[0], x[1]); }
};

inline KalmanState kf_init(const Vec3& aoa0, double angle_sigma_rad,
                           double rate_sigma_rad_s,
                           double process_noise = 1e-8,
                           double meas_sigma_rad = deg2rad(0.05)) {
  KalmanState s;
  s.x << azimuth_of(aoa0), elevation_of(aoa0), 0.0, 0.0;
  s.P.setZero();
  s.P(0, 0) = s.P(1, 1) = angle_sigma_rad * angle_sigma_rad;
  s.P(2, 2) = s.P(3, 3) = rate_sigma_rad_s * rate_sigma_rad_s;
  s.process_noise = process_noise;
  s.R = Eigen::Matrix2d::Identity() * (meas_sigma_rad * meas_sigma_rad);
  return s;
}

inline KalmanState kf_predict(const KalmanState& s, double dt) {
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = F(1, 3) = dt;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  const double q = s.process_noise;
  const double d3 = dt * dt * dt / 3.0, d2 = dt * dt / 2.0;
  for (int i : {0, 1}) {
    Q(i, i) = q * d3;
    Q(i, i + 2) = Q(i + 2, i) = q * d2;
    Q(i + 2, i + 2) = q * dt;
  }
  KalmanState out = s;
  out.x = F * s.x;
  out.x[0] = wrap_pi(out.x[0]);
  out.P = F * s.P * F.transpose() + Q;
  return out;
}

inline KalmanState kf_update(const KalmanState& s, const Vec3& measured_aoa) {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1.0;
  Eigen::Vector2d innov{wrap_pi(azimuth_of(measured_aoa) - s.x[0]),
                        elevation_of(measured_aoa) - s.x[1]};
  const Eigen::Matrix2d S = H * s.P * H.transpose() + s.R;
  const Eigen::Matrix<double, 4, 2> K = s.P * H.transpose() * S.inverse();
  KalmanState out = s;
  out.x = s.x + K * innov;
  out.x[0] = wrap_pi(out.x[0]);
  // Joseph form keeps P symmetric positive definite.
  const Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * H;
  out.P = IKH * s.P * IKH.transpose() + K * s.R * K.transpose();
  return out;
}

// MUSIC measurements fused by the Kalman filter; pointing follows the
// prediction (the closed loop lives in the harness, which synthesizes each
// frame with the pointing this tracker requested).
class TwoStepTracker {
 public:
  TwoStepTracker(const HybridConfig& hybrid, MusicConfig music,
                 const Vec3& initial_aoa,
                 double init_angle_sigma_rad = deg2rad(2.0),
                 double init_rate_sigma_rad_s = deg2rad(0.5),
                 double process_noise = 1e-8)
      : hybrid_(hybrid),
        music_(music),
        kf_(kf_init(initial_aoa, init_angle_sigma_rad, init_rate_sigma_rad_s,
                    process_noise, deg2rad(music.resolution_deg))),
        last_t_(0.0) {}

  // Pointing/search center for a frame at time t.
  Vec3 predict(double t) const {
    return kf_predict(kf_, t - last_t_).direction();
  }

  void step(const SignalFrame& frame) {
    kf_ = kf_predict(kf_, frame.t - last_t_);
    last_t_ = frame.t;
    const Vec3 meas =
        music_estimate(frame, kf_.direction(), hybrid_, music_);
    kf_ = kf_update(kf_, meas);
  }

  const KalmanState& state() const { return kf_; }
  Vec3 estimate() const { return kf_.direction(); }

 private:
  HybridConfig hybrid_;
  MusicConfig music_;
  KalmanState kf_;
  double last_t_;
};

}  // namespace leo
