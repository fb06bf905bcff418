#include <catch2/catch_amalgamated.hpp>

#include "leotrack/link.hpp"
#include "leotrack/twostep.hpp"

using namespace leo;

namespace {
const OrbitConstants kOc = orbit_constants_for_altitude(550e3);
const HybridConfig kHybrid;
const OrbitParams kTruth{1.45, 0.8, 5.03};

Vec3 dir_from_cosines(double ux, double uy) {
  return {ux, uy, std::sqrt(std::max(0.0, 1.0 - ux * ux - uy * uy))};
}

SignalFrame frame_from_direction(const Vec3& d, const Vec3& pointing,
                                 const CVec& s, double gamma_v, Rng& rng) {
  SignalFrame f;
  f.t = 0.0;
  f.pointing = pointing;
  const CVec x = beamformed_template(d, pointing, kHybrid, s);
  f.y = std::polar(1.0, rng.uniform(0.0, kTwoPi)) * x +
        detail::white_noise(x.size(), gamma_v, rng);
  return f;
}
}  // namespace

TEST_CASE("MUSIC: near-noiseless source recovered to grid resolution") {
  const CVec s = zadoff_chu(63, 29);
  Rng rng(4001);
  const Vec3 d = dir_from_cosines(0.12, -0.33);
  const SignalFrame f = frame_from_direction(d, d, s, 1e12, rng);

  // prediction offset by ~0.4 degrees: still inside the search window
  const Vec3 predicted = direction_from_azel(azimuth_of(d) + deg2rad(0.4),
                                             elevation_of(d) - deg2rad(0.3));
  const Vec3 est = music_estimate(f, predicted, kHybrid);
  // one 0.05 degree grid cell of slack in each axis
  CHECK(angular_error(est, d) < 0.08);
}

TEST_CASE("MUSIC: truth outside the search window cannot be returned") {
  const CVec s = zadoff_chu(63, 29);
  Rng rng(4002);
  // ~45 degrees elevation, so azimuth offsets translate ~0.7x into angle
  const Vec3 d = dir_from_cosines(0.6, 0.37);
  const SignalFrame f = frame_from_direction(d, d, s, 1e12, rng);

  const Vec3 predicted = direction_from_azel(azimuth_of(d) + deg2rad(3.0),
                                             elevation_of(d));
  const Vec3 est = music_estimate(f, predicted, kHybrid);
  CHECK(angular_error(est, d) > 0.5);          // cannot recover the truth
  CHECK(angular_error(est, predicted) < 2.0);  // stays within the window
}

TEST_CASE("MUSIC: grating twin is indistinguishable at the midpoint") {
  const CVec s = zadoff_chu(63, 29);
  Rng rng(4003);
  const Vec3 d1 = dir_from_cosines(-0.25, 0.10);  // transmitting satellite
  const Vec3 d2 = dir_from_cosines(0.25, 0.10);   // half-period twin
  const Vec3 mid = dir_from_cosines(0.0, 0.10);

  const SignalFrame f = frame_from_direction(d1, mid, s, 1e12, rng);

  // a tracker whose prediction sits near the twin locks onto the twin
  const Vec3 predicted = direction_from_azel(azimuth_of(d2) + deg2rad(0.3),
                                             elevation_of(d2) - deg2rad(0.2));
  const Vec3 est = music_estimate(f, predicted, kHybrid);
  CHECK(angular_error(est, d2) < 0.1);
  CHECK(angular_error(est, d1) > 20.0);
}

TEST_CASE("MUSIC: scale invariance and the snapshot-count guard") {
  const CVec s = zadoff_chu(63, 29);
  Rng rng(4004);
  const Vec3 d = dir_from_cosines(-0.05, 0.22);
  SignalFrame f = frame_from_direction(d, d, s, 1e3, rng);
  const Vec3 predicted = d;

  const Vec3 est1 = music_estimate(f, predicted, kHybrid);
  f.y *= 5.0;
  const Vec3 est2 = music_estimate(f, predicted, kHybrid);
  CHECK((est1 - est2).norm() < 1e-9);

  SignalFrame tiny;
  tiny.y = CVec::Ones(kHybrid.num_subarrays());  // one snapshot only
  CHECK_THROWS_AS(music_estimate(tiny, predicted, kHybrid), RankDeficient);
}

TEST_CASE("Kalman filter: exact constant-velocity propagation") {
  const Vec3 d0 = direction_from_azel(0.7, 1.1);
  KalmanState s = kf_init(d0, deg2rad(2.0), deg2rad(0.5));
  CHECK((s.direction() - d0).norm() < 1e-12);

  s.x[2] = 1e-3;   // az rate
  s.x[3] = -2e-4;  // el rate
  const KalmanState p = kf_predict(s, 5.0);
  CHECK(p.x[0] == Catch::Approx(0.7 + 5.0 * 1e-3).margin(1e-15));
  CHECK(p.x[1] == Catch::Approx(1.1 - 5.0 * 2e-4).margin(1e-15));
  CHECK(p.x[2] == s.x[2]);
  CHECK(p.x[3] == s.x[3]);

  // covariance propagation: P' = F P F^T + Q, element (0,0) written out
  const double dt = 5.0, q = s.process_noise;
  const double expect00 =
      s.P(0, 0) + 2.0 * dt * s.P(0, 2) + dt * dt * s.P(2, 2) +
      q * dt * dt * dt / 3.0;
  CHECK(p.P(0, 0) == Catch::Approx(expect00).epsilon(1e-12));
  CHECK(p.P(0, 0) > s.P(0, 0));
  CHECK(p.P.trace() > s.P.trace());
}

TEST_CASE("Kalman filter: zero innovation leaves the mean, shrinks P") {
  const Vec3 d0 = direction_from_azel(-0.4, 0.9);
  KalmanState s = kf_init(d0, deg2rad(2.0), deg2rad(0.5));
  const KalmanState u = kf_update(s, d0);
  CHECK(u.x[0] == Catch::Approx(s.x[0]).margin(1e-15));
  CHECK(u.x[1] == Catch::Approx(s.x[1]).margin(1e-15));
  CHECK(u.P(0, 0) < s.P(0, 0));
  CHECK(u.P(1, 1) < s.P(1, 1));

  // symmetric positive definite through repeated Joseph-form updates
  KalmanState w = s;
  Rng rng(4005);
  for (int i = 0; i < 50; ++i) {
    w = kf_predict(w, 5.0);
    const Vec3 meas = direction_from_azel(w.x[0] + rng.normal() * 1e-3,
                                          w.x[1] + rng.normal() * 1e-3);
    w = kf_update(w, meas);
    CHECK((w.P - w.P.transpose()).norm() < 1e-15 * w.P.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(w.P);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Kalman filter: azimuth innovation wraps across the seam") {
  const Vec3 d0 = direction_from_azel(kPi - 0.01, 0.8);
  KalmanState s = kf_init(d0, deg2rad(2.0), deg2rad(0.5));
  const Vec3 meas = direction_from_azel(-kPi + 0.01, 0.8);
  const KalmanState u = kf_update(s, meas);
  // the +0.02 rad step is taken the short way around
  CHECK(std::abs(wrap_pi(u.x[0] - (kPi - 0.01))) < 0.021);
  CHECK(std::abs(wrap_pi(u.x[0] - (kPi - 0.01))) > 0.0);
}

TEST_CASE("tracker: closed loop on a noiseless pass converges to the pass") {
  const CVec s = zadoff_chu(63, 29);
  const Vec3 d0 = direction(0.0, kTruth, kOc);
  // start 0.3 degrees off the true AoA
  const Vec3 start = direction_from_azel(azimuth_of(d0) + deg2rad(0.3),
                                         elevation_of(d0));
  TwoStepTracker tracker(kHybrid, MusicConfig{}, start);

  for (int k = 1; k <= 12; ++k) {
    const double t = 5.0 * k;
    const Vec3 pointing = tracker.predict(t);
    SignalFrame f;
    f.t = t;
    f.pointing = pointing;
    const double rho = channel_amplitude(t, kTruth, kOc, LinkBudget{});
    f.y = std::polar(rho, 0.4 * k) *
          template_of_gamma(t, kTruth, kOc, pointing, kHybrid, s);
    tracker.step(f);
  }
  const Vec3 truth = direction(60.0, kTruth, kOc);
  CHECK(angular_error(tracker.estimate(), truth) < 0.2);
}
