#include <catch2/catch_amalgamated.hpp>

#include "leotrack/vmp.hpp"

using namespace leo;

namespace {
const OrbitConstants kOc = orbit_constants_for_altitude(550e3);
const HybridConfig kHybrid;

// Visible, rising pass with the apex a few minutes after t = 0: the orbit
// phase omega*t - eta0 starts at ~1.25 rad, crossing pi/2 near t = 290 s.
const OrbitParams kTruth{1.45, 0.8, 5.03};

SignalFrame noiseless_frame(double t, const OrbitParams& g, const Vec3& p,
                            const CVec& s, cplx h) {
  SignalFrame f;
  f.t = t;
  f.pointing = p;
  f.y = h * template_of_gamma(t, g, kOc, p, kHybrid, s);
  return f;
}
}  // namespace

TEST_CASE("matched filter: hand-computed reduction and size guard") {
  CVec s(2);
  s << cplx(1.0, 0.0), cplx(0.0, 1.0);
  SignalFrame f;
  f.y = CVec(4);
  f.y << cplx(1.0, 2.0), cplx(-1.0, 0.5), cplx(0.0, -3.0), cplx(2.0, 2.0);
  const CVec ybar = matched_filter(f, 2, s);
  REQUIRE(ybar.size() == 2);
  // ybar_m = sum_k conj(y_mk) s_k
  CHECK(std::abs(ybar[0] - (std::conj(f.y[0]) * s[0] +
                            std::conj(f.y[1]) * s[1])) < 1e-15);
  CHECK(std::abs(ybar[1] - (std::conj(f.y[2]) * s[0] +
                            std::conj(f.y[3]) * s[1])) < 1e-15);
  CHECK_THROWS_AS(matched_filter(f, 3, s), ConfigError);
}

TEST_CASE("KDE prior: peak height, tails, wrapping, normalization") {
  KdePrior one;
  one.samples = {OrbitParams{1.5, 0.1, 0.2}};
  one.bandwidth = 0.005;
  const double peak = -1.5 * std::log(kTwoPi * 0.005 * 0.005);
  CHECK(kde_log_density({1.5, 0.1, 0.2}, one) ==
        Catch::Approx(peak).margin(1e-9));

  // one bandwidth unit costs exactly 1/2; ten cost 50
  CHECK(kde_log_density({1.5, 0.1 + 0.005, 0.2}, one) ==
        Catch::Approx(peak - 0.5).margin(1e-9));
  CHECK(kde_log_density({1.5, 0.1 + 0.05, 0.2}, one) ==
        Catch::Approx(peak - 50.0).margin(1e-6));

  // angular wrapping: beta near 2pi is close to beta near 0
  KdePrior wrap;
  wrap.samples = {OrbitParams{1.5, 0.001, 0.2}};
  wrap.bandwidth = 0.005;
  CHECK(kde_log_density({1.5, kTwoPi - 0.001, 0.2}, wrap) >
        kde_log_density({1.5, 0.001, 0.2}, wrap) - 0.1);
  // eta0 wraps the same way
  KdePrior wrap2;
  wrap2.samples = {OrbitParams{1.5, 0.2, kTwoPi - 0.002}};
  wrap2.bandwidth = 0.005;
  CHECK(kde_log_density({1.5, 0.2, 0.002}, wrap2) >
        kde_log_density({1.5, 0.2, kTwoPi - 0.002}, wrap2) - 0.5);

  CHECK_THROWS_AS(kde_log_density({1.5, 0.1, 0.2}, KdePrior{}), ConfigError);

  // mixture integrates to one over a box covering all mass
  KdePrior mix;
  mix.samples = {OrbitParams{1.5, 0.1, 0.2}, OrbitParams{1.502, 0.104, 0.197},
                 OrbitParams{1.497, 0.1, 0.205}};
  mix.bandwidth = 0.005;
  const double step = 0.00125;
  double mass = 0.0;
  for (double a = 1.5 - 0.035; a <= 1.5 + 0.035; a += step)
    for (double b = 0.1 - 0.035; b <= 0.1 + 0.035; b += step)
      for (double e = 0.2 - 0.035; e <= 0.2 + 0.035; e += step)
        mass += std::exp(kde_log_density({a, b, e}, mix));
  mass *= step * step * step;
  CHECK(mass == Catch::Approx(1.0).epsilon(0.015));
}

TEST_CASE("ABC sampler: invariants, ranking, and accuracy of the best") {
  const Vec3 aoa = direction(0.0, kTruth, kOc);
  AbcConfig cfg;
  cfg.n_samp = 500;
  cfg.max_trials = 100000;
  Rng rng(909);
  const std::vector<AbcSample> samples = abc_sample(aoa, kOc, cfg, rng);
  REQUIRE(static_cast<int>(samples.size()) == cfg.n_samp);

  for (size_t i = 0; i < samples.size(); ++i) {
    const AbcSample& s = samples[i];
    CHECK(is_visible(cfg.dt_visibility, s.gamma, kOc));
    CHECK(polar_rate(0.0, s.gamma, kOc, cfg.dt_rate) < 0.0);
    CHECK(s.gamma.alpha >= kAlphaLo);
    CHECK(s.gamma.alpha <= kAlphaHi);
    CHECK(s.fitness ==
          Catch::Approx(direction(0.0, s.gamma, kOc).dot(aoa)).margin(1e-12));
    if (i > 0) CHECK(samples[i - 1].fitness >= s.fitness);
  }
  // the best sample points within a fraction of a degree of the given AoA
  CHECK(samples.front().fitness > 0.995);

  AbcConfig starved = cfg;
  starved.max_trials = 100;  // cannot possibly reach 500 acceptances
  Rng rng2(910);
  CHECK_THROWS_AS(abc_sample(aoa, kOc, starved, rng2), InsufficientSamples);
}

TEST_CASE("channel update: exact collapse on a noiseless matched frame") {
  const CVec s = zadoff_chu(63, 29);
  const Vec3 d0 = direction(0.0, kTruth, kOc);
  const cplx h = std::polar(2.5e-7, 1.234);
  const SignalFrame f = noiseless_frame(0.0, kTruth, d0, s, h);
  const double gamma_v = 3.7;
  const double x2 = template_of_gamma(0.0, kTruth, kOc, d0, kHybrid, s)
                        .squaredNorm();

  OrbitSurrogate exact;
  exact.mean = kTruth;
  exact.covariance = Mat3::Zero();
  const ChannelSurrogate ch =
      update_channel(f, exact, kOc, kHybrid, s, gamma_v);
  CHECK(std::abs(ch.mean - h) < 1e-10 * std::abs(h));
  CHECK(ch.variance == Catch::Approx(1.0 / (gamma_v * x2)).epsilon(1e-9));

  // channel prior precision adds to the denominator
  const double gamma_p = 0.5 * gamma_v * x2;
  const ChannelSurrogate chp =
      update_channel(f, exact, kOc, kHybrid, s, gamma_v, gamma_p);
  CHECK(chp.variance ==
        Catch::Approx(1.0 / (gamma_v * x2 + gamma_p)).epsilon(1e-9));

  // orbit uncertainty inflates the quadratic form: variance shrinks and the
  // mean is attenuated
  OrbitSurrogate fuzzy = exact;
  fuzzy.covariance = 1e-6 * Mat3::Identity();
  const ChannelSurrogate chf =
      update_channel(f, fuzzy, kOc, kHybrid, s, gamma_v);
  CHECK(chf.variance < ch.variance);
  CHECK(std::abs(chf.mean) < std::abs(ch.mean));
}

TEST_CASE("orbit objective: weights, phase invariance, argmax at truth") {
  const CVec s = zadoff_chu(63, 29);
  const double snorm2 = s.squaredNorm();
  const double gamma_v = 0.01;
  const cplx h = std::polar(1.0, 0.77);

  std::vector<FrameStatistics> stats;
  for (double t : {0.0, 20.0, 40.0}) {
    const Vec3 d = direction(t, kTruth, kOc);
    const SignalFrame f = noiseless_frame(t, kTruth, d, s, h);
    FrameStatistics fs;
    fs.t = t;
    fs.pointing = d;
    fs.ybar = matched_filter(f, kHybrid.num_subarrays(), s);
    fs.channel.mean = h;
    fs.channel.variance = 1e-6;
    stats.push_back(fs);
  }

  const OrbitParams probe{1.452, 0.797, 5.602};

  // window rho = 1: the objective is the plain sum of per-frame terms
  double sum_single = 0.0;
  for (const FrameStatistics& fs : stats) {
    std::vector<FrameStatistics> one{fs};
    sum_single += log_q_gamma(probe, one, nullptr, 1.0, kOc, kHybrid, snorm2,
                              gamma_v);
  }
  CHECK(log_q_gamma(probe, stats, nullptr, 1.0, kOc, kHybrid, snorm2,
                    gamma_v) ==
        Catch::Approx(sum_single).epsilon(1e-12));

  // window rho = 0.5: weights 0.25, 0.5, 1 by recency
  std::vector<double> singles;
  for (const FrameStatistics& fs : stats) {
    std::vector<FrameStatistics> one{fs};
    singles.push_back(log_q_gamma(probe, one, nullptr, 1.0, kOc, kHybrid,
                                  snorm2, gamma_v));
  }
  CHECK(log_q_gamma(probe, stats, nullptr, 0.5, kOc, kHybrid, snorm2,
                    gamma_v) ==
        Catch::Approx(0.25 * singles[0] + 0.5 * singles[1] + singles[2])
            .epsilon(1e-12));

  // rotating the recorded samples by a global phase changes nothing
  std::vector<FrameStatistics> rotated = stats;
  for (FrameStatistics& fs : rotated) fs.ybar *= std::polar(1.0, 2.1);
  CHECK(log_q_gamma(probe, rotated, nullptr, 1.0, kOc, kHybrid, snorm2,
                    gamma_v) ==
        Catch::Approx(log_q_gamma(probe, stats, nullptr, 1.0, kOc, kHybrid,
                                  snorm2, gamma_v))
            .epsilon(1e-12));

  // eta0 line scan: the noiseless objective peaks at the true orbit
  const double at_truth = log_q_gamma(kTruth, stats, nullptr, 1.0, kOc,
                                      kHybrid, snorm2, gamma_v);
  for (int k = -20; k <= 20; ++k) {
    if (k == 0) continue;
    OrbitParams g = kTruth;
    g.eta0 += 1e-4 * k;
    CHECK(log_q_gamma(g, stats, nullptr, 1.0, kOc, kHybrid, snorm2, gamma_v) <
          at_truth);
  }
}

TEST_CASE("Nelder-Mead: quadratic recovery, reporting, multistart basins") {
  Mat3 A;
  A << 1.0, 0.2, 0.0, 0.2, 2.0, -0.3, 0.0, -0.3, 5.0;
  const Vec3 c{0.3, -0.2, 0.7};
  const auto quad = [&](const Vec3& x) {
    return -((x - c).transpose() * A * (x - c)).value();
  };
  const SimplexResult r = nelder_mead(quad, Vec3::Zero());
  CHECK((r.x - c).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(r.value == Catch::Approx(quad(r.x)));
  CHECK(r.iterations <= SimplexConfig{}.max_iterations);

  // two Gaussian bumps one unit apart: single start finds the local one,
  // multistart picks the taller
  const Vec3 c1{0.0, 0.0, 0.0}, c2{1.0, 0.0, 0.0};
  const auto bumps = [&](const Vec3& x) {
    return 3.0 * std::exp(-(x - c1).squaredNorm() / 0.02) +
           1.0 * std::exp(-(x - c2).squaredNorm() / 0.02);
  };
  const SimplexResult local =
      nelder_mead(bumps, Vec3{1.02, 0.01, -0.01});
  CHECK(local.value == Catch::Approx(1.0).epsilon(1e-3));
  const SimplexResult global = optimize_gamma(
      bumps, {OrbitParams{1.02, 0.01, -0.01}, OrbitParams{0.03, -0.02, 0.01}});
  CHECK(global.value == Catch::Approx(3.0).epsilon(1e-3));
  CHECK((global.x - c1).norm() < 1e-3);

  CHECK_THROWS_AS(optimize_gamma(bumps, {}), ConfigError);
}

TEST_CASE("Laplace moments: quadratic oracle, scaling, stencil, guards") {
  Mat3 P;
  P << 0.04, 0.005, 0.002, 0.005, 0.09, -0.01, 0.002, -0.01, 0.25;
  const Mat3 Pinv = P.inverse();
  const Vec3 m{1.4, 0.9, 5.1};
  const auto logq = [&](const Vec3& x) {
    return -0.5 * ((x - m).transpose() * Pinv * (x - m)).value();
  };
  const Mat3 cov = laplace_covariance(logq, m);
  CHECK((cov - P).norm() < 1e-6 * P.norm());

  // doubling the log-density curvature halves the covariance
  const auto logq2 = [&](const Vec3& x) { return 2.0 * logq(x); };
  const Mat3 cov2 = laplace_covariance(logq2, m);
  CHECK((cov2 - 0.5 * P).norm() < 1e-6 * P.norm());

  // central-difference Hessian against closed forms on a smooth function
  const auto smooth = [](const Vec3& x) {
    return std::sin(x[0]) * std::cos(2.0 * x[1]) * std::exp(0.5 * x[2]);
  };
  const Vec3 x0{0.4, -0.3, 0.2};
  const double e = std::exp(0.5 * x0[2]);
  const double sn = std::sin(x0[0]), cs = std::cos(x0[0]);
  const double c2 = std::cos(2.0 * x0[1]), s2 = std::sin(2.0 * x0[1]);
  Mat3 expect;
  expect << -sn * c2 * e, -2.0 * cs * s2 * e, 0.5 * cs * c2 * e,
      -2.0 * cs * s2 * e, -4.0 * sn * c2 * e, -sn * s2 * e,
      0.5 * cs * c2 * e, -sn * s2 * e, 0.25 * sn * c2 * e;
  const Mat3 H = numeric_hessian(smooth, x0);
  CHECK((H - expect).norm() < 1e-5 * expect.norm());

  // flat directions are floored rather than inverted to infinity
  const auto ridge = [](const Vec3& x) { return -x[0] * x[0] - x[1] * x[1]; };
  const Mat3 covr = laplace_covariance(ridge, Vec3::Zero());
  CHECK(covr(0, 0) == Catch::Approx(0.5).epsilon(1e-6));
  CHECK(covr(2, 2) > 1e10);

  // a curvature spread beyond 1e14 is refused
  const auto needle = [](const Vec3& x) { return -1e6 * x[0] * x[0]; };
  CHECK_THROWS_AS(laplace_covariance(needle, Vec3::Zero()), SingularHessian);
}

TEST_CASE("chi-square(3): frozen 95% quantile and CDF consistency") {
  CHECK(chi2_quantile_3(0.95) ==
        Catch::Approx(7.814727903251179).margin(1e-9));
  CHECK(chi2_cdf_3(7.814727903251179) == Catch::Approx(0.95).margin(1e-12));
  CHECK(chi2_cdf_3(0.0) == 0.0);
  CHECK(chi2_cdf_3(-1.0) == 0.0);
  CHECK(chi2_cdf_3(100.0) > 0.999999);
  for (double p : {0.1, 0.5, 0.9, 0.99})
    CHECK(chi2_cdf_3(chi2_quantile_3(p)) == Catch::Approx(p).margin(1e-10));
  CHECK_THROWS_AS(chi2_quantile_3(0.0), ConfigError);
  CHECK_THROWS_AS(chi2_quantile_3(1.0), ConfigError);
}

TEST_CASE("CI sampling: gate radius, degenerate covariance, determinism") {
  OrbitSurrogate orbit;
  orbit.mean = kTruth;
  orbit.covariance = Mat3::Zero();
  Rng rng(111);
  for (const OrbitParams& g : sample_ci_orbits(orbit, 0.95, 50, rng))
    CHECK((g.vec() - kTruth.vec()).norm() == 0.0);

  const double sigma = 0.01;
  orbit.covariance = sigma * sigma * Mat3::Identity();
  Rng r1(222), r2(222);
  const auto draws1 = sample_ci_orbits(orbit, 0.95, 400, r1);
  const auto draws2 = sample_ci_orbits(orbit, 0.95, 400, r2);
  REQUIRE(draws1.size() == 400);
  const double gate = std::sqrt(chi2_quantile_3(0.95));
  for (size_t i = 0; i < draws1.size(); ++i) {
    CHECK((draws1[i].vec() - draws2[i].vec()).norm() == 0.0);
    CHECK((draws1[i].vec() - kTruth.vec()).norm() <= gate * sigma + 1e-12);
  }
}

TEST_CASE("posterior contraction: more frames shrink the orbit covariance") {
  // Matched noiseless frames every 20 s. As data accumulates the Laplace
  // covariance must contract in every sense used downstream: positive
  // eigenvalues, falling trace and log-volume, and a falling predicted-AoA
  // variance when pushed forward to a later epoch.
  const CVec s = zadoff_chu(63, 29);
  const double snorm2 = s.squaredNorm();
  const double gamma_v = 0.01;
  const cplx h = std::polar(1.0, -0.4);

  std::vector<FrameStatistics> stats;
  const auto add = [&](double t) {
    const Vec3 d = direction(t, kTruth, kOc);
    const SignalFrame f = noiseless_frame(t, kTruth, d, s, h);
    FrameStatistics fs;
    fs.t = t;
    fs.pointing = d;
    fs.ybar = matched_filter(f, kHybrid.num_subarrays(), s);
    fs.channel.mean = h;
    fs.channel.variance = 1e-6;
    stats.push_back(fs);
  };
  const auto objective = [&](const Vec3& v) {
    return log_q_gamma(OrbitParams::from_vec(v), stats, nullptr, 1.0, kOc,
                       kHybrid, snorm2, gamma_v);
  };

  // direction Jacobian at a later epoch, for the predicted-AoA variance
  Mat3 J;
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = kTruth.vec(), lo = kTruth.vec();
    hi[i] += 1e-6;
    lo[i] -= 1e-6;
    J.col(i) = (direction(120.0, OrbitParams::from_vec(hi), kOc) -
                direction(120.0, OrbitParams::from_vec(lo), kOc)) /
               2e-6;
  }

  const double inf = std::numeric_limits<double>::infinity();
  double prev_trace = inf, prev_logdet = inf, prev_pred = inf;
  double t_next = 0.0;
  for (int frames : {2, 4, 6}) {
    while (static_cast<int>(stats.size()) < frames) {
      add(t_next);
      t_next += 20.0;
    }
    const Mat3 cov = laplace_covariance(objective, kTruth.vec());
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
    const double trace = cov.trace();
    const double logdet = std::log(es.eigenvalues().prod());
    const double pred = (J * cov * J.transpose()).trace();
    CHECK(trace < prev_trace);
    CHECK(logdet < prev_logdet);
    CHECK(pred < prev_pred);
    prev_trace = trace;
    prev_logdet = logdet;
    prev_pred = pred;
  }
}
