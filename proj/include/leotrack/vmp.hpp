#pragma once

#include <optional>
#include <vector>

#include "leotrack/abc.hpp"
#include "leotrack/array.hpp"
#include "leotrack/common.hpp"
#include "leotrack/kde.hpp"
#include "leotrack/laplace.hpp"
#include "leotrack/orbit.hpp"
#include "leotrack/signal.hpp"
#include "leotrack/simplex.hpp"

namespace leo {

// Complex-Gaussian surrogate q(h_n).
struct ChannelSurrogate {
  cplx mean{0.0, 0.0};
  double variance = 0.0;
};

// Gaussian surrogate q(Gamma).
struct OrbitSurrogate {
  OrbitParams mean;
  Mat3 covariance = Mat3::Zero();
};

// Everything the orbit objective needs from one recorded frame. The stacked
// M*N_s samples reduce through the pilot matched filter to an M-vector:
// ybar_m = sum_k conj(y_mk) s_k, after which
//   <y|Lv|x(G)> = gamma_v * sum_m ybar_m g_m(G)
//   <x(G)|Lv|x(G)> = gamma_v * ||s||^2 * ||g(G)||^2.
struct FrameStatistics {
  double t = 0.0;
  CVec ybar;  // matched-filtered subarray outputs
  Vec3 pointing = Vec3::UnitZ();
  ChannelSurrogate channel;
};

inline CVec matched_filter(const SignalFrame& frame, int n_sub,
                           const CVec& s) {
  const Eigen::Index ns = s.size();
  if (frame.y.size() != static_cast<Eigen::Index>(n_sub) * ns)
    throw ConfigError("frame length inconsistent with geometry");
  CVec ybar(n_sub);
  // Eigen's complex dot conjugates its left argument: exactly sum_k
  // conj(y_mk) s_k.
  for (int m = 0; m < n_sub; ++m)
    ybar[m] = frame.y.segment(m * ns, ns).dot(s);
  return ybar;
}

struct VmpConfig {
  AbcConfig abc;
  int n_starts = 60;
  double kde_bandwidth = 0.005;
  double window_rho = 1.0;
  double gamma_p = 0.0;  // channel prior precision
  SimplexConfig simplex;
  double hessian_step = kHessianStep;
};

// Channel-surrogate update (delta method): the template expectation is taken
// at the orbit mean and the quadratic form picks up the gradient-Gram trace.
inline ChannelSurrogate update_channel(const SignalFrame& frame,
                                       const OrbitSurrogate& orbit,
                                       const OrbitConstants& oc,
                                       const HybridConfig& hybrid,
                                       const CVec& s, double gamma_v,
                                       double gamma_p = 0.0) {
  const double snorm2 = s.squaredNorm();
  const Vec3 d = direction(frame.t, orbit.mean, oc);
  const CVec g = effective_response(d, frame.pointing, hybrid);
  const double x2 = gamma_v * snorm2 * g.squaredNorm();

  const CMat Jg = effective_response_gradient(frame.t, orbit.mean, oc,
                                              frame.pointing, hybrid);
  const CMat gram = gamma_v * snorm2 * (Jg.adjoint() * Jg);
  const double tr = (orbit.covariance.cast<cplx>() * gram).trace().real();

  ChannelSurrogate ch;
  ch.variance = 1.0 / (x2 + tr + gamma_p);
  const CVec ybar = matched_filter(frame, hybrid.num_subarrays(), s);
  // <x(mean)|Lv|y> = conj(<y|Lv|x>) = gamma_v * conj(sum_m ybar_m g_m)
  ch.mean = ch.variance * gamma_v * std::conj((ybar.array() * g.array()).sum());
  return ch;
}

// Unnormalized ln q(Gamma): window-weighted per-frame data terms (with the
// absolute-operator surrogate making each term invariant to the channel
// phase) plus the KDE log prior. Pass no prior for a flat one.
inline double log_q_gamma(const OrbitParams& gamma,
                          const std::vector<FrameStatistics>& stats,
                          const KdePrior* prior, double window_rho,
                          const OrbitConstants& oc, const HybridConfig& hybrid,
                          double snorm2, double gamma_v) {
  double acc = 0.0;
  const size_t n_frames = stats.size();
  for (size_t n = 0; n < n_frames; ++n) {
    const FrameStatistics& fs = stats[n];
    const double w =
        std::pow(window_rho, static_cast<double>(n_frames - 1 - n));
    if (w < 1e-300) continue;
    const Vec3 d = direction(fs.t, gamma, oc);
    const CVec g = effective_response(d, fs.pointing, hybrid);
    const double quad = gamma_v * snorm2 * g.squaredNorm();
    const double cross =
        gamma_v * std::abs((fs.ybar.array() * g.array()).sum());
    const cplx h = fs.channel.mean;
    acc += w * (-(std::norm(h) + fs.channel.variance) * quad +
                std::abs(h) * cross);
  }
  if (prior != nullptr) acc += kde_log_density(gamma, *prior);
  return acc;
}

inline Vec3 predict_aoa(double t, const OrbitSurrogate& orbit,
                        const OrbitConstants& oc) {
  return direction(t, orbit.mean, oc);
}

// Draws from N(mean, cov) gated by the chi-square Mahalanobis ball.
inline std::vector<OrbitParams> sample_ci_orbits(const OrbitSurrogate& orbit,
                                                 double level, int count,
                                                 Rng& rng) {
  const double gate = chi2_quantile_3(level);
  Eigen::SelfAdjointEigenSolver<Mat3> es(orbit.covariance);
  Vec3 ev = es.eigenvalues().cwiseMax(0.0);
  const Mat3 root =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  std::vector<OrbitParams> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Vec3 z{rng.normal(), rng.normal(), rng.normal()};
    if (z.squaredNorm() > gate) continue;
    out.push_back(OrbitParams::from_vec(orbit.mean.vec() + root * z));
  }
  return out;
}

// One row of exported state history.
struct VmpStateRecord {
  int n = 0;
  double t = 0.0;
  OrbitParams gamma;
  Mat3 covariance = Mat3::Zero();
  ChannelSurrogate channel;
  bool hessian_singular = false;
};

// The full estimator: ABC + KDE initialization, per-frame channel updates,
// windowed orbit refits, Laplace covariance.
class VmpEstimator {
 public:
  VmpEstimator(const OrbitConstants& oc, const HybridConfig& hybrid, CVec s,
               double gamma_v, VmpConfig cfg = {})
      : oc_(oc),
        hybrid_(hybrid),
        s_(std::move(s)),
        snorm2_(s_.squaredNorm()),
        gamma_v_(gamma_v),
        cfg_(cfg) {
    prior_.bandwidth = cfg_.kde_bandwidth;
  }

  bool initialized() const { return initialized_; }
  const OrbitSurrogate& orbit() const { return orbit_; }
  const KdePrior& prior() const { return prior_; }
  const std::vector<VmpStateRecord>& history() const { return history_; }
  const std::vector<FrameStatistics>& frame_stats() const { return stats_; }

  Vec3 predict(double t) const { return predict_aoa(t, orbit_, oc_); }

  // Alg. 2 initialization from the first two frames and the initial AoA:
  // ABC sample set -> KDE prior -> channel updates at the best-fitness
  // sample -> rank the set by ln q -> multistart refine -> Laplace moments.
  void initialize(const SignalFrame& f0, const SignalFrame& f1,
                  const Vec3& initial_aoa, Rng& rng) {
    const std::vector<AbcSample> abc =
        abc_sample(initial_aoa, oc_, cfg_.abc, rng);
    prior_.samples.clear();
    prior_.samples.reserve(abc.size());
    for (const AbcSample& a : abc) prior_.samples.push_back(a.gamma);

    OrbitSurrogate seed;
    seed.mean = abc.front().gamma;  // highest fitness
    seed.covariance = Mat3::Zero();
    for (const SignalFrame* f : {&f0, &f1}) {
      FrameStatistics fs;
      fs.t = f->t;
      fs.pointing = f->pointing;
      fs.ybar = matched_filter(*f, hybrid_.num_subarrays(), s_);
      fs.channel = update_channel(*f, seed, oc_, hybrid_, s_, gamma_v_,
                                  cfg_.gamma_p);
      stats_.push_back(std::move(fs));
    }

    const auto objective = [this](const Vec3& v) {
      return log_q_gamma(OrbitParams::from_vec(v), stats_, &prior_,
                         cfg_.window_rho, oc_, hybrid_, snorm2_, gamma_v_);
    };

    std::vector<std::pair<double, int>> ranked(prior_.samples.size());
    for (size_t i = 0; i < prior_.samples.size(); ++i)
      ranked[i] = {objective(prior_.samples[i].vec()), static_cast<int>(i)};
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const int n_starts =
        std::min<int>(cfg_.n_starts, static_cast<int>(ranked.size()));
    std::vector<OrbitParams> starts(n_starts);
    for (int i = 0; i < n_starts; ++i)
      starts[i] = prior_.samples[ranked[i].second];

    const SimplexResult opt = optimize_gamma(objective, starts, cfg_.simplex);
    orbit_.mean = OrbitParams::from_vec(opt.x);
    orbit_.covariance = laplace_covariance(objective, opt.x, cfg_.hessian_step);
    initialized_ = true;
    history_.push_back(
        {0, f0.t, orbit_.mean, orbit_.covariance, stats_[0].channel, false});
    history_.push_back(
        {1, f1.t, orbit_.mean, orbit_.covariance, stats_[1].channel, false});
  }

  // Alg. 2 main loop body for one new frame.
  void step(const SignalFrame& frame) {
    if (!initialized_) throw ScenarioError("VMP step before initialization");
    FrameStatistics fs;
    fs.t = frame.t;
    fs.pointing = frame.pointing;
    fs.ybar = matched_filter(frame, hybrid_.num_subarrays(), s_);
    fs.channel = update_channel(frame, orbit_, oc_, hybrid_, s_, gamma_v_,
                                cfg_.gamma_p);
    stats_.push_back(std::move(fs));

    const auto objective = [this](const Vec3& v) {
      return log_q_gamma(OrbitParams::from_vec(v), stats_, &prior_,
                         cfg_.window_rho, oc_, hybrid_, snorm2_, gamma_v_);
    };
    const SimplexResult opt =
        nelder_mead(objective, orbit_.mean.vec(), cfg_.simplex);
    orbit_.mean = OrbitParams::from_vec(opt.x);
    bool singular = false;
    try {
      orbit_.covariance =
          laplace_covariance(objective, opt.x, cfg_.hessian_step);
    } catch (const SingularHessian&) {
      singular = true;  // keep the previous covariance
    }
    history_.push_back({static_cast<int>(history_.size()), frame.t,
                        orbit_.mean, orbit_.covariance, stats_.back().channel,
                        singular});
  }

 private:
  OrbitConstants oc_;
  HybridConfig hybrid_;
  CVec s_;
  double snorm2_;
  double gamma_v_;
  VmpConfig cfg_;
  KdePrior prior_;
  std::vector<FrameStatistics> stats_;
  OrbitSurrogate orbit_;
  std::vector<VmpStateRecord> history_;
  bool initialized_ = false;
};

}  // namespace leo
