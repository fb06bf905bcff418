#pragma once

#include <future>
#include <iomanip>
#include <thread>
#include <vector>

#include "leotrack/common.hpp"
#include "leotrack/scenario.hpp"
#include "leotrack/signal.hpp"
#include "leotrack/twostep.hpp"
#include "leotrack/vmp.hpp"

namespace leo {

struct MetricRow {
  double t = 0.0;
  std::string method;
  double a_e_deg = 0.0;
  int runs = 1;
};

struct BaselineRow {
  double t = 0.0;
  double az_est = 0.0, el_est = 0.0;
  double az_true = 0.0, el_true = 0.0;
  double err_deg = 0.0;
};

// Truth model for one run: either orbit parameters or an external track.
struct TruthModel {
  std::optional<OrbitParams> orbit;
  const Trajectory* trajectory = nullptr;

  Vec3 dir(double t, const OrbitConstants& oc) const {
    if (trajectory != nullptr) {
      const Vec3 p = interpolate_trajectory(*trajectory, t);
      return p / p.norm();
    }
    return direction(t, *orbit, oc);
  }
};

struct RunOutput {
  std::vector<double> vmp_times;
  std::vector<double> vmp_err_deg;
  std::vector<double> baseline_times;
  std::vector<double> baseline_err_deg;
  std::vector<VmpStateRecord> vmp_history;
  std::vector<BaselineRow> baseline_history;
  OrbitSurrogate final_orbit;
  OrbitParams truth;  // meaningful only for orbit-model truth
};

namespace detail {

inline SignalFrame make_frame(double t, const TruthModel& truth,
                              const ScenarioConfig& cfg,
                              const OrbitConstants& oc, const Vec3& pointing,
                              double gamma_v, const CVec& s, Rng& rng) {
  SignalFrame f =
      truth.trajectory != nullptr
          ? synthesize_frame(t, *truth.trajectory, pointing, cfg.hybrid,
                             cfg.budget, gamma_v, s, rng)
          : synthesize_frame(t, *truth.orbit, oc, pointing, cfg.hybrid,
                             cfg.budget, gamma_v, s, rng);
  if (cfg.obstruction)
    f = obstruct(f, cfg.obstruction->first, cfg.obstruction->second, gamma_v,
                 rng);
  return f;
}

}  // namespace detail

// One closed-loop pass: the VMP estimator is fed frames at the orbit-update
// cadence (first two pointed at the initial AoA, later ones at its own
// prediction); the two-step baseline consumes frames at its faster cadence
// pointed at the Kalman prediction. Each method observes its own noise
// stream.
inline RunOutput run_single(const ScenarioConfig& cfg, const TruthModel& truth,
                            std::uint64_t run_seed) {
  const OrbitConstants oc = cfg.orbit_constants();
  const CVec s = cfg.pilot();

  Rng setup_rng(derive_seed(run_seed, 0));
  Rng vmp_rng(derive_seed(run_seed, 1));
  Rng base_rng(derive_seed(run_seed, 2));

  double gamma_v;
  if (truth.trajectory != nullptr) {
    // Same SNR definition as the orbit-model path, evaluated at the t=0
    // trajectory point.
    const Vec3 p0 = interpolate_trajectory(*truth.trajectory, 0.0);
    if (p0.z() <= 0.0) throw ScenarioError("trajectory below horizon at t=0");
    const double rho = std::pow(10.0, (cfg.budget.tx_gain_db +
                                       cfg.budget.rx_element_gain_db -
                                       fspl_db(p0.norm(),
                                               cfg.budget.carrier_freq_hz) -
                                       atmos_db(rad2deg(std::asin(
                                                    p0.z() / p0.norm())),
                                                cfg.budget)) /
                                          20.0) *
                       std::sqrt(cfg.budget.tx_power_W);
    const Vec3 d0 = p0 / p0.norm();
    const double x2 =
        beamformed_template(d0, d0, cfg.hybrid, s).squaredNorm();
    const double n =
        static_cast<double>(cfg.hybrid.num_subarrays()) * s.size();
    gamma_v = std::pow(10.0, cfg.snr_db / 10.0) * n / (rho * rho * x2);
  } else {
    gamma_v = noise_precision_for_snr(cfg.snr_db, *truth.orbit, oc,
                                      cfg.budget, cfg.hybrid, s);
  }

  const Vec3 true_d0 = truth.dir(0.0, oc);
  const Vec3 initial_aoa =
      rotate_direction(true_d0, deg2rad(cfg.init_aoa_error_deg), setup_rng);

  RunOutput out;
  if (truth.orbit) out.truth = *truth.orbit;

  // --- VMP track ---
  VmpEstimator vmp(oc, cfg.hybrid, s, gamma_v, cfg.vmp);
  {
    const double dt = cfg.orbit_update_period_s;
    const SignalFrame f0 = detail::make_frame(0.0, truth, cfg, oc,
                                              initial_aoa, gamma_v, s,
                                              vmp_rng);
    const SignalFrame f1 = detail::make_frame(dt, truth, cfg, oc,
                                              initial_aoa, gamma_v, s,
                                              vmp_rng);
    vmp.initialize(f0, f1, initial_aoa, vmp_rng);
    out.vmp_times.push_back(dt);
    out.vmp_err_deg.push_back(
        angular_error(vmp.predict(dt), truth.dir(dt, oc)));
    for (double t = 2.0 * dt; t <= cfg.duration_s + 1e-9; t += dt) {
      const Vec3 pointing = vmp.predict(t);
      const SignalFrame f = detail::make_frame(t, truth, cfg, oc, pointing,
                                               gamma_v, s, vmp_rng);
      vmp.step(f);
      out.vmp_times.push_back(t);
      out.vmp_err_deg.push_back(
          angular_error(vmp.predict(t), truth.dir(t, oc)));
    }
    out.vmp_history = vmp.history();
    out.final_orbit = vmp.orbit();
  }

  // --- two-step track ---
  {
    TwoStepTracker tracker(cfg.hybrid, cfg.music, initial_aoa,
                           deg2rad(std::max(cfg.init_aoa_error_deg, 0.5) * 2.0),
                           deg2rad(0.5), cfg.kf_process_noise);
    for (double t = cfg.baseline_period_s; t <= cfg.duration_s + 1e-9;
         t += cfg.baseline_period_s) {
      const Vec3 pointing = tracker.predict(t);
      const SignalFrame f = detail::make_frame(t, truth, cfg, oc, pointing,
                                               gamma_v, s, base_rng);
      tracker.step(f);
      const Vec3 est = tracker.estimate();
      const Vec3 td = truth.dir(t, oc);
      const double err = angular_error(est, td);
      out.baseline_times.push_back(t);
      out.baseline_err_deg.push_back(err);
      out.baseline_history.push_back({t, azimuth_of(est), elevation_of(est),
                                      azimuth_of(td), elevation_of(td), err});
    }
  }
  return out;
}

struct MonteCarloResult {
  std::vector<MetricRow> metric;  // Eq. 19 averages, both methods
  std::vector<RunOutput> runs;
};

// K independent runs with per-run derived seeds; truth orbits are drawn per
// run (unless fixed), and the per-step angular errors average into A_e.
inline MonteCarloResult run_montecarlo(const ScenarioConfig& cfg) {
  const OrbitConstants oc = cfg.orbit_constants();

  Trajectory traj;
  if (cfg.trajectory_path) traj = load_trajectory(*cfg.trajectory_path);

  std::vector<TruthModel> truths(cfg.runs);
  for (int k = 0; k < cfg.runs; ++k) {
    if (cfg.trajectory_path) {
      truths[k].trajectory = &traj;
    } else if (cfg.fixed_orbit) {
      truths[k].orbit = *cfg.fixed_orbit;
    } else {
      Rng draw_rng(derive_seed(cfg.seed, 1000000 + k));
      truths[k].orbit = draw_valid_orbit(oc, cfg.duration_s, draw_rng);
    }
  }

  MonteCarloResult result;
  result.runs.resize(cfg.runs);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int stride = static_cast<int>(
      std::min<unsigned>(hw, static_cast<unsigned>(cfg.runs)));
  for (int base = 0; base < cfg.runs; base += stride) {
    std::vector<std::future<RunOutput>> batch;
    for (int k = base; k < std::min(cfg.runs, base + stride); ++k)
      batch.push_back(std::async(std::launch::async, [&, k] {
        return run_single(cfg, truths[k], derive_seed(cfg.seed, k));
      }));
    for (int k = base; k < std::min(cfg.runs, base + stride); ++k)
      result.runs[k] = batch[k - base].get();
  }

  const auto average = [&](auto times_of, auto errs_of,
                           const std::string& name) {
    if (result.runs.empty()) return;
    const std::vector<double>& times = times_of(result.runs.front());
    for (size_t i = 0; i < times.size(); ++i) {
      double acc = 0.0;
      for (const RunOutput& r : result.runs) acc += errs_of(r)[i];
      result.metric.push_back(
          {times[i], name, acc / result.runs.size(), cfg.runs});
    }
  };
  average([](const RunOutput& r) -> const std::vector<double>& { return r.vmp_times; },
          [](const RunOutput& r) -> const std::vector<double>& { return r.vmp_err_deg; },
          "vmp");
  average([](const RunOutput& r) -> const std::vector<double>& { return r.baseline_times; },
          [](const RunOutput& r) -> const std::vector<double>& { return r.baseline_err_deg; },
          "baseline");
  return result;
}

// ---- result files ----

inline void emit_results(const std::vector<MetricRow>& rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t_seconds,method,A_e_deg,K\n";
  out << std::setprecision(17);
  for (const MetricRow& r : rows)
    out << r.t << ',' << r.method << ',' << r.a_e_deg << ',' << r.runs
        << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline void emit_state_history(const std::vector<VmpStateRecord>& hist,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "n,t,alpha,beta,eta0,cov_00,cov_01,cov_02,cov_10,cov_11,cov_12,"
         "cov_20,cov_21,cov_22,h_re,h_im,h_var\n";
  out << std::setprecision(17);
  for (const VmpStateRecord& r : hist) {
    out << r.n << ',' << r.t << ',' << r.gamma.alpha << ',' << r.gamma.beta
        << ',' << r.gamma.eta0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out << ',' << r.covariance(i, j);
    out << ',' << r.channel.mean.real() << ',' << r.channel.mean.imag() << ','
        << r.channel.variance << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline void emit_baseline_history(const std::vector<BaselineRow>& rows,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t,az_est,el_est,az_true,el_true,err_deg\n";
  out << std::setprecision(17);
  for (const BaselineRow& r : rows)
    out << r.t << ',' << r.az_est << ',' << r.el_est << ',' << r.az_true
        << ',' << r.el_true << ',' << r.err_deg << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// Sampled 95%-CI orbit bundle, one row per (sample, time).
inline void emit_ci_orbits(const OrbitSurrogate& orbit,
                           const OrbitConstants& oc,
                           const std::vector<double>& times, int count,
                           double level, Rng& rng, const std::string& path) {
  const std::vector<OrbitParams> bundle =
      sample_ci_orbits(orbit, level, count, rng);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "sample,t_seconds,alpha,beta,eta0,ux,uy,uz\n";
  out << std::setprecision(17);
  for (size_t i = 0; i < bundle.size(); ++i) {
    for (double t : times) {
      const Vec3 d = direction(t, bundle[i], oc);
      out << i << ',' << t << ',' << bundle[i].alpha << ',' << bundle[i].beta
          << ',' << bundle[i].eta0 << ',' << d.x() << ',' << d.y() << ','
          << d.z() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

// Circular-orbit trajectory writer; alpha can drift linearly over the span
// to create deliberately mismatched truths for window-weighting studies.
inline Trajectory make_orbit_trajectory(const OrbitParams& g,
                                        const OrbitConstants& oc,
                                        double duration_s, double dt,
                                        double alpha_drift_rad = 0.0) {
  Trajectory traj;
  for (double t = 0.0; t <= duration_s + 1e-9; t += dt) {
    OrbitParams gt = g;
    gt.alpha += alpha_drift_rad * (t / duration_s);
    traj.t.push_back(t);
    traj.pos.push_back(position(t, gt, oc));
  }
  return traj;
}

}  // namespace leo
