// Command-line front end: scenario simulation, offline estimation, the
// two-step baseline, Monte Carlo experiments, and the ABC sampler.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "leotrack/harness.hpp"

namespace fs = std::filesystem;
using namespace leo;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<std::string> obstruct;
  std::optional<double> window_rho;
  std::optional<std::string> trajectory;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--config", o->config_path,
                  "scenario config file (INI-style)");
  cmd->add_option("--seed", o->seed, "RNG seed override");
  cmd->add_option("--out", o->out_dir, "output directory");
  cmd->add_option("--snr-db", o->snr_db, "target SNR at t=0, dB");
  cmd->add_option("--obstruct", o->obstruct,
                  "noise-only window T0:T1 in seconds");
  cmd->add_option("--window-rho", o->window_rho,
                  "forgetting factor for the orbit objective");
  cmd->add_option("--trajectory", o->trajectory,
                  "external truth trajectory CSV");
}

ScenarioConfig resolve_config(const CommonOpts& o) {
  ScenarioConfig cfg =
      o.config_path.empty() ? ScenarioConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.window_rho) cfg.vmp.window_rho = *o.window_rho;
  if (o.trajectory) cfg.trajectory_path = *o.trajectory;
  if (o.obstruct) {
    const auto colon = o.obstruct->find(':');
    if (colon == std::string::npos)
      throw ConfigError("--obstruct expects T0:T1");
    try {
      cfg.obstruction = {{std::stod(o.obstruct->substr(0, colon)),
                          std::stod(o.obstruct->substr(colon + 1))}};
    } catch (const std::exception&) {
      throw ConfigError("--obstruct expects numeric T0:T1");
    }
    if (cfg.obstruction->second < cfg.obstruction->first)
      throw ConfigError("--obstruct window must have T0 <= T1");
  }
  validate(cfg);
  return cfg;
}

fs::path prepare_out(const CommonOpts& o) {
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

// Truth resolution shared by simulate/abc: explicit trajectory, fixed orbit,
// or a prior draw kept visible for the whole pass.
TruthModel resolve_truth(const ScenarioConfig& cfg, const Trajectory* traj,
                         Rng& rng) {
  TruthModel truth;
  if (cfg.trajectory_path) {
    truth.trajectory = traj;
  } else if (cfg.fixed_orbit) {
    truth.orbit = *cfg.fixed_orbit;
  } else {
    truth.orbit =
        draw_valid_orbit(cfg.orbit_constants(), cfg.duration_s, rng);
  }
  return truth;
}

int cmd_simulate(const CommonOpts& o) {
  const ScenarioConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const OrbitConstants oc = cfg.orbit_constants();
  const CVec s = cfg.pilot();

  Trajectory traj;
  if (cfg.trajectory_path) traj = load_trajectory(*cfg.trajectory_path);
  Rng draw_rng(derive_seed(cfg.seed, 1000000));
  const TruthModel truth = resolve_truth(cfg, &traj, draw_rng);

  double gamma_v;
  if (truth.trajectory != nullptr) {
    const Vec3 p0 = interpolate_trajectory(*truth.trajectory, 0.0);
    const double rho =
        std::pow(10.0,
                 (cfg.budget.tx_gain_db + cfg.budget.rx_element_gain_db -
                  fspl_db(p0.norm(), cfg.budget.carrier_freq_hz) -
                  atmos_db(rad2deg(std::asin(p0.z() / p0.norm())),
                           cfg.budget)) /
                     20.0) *
        std::sqrt(cfg.budget.tx_power_W);
    const Vec3 d0 = p0 / p0.norm();
    const double x2 = beamformed_template(d0, d0, cfg.hybrid, s).squaredNorm();
    gamma_v = std::pow(10.0, cfg.snr_db / 10.0) *
              (cfg.hybrid.num_subarrays() * s.size()) / (rho * rho * x2);
  } else {
    gamma_v = noise_precision_for_snr(cfg.snr_db, *truth.orbit, oc,
                                      cfg.budget, cfg.hybrid, s);
  }

  // Frames at the baseline cadence, pointed at the true direction; offline
  // consumers read the per-frame pointing from the dump.
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<SignalFrame> frames;
  Trajectory true_track;
  for (double t = 0.0; t <= cfg.duration_s + 1e-9;
       t += cfg.baseline_period_s) {
    const Vec3 d = truth.dir(t, oc);
    SignalFrame f = detail::make_frame(t, truth, cfg, oc, d, gamma_v, s, rng);
    frames.push_back(std::move(f));
  }
  for (double t = 0.0; t <= cfg.duration_s + 1e-9; t += 1.0) {
    true_track.t.push_back(t);
    true_track.pos.push_back(truth.trajectory != nullptr
                                 ? interpolate_trajectory(*truth.trajectory, t)
                                 : position(t, *truth.orbit, oc));
  }

  save_frames((dir / "frames.bin").string(), frames,
              cfg.hybrid.num_subarrays(), gamma_v);
  save_trajectory((dir / "trajectory.csv").string(), true_track);
  std::cout << "wrote " << frames.size() << " frames to "
            << (dir / "frames.bin").string() << "\n";
  return 0;
}

int cmd_estimate(const CommonOpts& o, const std::string& frames_path) {
  const ScenarioConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const OrbitConstants oc = cfg.orbit_constants();
  const CVec s = cfg.pilot();

  const FrameDump dump = load_frames(frames_path);
  if (dump.frames.size() < 2)
    throw ScenarioError("estimation needs at least 2 frames");
  if (dump.pilot_length != s.size())
    throw ConfigError("config pilot length does not match the frame dump");

  // Subsample the dump at the orbit-update cadence.
  std::vector<const SignalFrame*> sel;
  double next_t = dump.frames.front().t;
  for (const SignalFrame& f : dump.frames) {
    if (f.t >= next_t - 1e-9) {
      sel.push_back(&f);
      next_t = f.t + cfg.orbit_update_period_s;
    }
  }
  if (sel.size() < 2) throw ScenarioError("not enough frames at the cadence");

  VmpEstimator vmp(oc, cfg.hybrid, s, dump.gamma_v, cfg.vmp);
  Rng rng(derive_seed(cfg.seed, 2));
  vmp.initialize(*sel[0], *sel[1], sel[0]->pointing, rng);
  for (size_t i = 2; i < sel.size(); ++i) vmp.step(*sel[i]);

  emit_state_history(vmp.history(), (dir / "state_history.csv").string());

  if (cfg.trajectory_path) {
    const Trajectory traj = load_trajectory(*cfg.trajectory_path);
    std::vector<MetricRow> rows;
    const auto& hist = vmp.history();
    for (size_t i = 1; i < hist.size(); ++i) {
      const double t = hist[i].t;
      const Vec3 p = interpolate_trajectory(traj, t);
      const Vec3 est = direction(t, hist[i].gamma, oc);
      rows.push_back({t, "vmp", angular_error(est, p / p.norm()), 1});
    }
    emit_results(rows, (dir / "metric.csv").string());
  }
  std::cout << "estimated " << sel.size() << " updates; history in "
            << (dir / "state_history.csv").string() << "\n";
  return 0;
}

int cmd_baseline(const CommonOpts& o, const std::string& frames_path) {
  const ScenarioConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const CVec s = cfg.pilot();

  const FrameDump dump = load_frames(frames_path);
  if (dump.frames.empty()) throw ScenarioError("frame dump is empty");
  if (dump.pilot_length != s.size())
    throw ConfigError("config pilot length does not match the frame dump");

  std::optional<Trajectory> traj;
  if (cfg.trajectory_path) traj = load_trajectory(*cfg.trajectory_path);

  TwoStepTracker tracker(cfg.hybrid, cfg.music, dump.frames.front().pointing,
                         deg2rad(2.0), deg2rad(0.5), cfg.kf_process_noise);
  std::vector<BaselineRow> rows;
  for (const SignalFrame& f : dump.frames) {
    if (f.t <= 0.0) continue;
    tracker.step(f);
    const Vec3 est = tracker.estimate();
    BaselineRow row;
    row.t = f.t;
    row.az_est = azimuth_of(est);
    row.el_est = elevation_of(est);
    if (traj) {
      const Vec3 p = interpolate_trajectory(*traj, f.t);
      const Vec3 td = p / p.norm();
      row.az_true = azimuth_of(td);
      row.el_true = elevation_of(td);
      row.err_deg = angular_error(est, td);
    }
    rows.push_back(row);
  }
  emit_baseline_history(rows, (dir / "baseline_history.csv").string());
  std::cout << "tracked " << rows.size() << " steps; history in "
            << (dir / "baseline_history.csv").string() << "\n";
  return 0;
}

int cmd_montecarlo(const CommonOpts& o, int runs_override) {
  ScenarioConfig cfg = resolve_config(o);
  if (runs_override > 0) cfg.runs = runs_override;
  const fs::path dir = prepare_out(o);

  const MonteCarloResult result = run_montecarlo(cfg);
  emit_results(result.metric, (dir / "metric.csv").string());
  if (!result.runs.empty()) {
    emit_state_history(result.runs.front().vmp_history,
                       (dir / "state_history_run0.csv").string());
    emit_baseline_history(result.runs.front().baseline_history,
                          (dir / "baseline_history_run0.csv").string());
    Rng ci_rng(derive_seed(cfg.seed, 3));
    std::vector<double> times;
    for (double t = 0.0; t <= cfg.duration_s + 1e-9; t += 25.0)
      times.push_back(t);
    emit_ci_orbits(result.runs.front().final_orbit, cfg.orbit_constants(),
                   times, 100, 0.95, ci_rng,
                   (dir / "ci_orbits_run0.csv").string());
  }
  std::cout << "metric series in " << (dir / "metric.csv").string() << "\n";
  return 0;
}

int cmd_abc(const CommonOpts& o) {
  const ScenarioConfig cfg = resolve_config(o);
  const fs::path dir = prepare_out(o);
  const OrbitConstants oc = cfg.orbit_constants();

  Trajectory traj;
  if (cfg.trajectory_path) traj = load_trajectory(*cfg.trajectory_path);
  Rng draw_rng(derive_seed(cfg.seed, 1000000));
  const TruthModel truth = resolve_truth(cfg, &traj, draw_rng);

  Rng rng(derive_seed(cfg.seed, 4));
  const Vec3 initial_aoa = rotate_direction(
      truth.dir(0.0, oc), deg2rad(cfg.init_aoa_error_deg), rng);
  const std::vector<AbcSample> samples =
      abc_sample(initial_aoa, oc, cfg.vmp.abc, rng);

  std::ofstream out(dir / "abc_samples.csv");
  if (!out) throw IoError("cannot open abc_samples.csv for writing");
  out << "alpha,beta,eta0,fitness\n";
  out << std::setprecision(17);
  for (const AbcSample& a : samples)
    out << a.gamma.alpha << ',' << a.gamma.beta << ',' << a.gamma.eta0 << ','
        << a.fitness << '\n';
  std::cout << "wrote " << samples.size() << " samples to "
            << (dir / "abc_samples.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "LEO satellite tracking: variational orbit estimation and a "
      "MUSIC+Kalman baseline over a partially-connected hybrid array"};
  app.require_subcommand(1);

  CommonOpts sim_o, est_o, base_o, mc_o, abc_o;
  std::string est_frames = "out/frames.bin";
  std::string base_frames = "out/frames.bin";
  int mc_runs = 0;

  CLI::App* sim = app.add_subcommand("simulate", "synthesize a frame dump");
  add_common(sim, &sim_o);
  CLI::App* est =
      app.add_subcommand("estimate", "run the orbit estimator on a dump");
  add_common(est, &est_o);
  est->add_option("--frames", est_frames, "frame dump path");
  CLI::App* base =
      app.add_subcommand("baseline", "run the two-step tracker on a dump");
  add_common(base, &base_o);
  base->add_option("--frames", base_frames, "frame dump path");
  CLI::App* mc =
      app.add_subcommand("montecarlo", "closed-loop Monte Carlo experiment");
  add_common(mc, &mc_o);
  mc->add_option("--runs", mc_runs, "Monte Carlo run count K");
  CLI::App* abc =
      app.add_subcommand("abc", "dump the orbit sampler's output");
  add_common(abc, &abc_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (est->parsed()) return cmd_estimate(est_o, est_frames);
    if (base->parsed()) return cmd_baseline(base_o, base_frames);
    if (mc->parsed()) return cmd_montecarlo(mc_o, mc_runs);
    if (abc->parsed()) return cmd_abc(abc_o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
