#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "leotrack/abc.hpp"
#include "leotrack/array.hpp"
#include "leotrack/common.hpp"
#include "leotrack/link.hpp"
#include "leotrack/orbit.hpp"
#include "leotrack/simplex.hpp"
#include "leotrack/vmp.hpp"
#include "leotrack/twostep.hpp"

namespace leo {

// Full experiment description. Defaults reproduce the reference setup:
// 550 km circular orbit, 8x8 subarrays of 4x4 elements at 28 GHz, 5 W
// transmit, Zadoff-Chu pilot 63/29, 20 s orbit updates, 5 s baseline cadence.
struct ScenarioConfig {
  double altitude_m = 550e3;
  std::optional<OrbitParams> fixed_orbit;     // draw from prior when unset
  std::optional<std::string> trajectory_path; // external truth when set

  HybridConfig hybrid;
  LinkBudget budget;

  int pilot_length = 63;
  int pilot_root = 29;

  double snr_db = 0.0;
  double duration_s = 500.0;
  double orbit_update_period_s = 20.0;
  double baseline_period_s = 5.0;
  std::optional<std::pair<double, double>> obstruction;  // [t0, t1] seconds
  double init_aoa_error_deg = 1.0;

  int runs = 10;                 // Monte Carlo count K
  std::uint64_t seed = 1;

  VmpConfig vmp;
  MusicConfig music;
  double kf_process_noise = 1e-8;

  OrbitConstants orbit_constants() const {
    return orbit_constants_for_altitude(altitude_m);
  }
  CVec pilot() const { return zadoff_chu(pilot_length, pilot_root); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + v + "'");
  }
}

}  // namespace detail

inline AtmosTable load_atmos_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  AtmosTable tab;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double elev, att;
    char sep;
    if (!(row >> elev)) throw ConfigError("bad attenuation row: " + line);
    row >> std::ws;
    if (row.peek() == ',') row >> sep;
    if (!(row >> att)) throw ConfigError("bad attenuation row: " + line);
    tab.emplace_back(elev, att);
  }
  if (tab.empty()) throw ConfigError("empty attenuation table: " + path);
  return tab;
}

inline void validate(const ScenarioConfig& cfg);

// INI-style config: [section] headers, key = value pairs, # or ; comments.
// Unknown keys are errors so typos do not silently fall back to defaults.
inline ScenarioConfig parse_config(std::istream& in,
                                   const std::string& origin = "<config>") {
  ScenarioConfig cfg;
  std::string section = "run";
  std::string line;
  int lineno = 0;
  std::optional<double> obstruct_t0, obstruct_t1;
  std::optional<double> fixed_alpha, fixed_beta, fixed_eta0;

  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = section + "." + detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));

    if (key == "orbit.altitude_m") cfg.altitude_m = detail::to_double(key, val);
    else if (key == "orbit.alpha") fixed_alpha = detail::to_double(key, val);
    else if (key == "orbit.beta") fixed_beta = detail::to_double(key, val);
    else if (key == "orbit.eta0") fixed_eta0 = detail::to_double(key, val);
    else if (key == "orbit.trajectory") cfg.trajectory_path = val;
    else if (key == "array.sub_rows") cfg.hybrid.sub_rows = static_cast<int>(detail::to_long(key, val));
    else if (key == "array.sub_cols") cfg.hybrid.sub_cols = static_cast<int>(detail::to_long(key, val));
    else if (key == "array.elem_rows") cfg.hybrid.elem_rows = static_cast<int>(detail::to_long(key, val));
    else if (key == "array.elem_cols") cfg.hybrid.elem_cols = static_cast<int>(detail::to_long(key, val));
    else if (key == "array.carrier_freq_hz") {
      cfg.hybrid.carrier_freq_hz = detail::to_double(key, val);
      cfg.budget.carrier_freq_hz = cfg.hybrid.carrier_freq_hz;
    }
    else if (key == "link.tx_power_w") cfg.budget.tx_power_W = detail::to_double(key, val);
    else if (key == "link.tx_gain_db") cfg.budget.tx_gain_db = detail::to_double(key, val);
    else if (key == "link.rx_element_gain_db") cfg.budget.rx_element_gain_db = detail::to_double(key, val);
    else if (key == "link.exceedance_p") cfg.budget.exceedance_p = detail::to_double(key, val);
    else if (key == "link.atmos_table") cfg.budget.atmos_table = load_atmos_table(val);
    else if (key == "signal.pilot_length") cfg.pilot_length = static_cast<int>(detail::to_long(key, val));
    else if (key == "signal.pilot_root") cfg.pilot_root = static_cast<int>(detail::to_long(key, val));
    else if (key == "estimator.n_samp") cfg.vmp.abc.n_samp = static_cast<int>(detail::to_long(key, val));
    else if (key == "estimator.max_trials") cfg.vmp.abc.max_trials = detail::to_long(key, val);
    else if (key == "estimator.n_starts") cfg.vmp.n_starts = static_cast<int>(detail::to_long(key, val));
    else if (key == "estimator.kde_bandwidth") cfg.vmp.kde_bandwidth = detail::to_double(key, val);
    else if (key == "estimator.window_rho") cfg.vmp.window_rho = detail::to_double(key, val);
    else if (key == "estimator.gamma_p") cfg.vmp.gamma_p = detail::to_double(key, val);
    else if (key == "estimator.update_period_s") cfg.orbit_update_period_s = detail::to_double(key, val);
    else if (key == "baseline.period_s") cfg.baseline_period_s = detail::to_double(key, val);
    else if (key == "baseline.half_width_deg") cfg.music.half_width_deg = detail::to_double(key, val);
    else if (key == "baseline.resolution_deg") cfg.music.resolution_deg = detail::to_double(key, val);
    else if (key == "baseline.process_noise") cfg.kf_process_noise = detail::to_double(key, val);
    else if (key == "run.snr_db") cfg.snr_db = detail::to_double(key, val);
    else if (key == "run.duration_s") cfg.duration_s = detail::to_double(key, val);
    else if (key == "run.obstruct_t0") obstruct_t0 = detail::to_double(key, val);
    else if (key == "run.obstruct_t1") obstruct_t1 = detail::to_double(key, val);
    else if (key == "run.init_aoa_error_deg") cfg.init_aoa_error_deg = detail::to_double(key, val);
    else if (key == "run.runs") cfg.runs = static_cast<int>(detail::to_long(key, val));
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(detail::to_long(key, val));
    else
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": unknown key " + key);
  }

  if (fixed_alpha || fixed_beta || fixed_eta0) {
    if (!(fixed_alpha && fixed_beta && fixed_eta0))
      throw ConfigError("orbit.alpha/beta/eta0 must be given together");
    cfg.fixed_orbit = OrbitParams{*fixed_alpha, *fixed_beta, *fixed_eta0};
  }
  if (obstruct_t0 || obstruct_t1) {
    if (!(obstruct_t0 && obstruct_t1) || *obstruct_t1 < *obstruct_t0)
      throw ConfigError("obstruct_t0/obstruct_t1 must form a valid window");
    cfg.obstruction = {{*obstruct_t0, *obstruct_t1}};
  }
  validate(cfg);
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

inline void validate(const ScenarioConfig& cfg) {
  if (cfg.duration_s <= 0) throw ConfigError("duration_s must be positive");
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.orbit_update_period_s <= 0 || cfg.baseline_period_s <= 0)
    throw ConfigError("cadences must be positive");
  if (cfg.hybrid.sub_rows < 1 || cfg.hybrid.sub_cols < 1 ||
      cfg.hybrid.elem_rows < 1 || cfg.hybrid.elem_cols < 1)
    throw ConfigError("array dimensions must be >= 1");
  if (cfg.vmp.window_rho <= 0.0 || cfg.vmp.window_rho > 1.0)
    throw ConfigError("window_rho must be in (0, 1]");
  if (cfg.init_aoa_error_deg < 0.0)
    throw ConfigError("init_aoa_error_deg must be >= 0");
  zadoff_chu(cfg.pilot_length, cfg.pilot_root);  // validates coprimality
}

// Truth orbits for Monte Carlo runs: prior draws kept only when the pass is
// visible over the whole duration (1 s grid) and rising at t=0.
inline OrbitParams draw_valid_orbit(const OrbitConstants& oc,
                                    double duration_s, Rng& rng,
                                    long max_draws = 100000) {
  for (long i = 0; i < max_draws; ++i) {
    const OrbitParams g = sample_prior(rng);
    if (polar_rate(0.0, g, oc) >= 0.0) continue;
    bool ok = true;
    for (double t = 0.0; t <= duration_s && ok; t += 1.0)
      ok = is_visible(t, g, oc);
    if (ok) return g;
  }
  throw ScenarioError("no orbit visible for the full duration in " +
                      std::to_string(max_draws) + " prior draws");
}

// Perturb a unit vector by a fixed angle about a random orthogonal axis;
// models the error of the externally supplied initial AoA.
inline Vec3 rotate_direction(const Vec3& d, double angle_rad, Rng& rng) {
  if (angle_rad == 0.0) return d;
  Vec3 r;
  do {
    r = Vec3{rng.normal(), rng.normal(), rng.normal()};
    r -= r.dot(d) * d;
  } while (r.norm() < 1e-9);
  r.normalize();
  return std::cos(angle_rad) * d + std::sin(angle_rad) * r;
}

}  // namespace leo
