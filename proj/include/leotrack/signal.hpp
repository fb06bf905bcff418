#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "leotrack/array.hpp"
#include "leotrack/common.hpp"
#include "leotrack/link.hpp"
#include "leotrack/orbit.hpp"
#include "leotrack/rng.hpp"

namespace leo {

// Constant-amplitude Zadoff-Chu pilot. Odd lengths use k(k+1), even k^2.
inline CVec zadoff_chu(int length, int root) {
  if (length < 1) throw ConfigError("pilot length must be >= 1");
  if (std::gcd(root, length) != 1)
    throw ConfigError("Zadoff-Chu root not coprime with length");
  CVec s(length);
  for (int k = 0; k < length; ++k) {
    const double num = (length % 2 == 1)
                           ? static_cast<double>(k) * (k + 1)
                           : static_cast<double>(k) * k;
    s[k] = std::polar(1.0, -kPi * root * num / length);
  }
  return s;
}

// One received recording: M*N_s stacked post-combining samples.
struct SignalFrame {
  double t = 0.0;
  CVec y;
  Vec3 pointing = Vec3::UnitZ();  // analog combining direction for this frame
  bool obstructed = false;        // ground truth only
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec3> pos;

  size_t size() const { return t.size(); }
};

inline Vec3 interpolate_trajectory(const Trajectory& traj, double t) {
  if (traj.size() < 2) throw ConfigError("trajectory needs >= 2 samples");
  if (t < traj.t.front() || t > traj.t.back())
    throw OutOfRange("time outside trajectory span");
  const auto it = std::lower_bound(traj.t.begin(), traj.t.end(), t);
  if (it == traj.t.begin()) return traj.pos.front();
  const size_t i = static_cast<size_t>(it - traj.t.begin());
  const double t0 = traj.t[i - 1], t1 = traj.t[i];
  const double w = (t - t0) / (t1 - t0);
  return traj.pos[i - 1] * (1.0 - w) + traj.pos[i] * w;
}

namespace detail {

inline CVec white_noise(Eigen::Index n, double gamma_v, Rng& rng) {
  CVec v(n);
  const double scale = 1.0 / std::sqrt(gamma_v);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.cnormal();
  return v;
}

}  // namespace detail

// y = h * x(direction) + v, with h drawn from the link budget and v white
// complex Gaussian with per-component precision gamma_v.
inline SignalFrame synthesize_frame(double t, const OrbitParams& g,
                                    const OrbitConstants& oc,
                                    const Vec3& pointing,
                                    const HybridConfig& hybrid,
                                    const LinkBudget& budget, double gamma_v,
                                    const CVec& s, Rng& rng) {
  SignalFrame f;
  f.t = t;
  f.pointing = pointing;
  const ChannelDraw ch = draw_channel(t, g, oc, budget, rng);
  const CVec x = template_of_gamma(t, g, oc, pointing, hybrid, s);
  f.y = ch.h * x + detail::white_noise(x.size(), gamma_v, rng);
  return f;
}

// Trajectory-driven variant: direction and range interpolated from samples.
inline SignalFrame synthesize_frame(double t, const Trajectory& traj,
                                    const Vec3& pointing,
                                    const HybridConfig& hybrid,
                                    const LinkBudget& budget, double gamma_v,
                                    const CVec& s, Rng& rng) {
  const Vec3 p = interpolate_trajectory(traj, t);
  if (p.z() <= 0.0) throw BelowHorizon("trajectory below horizon");
  SignalFrame f;
  f.t = t;
  f.pointing = pointing;
  const double dist = p.norm();
  const double elev = rad2deg(std::asin(p.z() / dist));
  const double gain_db = budget.tx_gain_db + budget.rx_element_gain_db -
                         fspl_db(dist, budget.carrier_freq_hz) -
                         atmos_db(elev, budget);
  const double rho =
      std::pow(10.0, gain_db / 20.0) * std::sqrt(budget.tx_power_W);
  const cplx h = std::polar(rho, rng.uniform(0.0, kTwoPi));
  const CVec x = beamformed_template(p / dist, pointing, hybrid, s);
  f.y = h * x + detail::white_noise(x.size(), gamma_v, rng);
  return f;
}

// Replace the payload with fresh noise inside [t0, t1] (blockage window).
inline SignalFrame obstruct(const SignalFrame& frame, double t0, double t1,
                            double gamma_v, Rng& rng) {
  if (frame.t < t0 || frame.t > t1) return frame;
  SignalFrame f = frame;
  f.y = detail::white_noise(frame.y.size(), gamma_v, rng);
  f.obstructed = true;
  return f;
}

// ---- persistence ----

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t_seconds,x_m,y_m,z_m\n";
  out.precision(17);
  for (size_t i = 0; i < traj.size(); ++i)
    out << traj.t[i] << ',' << traj.pos[i].x() << ',' << traj.pos[i].y()
        << ',' << traj.pos[i].z() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Trajectory traj;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trajectory file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, x, y, z;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &z) != 4)
      throw ConfigError("bad trajectory row: " + line);
    if (!traj.t.empty() && t <= traj.t.back())
      throw ConfigError("trajectory times not strictly increasing");
    traj.t.push_back(t);
    traj.pos.emplace_back(x, y, z);
  }
  if (traj.size() < 2) throw ConfigError("trajectory needs >= 2 samples");
  return traj;
}

namespace detail {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr std::uint32_t kFrameMagic = 0x464f454cu;  // "LEOF"
inline constexpr std::uint16_t kFrameVersion = 1;

// Binary frame dump: little-endian, complex64 (float32 re/im) samples. Each
// record carries the frame geometry needed to reprocess it offline.
inline void save_frames(const std::string& path,
                        const std::vector<SignalFrame>& frames, int n_sub,
                        double gamma_v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  detail::put<std::uint32_t>(out, kFrameMagic);
  detail::put<std::uint16_t>(out, kFrameVersion);
  detail::put<std::uint16_t>(out, 0);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
  detail::put<double>(out, gamma_v);
  for (const SignalFrame& f : frames) {
    const std::uint32_t ns =
        n_sub > 0 ? static_cast<std::uint32_t>(f.y.size() / n_sub) : 0;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(n_sub));
    detail::put<std::uint32_t>(out, ns);
    detail::put<double>(out, f.t);
    detail::put<std::uint8_t>(out, f.obstructed ? 1 : 0);
    detail::put<double>(out, f.pointing.x());
    detail::put<double>(out, f.pointing.y());
    detail::put<double>(out, f.pointing.z());
    for (Eigen::Index i = 0; i < f.y.size(); ++i) {
      detail::put<float>(out, static_cast<float>(f.y[i].real()));
      detail::put<float>(out, static_cast<float>(f.y[i].imag()));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

struct FrameDump {
  std::vector<SignalFrame> frames;
  int num_subarrays = 0;
  int pilot_length = 0;
  double gamma_v = 0.0;
};

inline FrameDump load_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (detail::get<std::uint32_t>(in) != kFrameMagic)
    throw ConfigError("not a frame dump: " + path);
  if (detail::get<std::uint16_t>(in) != kFrameVersion)
    throw ConfigError("unsupported frame dump version");
  detail::get<std::uint16_t>(in);
  const std::uint32_t count = detail::get<std::uint32_t>(in);
  FrameDump dump;
  dump.gamma_v = detail::get<double>(in);
  dump.frames.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t m = detail::get<std::uint32_t>(in);
    const std::uint32_t ns = detail::get<std::uint32_t>(in);
    SignalFrame f;
    f.t = detail::get<double>(in);
    f.obstructed = detail::get<std::uint8_t>(in) != 0;
    f.pointing.x() = detail::get<double>(in);
    f.pointing.y() = detail::get<double>(in);
    f.pointing.z() = detail::get<double>(in);
    f.y.resize(static_cast<Eigen::Index>(m) * ns);
    for (Eigen::Index i = 0; i < f.y.size(); ++i) {
      const float re = detail::get<float>(in);
      const float im = detail::get<float>(in);
      f.y[i] = cplx(re, im);
    }
    if (!in) throw IoError("truncated frame dump: " + path);
    dump.num_subarrays = static_cast<int>(m);
    dump.pilot_length = static_cast<int>(ns);
    dump.frames.push_back(std::move(f));
  }
  return dump;
}

}  // namespace leo
