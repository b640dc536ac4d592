#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnoise/constants.hpp"
#include "qnoise/core.hpp"

// Time-domain stochastic oracle: exact discretization of the linear Langevin
// equations
//   dX/dt =  Omega P
//   dP/dt = -Omega X - gamma P + sqrt(2 gamma) P_th + g xi_drive
// with band-limited white input light, plus synthesis of the homodyne output
// record D_theta via the input-output relation. Everything downstream of the
// analytic spectra can be cross-checked against PSD estimates of these
// records.

namespace qnoise {

struct TrajectoryConfig {
  double dt;             // [s]
  double duration;       // per-trajectory simulated time [s]
  std::size_t n_traj;    // number of independent trajectories
  std::uint64_t seed;    // reproducibility seed
  bool record_x = true;
  bool record_p = false;
  std::vector<double> thetas;  // homodyne lab angles to synthesize
  double eta_det = 1.0;        // detection efficiency for the theta channels

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("TrajectoryConfig: dt must be > 0");
    if (!(duration > 0.0))
      throw std::invalid_argument("TrajectoryConfig: duration must be > 0");
    if (n_traj < 1) throw std::invalid_argument("TrajectoryConfig: n_traj must be >= 1");
    if (!(eta_det > 0.0) || eta_det > 1.0)
      throw std::invalid_argument("TrajectoryConfig: eta_det must be in (0, 1]");
  }

  std::size_t steps_per_trajectory() const {
    return static_cast<std::size_t>(std::floor(duration / dt));
  }
};

struct TimeSeries {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_traj = 0;
  std::size_t samples_per_trajectory = 0;
  bool short_duration = false;  // duration < 1000/gamma, statistics will be poor
  std::vector<std::string> channel_names;
  // channel-major storage; each channel holds the trajectories back to back
  std::vector<std::vector<double>> channels;

  void validate() const {
    if (channel_names.size() != channels.size())
      throw std::invalid_argument("TimeSeries: channel name/data mismatch");
    for (const auto& c : channels)
      if (c.size() != n_traj * samples_per_trajectory)
        throw std::invalid_argument("TimeSeries: channel length mismatch");
  }

  const std::vector<double>& channel(const std::string& name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
      if (channel_names[i] == name) return channels[i];
    throw std::invalid_argument("TimeSeries: no channel named " + name);
  }

  // one trajectory's worth of a channel, for segment-respecting PSD feeds
  std::vector<double> trajectory_slice(const std::string& name,
                                       std::size_t traj) const {
    const auto& c = channel(name);
    if (traj >= n_traj) throw std::out_of_range("TimeSeries: trajectory index");
    return {c.begin() + static_cast<std::ptrdiff_t>(traj * samples_per_trajectory),
            c.begin() + static_cast<std::ptrdiff_t>((traj + 1) * samples_per_trajectory)};
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// sub-seed for trajectory i, independent of scheduling
inline std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t i) {
  std::uint64_t s = seed;
  std::uint64_t z = 0;
  for (std::size_t k = 0; k <= i; ++k) z = splitmix64(s);
  return z;
}

struct StepOperator {
  // state propagator Phi = exp(A dt) for A = [[0, Omega], [-Omega, -gamma]]
  double p11, p12, p21, p22;
  // response of the state to a unit force on P held constant over dt:
  // m = A^-1 (Phi - 1) e2
  double m1, m2;
  // Cholesky factor of the thermal increment covariance
  // (n_th + 1/2)(1 - Phi Phi^T)
  double l11, l21, l22;

  static StepOperator from(const OscillatorParams& osc, double dt) {
    const double om = osc.omega, g = osc.gamma;
    if (!(g < 2.0 * om))
      throw std::invalid_argument("simulate: overdamped oscillator not supported");
    const double omd = std::sqrt(om * om - 0.25 * g * g);
    const double e = std::exp(-0.5 * g * dt);
    const double c = std::cos(omd * dt), s = std::sin(omd * dt) / omd;
    StepOperator op{};
    op.p11 = e * (c + 0.5 * g * s);
    op.p12 = e * om * s;
    op.p21 = -e * om * s;
    op.p22 = e * (c - 0.5 * g * s);
    // A^-1 = (1/Omega^2) [[-gamma, -Omega], [Omega, 0]]
    const double q1 = op.p12, q2 = op.p22 - 1.0;  // (Phi - 1) e2
    op.m1 = (-g * q1 - om * q2) / (om * om);
    op.m2 = q1 / om;
    // 1 - Phi Phi^T, scaled by the stationary variance n_th + 1/2
    const double v = osc.n_th + 0.5;
    const double c11 = v * (1.0 - op.p11 * op.p11 - op.p12 * op.p12);
    const double c21 = v * (-(op.p11 * op.p21 + op.p12 * op.p22));
    const double c22 = v * (1.0 - op.p21 * op.p21 - op.p22 * op.p22);
    op.l11 = std::sqrt(std::max(0.0, c11));
    op.l21 = op.l11 > 0.0 ? c21 / op.l11 : 0.0;
    op.l22 = std::sqrt(std::max(0.0, c22 - op.l21 * op.l21));
    return op;
  }
};

} // namespace detail

// Upper bound on the step size: at least 100 steps per oscillation.
inline double max_time_step(const OscillatorParams& osc) {
  return 0.01 * two_pi / osc.omega;
}

// Integrates one trajectory and appends its samples to the provided channel
// buffers (X, P, then one output record per configured theta). The caller
// owns channel layout; simulate() below assembles a TimeSeries from it.
inline void simulate_trajectory(const OscillatorParams& osc,
                                const CouplingConfig& cpl,
                                const TrajectoryConfig& cfg,
                                std::size_t traj_index,
                                std::vector<std::vector<double>*>& sinks) {
  const std::size_t n = cfg.steps_per_trajectory();
  const detail::StepOperator op = detail::StepOperator::from(osc, cfg.dt);
  std::mt19937_64 rng(detail::trajectory_seed(cfg.seed, traj_index));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sigma_light = std::sqrt(0.5 / cfg.dt);
  const double g = cpl.g;
  const double root4g = std::sqrt(4.0 * cpl.measurement_rate());
  const double eta = cfg.eta_det;
  const double a_sig = std::sqrt(eta), a_vac = std::sqrt(1.0 - eta);
  // draw the state from the thermal stationary distribution so no burn-in
  // is needed at g = 0; with coupling the light-driven part still needs a
  // few damping times, which the duration recommendation covers
  const double s0 = std::sqrt(osc.n_th + 0.5);
  double x = s0 * unit(rng), p = s0 * unit(rng);

  // thetas use the same convention as the analytic output spectrum: measured
  // from the drive quadrature toward the signal-carrying one. Lab-frame
  // angles must be converted with signal_frame_angle before simulating.
  std::vector<double> cth(cfg.thetas.size()), sth(cfg.thetas.size());
  for (std::size_t k = 0; k < cfg.thetas.size(); ++k) {
    cth[k] = std::cos(cfg.thetas[k]);
    sth[k] = std::sin(cfg.thetas[k]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double xi_drive = sigma_light * unit(rng);
    const double xi_other = sigma_light * unit(rng);
    const double th1 = unit(rng), th2 = unit(rng);
    const double x_old = x;
    // exact linear-SDE step: propagate, add the piecewise-constant light
    // force response and the exact thermal increment. The drive enters with
    // +g, the sign convention of the analytic output spectrum.
    const double fx = g * xi_drive;
    const double nx = op.p11 * x + op.p12 * p + op.m1 * fx + op.l11 * th1;
    const double np = op.p21 * x + op.p22 * p + op.m2 * fx +
                      op.l21 * th1 + op.l22 * th2;
    x = nx;
    p = np;
    if (!std::isfinite(x) || !std::isfinite(p))
      throw std::runtime_error("simulate: non-finite state at step " +
                               std::to_string(i) + " of trajectory " +
                               std::to_string(traj_index));
    const double x_mid = 0.5 * (x_old + x);
    std::size_t sink = 0;
    if (cfg.record_x) sinks[sink++]->push_back(x);
    if (cfg.record_p) sinks[sink++]->push_back(p);
    for (std::size_t k = 0; k < cfg.thetas.size(); ++k) {
      double d = cth[k] * xi_drive + sth[k] * (xi_other + root4g * x_mid);
      if (eta < 1.0) d = a_sig * d + a_vac * sigma_light * unit(rng);
      sinks[sink++]->push_back(d);
    }
  }
}

inline TimeSeries simulate(const OscillatorParams& osc,
                           const CouplingConfig& cpl,
                           const TrajectoryConfig& cfg) {
  cfg.validate();
  if (cfg.dt > max_time_step(osc))
    throw std::invalid_argument(
        "simulate: dt = " + std::to_string(cfg.dt) +
        " s exceeds the stability bound 0.01 * 2 pi / Omega = " +
        std::to_string(max_time_step(osc)) + " s");
  TimeSeries ts;
  ts.dt = cfg.dt;
  ts.seed = cfg.seed;
  ts.n_traj = cfg.n_traj;
  ts.samples_per_trajectory = cfg.steps_per_trajectory();
  ts.short_duration = cfg.duration * osc.gamma < 1000.0;
  if (cfg.record_x) ts.channel_names.push_back("X");
  if (cfg.record_p) ts.channel_names.push_back("P");
  for (double th : cfg.thetas) {
    char name[32];
    std::snprintf(name, sizeof(name), "D_%.4gpi", th / pi);
    ts.channel_names.push_back(name);
  }
  ts.channels.assign(ts.channel_names.size(), {});
  for (auto& c : ts.channels)
    c.reserve(ts.n_traj * ts.samples_per_trajectory);
  std::vector<std::vector<double>*> sinks;
  for (auto& c : ts.channels) sinks.push_back(&c);
  for (std::size_t t = 0; t < cfg.n_traj; ++t)
    simulate_trajectory(osc, cpl, cfg, t, sinks);
  ts.validate();
  return ts;
}

} // namespace qnoise
