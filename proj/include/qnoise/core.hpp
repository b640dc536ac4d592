#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include "qnoise/constants.hpp"
#include "qnoise/integrate.hpp"
#include "qnoise/spectrum.hpp"

// General single-oscillator light-interface model: susceptibility, thermal
// and backaction spectra, output quadrature spectra with homodyne angle and
// detection loss, band-integrated variances, and the hybrid-coupling
// calculator.
//
// Conventions used throughout:
//   - angular frequencies [rad/s] everywhere inside the library;
//   - two-sided symmetrized PSDs, vacuum light quadrature = 1/2;
//   - the homodyne angle theta is measured from the signal-free light
//     quadrature toward the signal-carrying one, which makes the output
//     spectrum independent of which physical quadrature drives the
//     oscillator.

namespace qnoise {

using complexd = std::complex<double>;

struct OscillatorParams {
  double omega;  // resonance [rad/s]
  double gamma;  // energy decay rate [rad/s]
  double n_th;   // thermal bath occupation

  OscillatorParams(double omega_, double gamma_, double n_th_)
      : omega(omega_), gamma(gamma_), n_th(n_th_) {
    if (!(omega > 0.0)) throw std::invalid_argument("OscillatorParams: omega must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("OscillatorParams: gamma must be > 0");
    if (n_th < 0.0) throw std::invalid_argument("OscillatorParams: n_th must be >= 0");
  }

  double gamma_th() const { return gamma * (n_th + 0.5); }
};

// Bose occupation of a bath at temperature T [K] seen by a mode at omega.
inline double thermal_occupation(double omega, double temperature_k) {
  if (!(omega > 0.0) || !(temperature_k > 0.0))
    throw std::invalid_argument("thermal_occupation: omega and T must be > 0");
  return 1.0 / std::expm1(hbar * omega / (k_boltzmann * temperature_k));
}

// Which input light quadrature drives the oscillator and which output
// quadrature carries the sqrt(4*Gamma)*X signal.
enum class CouplingGeometry {
  DriveAmplitude_SignalPhase,  // H ~ g X_L X  (optomechanics)
  DrivePhase_SignalAmplitude   // H ~ g P_L X  (Faraday spin interface)
};

struct CouplingConfig {
  double g;  // coupling strength [s^-1/2]
  CouplingGeometry geometry;

  CouplingConfig(double g_, CouplingGeometry geom)
      : g(g_), geometry(geom) {
    if (g < 0.0) throw std::invalid_argument("CouplingConfig: g must be >= 0");
  }

  static CouplingConfig from_measurement_rate(double gamma_meas, CouplingGeometry geom) {
    if (gamma_meas < 0.0)
      throw std::invalid_argument("CouplingConfig: measurement rate must be >= 0");
    return CouplingConfig(2.0 * std::sqrt(gamma_meas), geom);
  }

  double measurement_rate() const { return 0.25 * g * g; }
};

struct DetectionConfig {
  double theta;    // homodyne angle [rad]
  double eta_det;  // detection efficiency in (0, 1]

  DetectionConfig(double theta_, double eta)
      : theta(theta_), eta_det(eta) {
    if (!(eta_det > 0.0) || eta_det > 1.0)
      throw std::invalid_argument("DetectionConfig: eta_det must be in (0, 1]");
  }

  // S_DD is pi-periodic in theta; reduce to [0, pi) for reporting.
  double theta_reduced() const {
    double t = std::fmod(theta, pi);
    if (t < 0.0) t += pi;
    return t;
  }
};

// chi(w) = Omega / (Omega^2 - w^2 - i*gamma*w); satisfies chi(-w) = conj(chi(w)).
inline complexd susceptibility(double omega, const OscillatorParams& osc) {
  return osc.omega /
         complexd(osc.omega * osc.omega - omega * omega, -osc.gamma * omega);
}

// Displacement PSD S_XX = 2|chi|^2 (gamma_th + Gamma), even in omega.
inline double s_xx(double omega, const OscillatorParams& osc, const CouplingConfig& cpl) {
  const double chi2 = std::norm(susceptibility(omega, osc));
  return 2.0 * chi2 * (osc.gamma_th() + cpl.measurement_rate());
}

// Beam-splitter detection loss: mixes the signal with vacuum at level 1/2.
inline double apply_detection_loss(double psd, double eta_det) {
  if (!(eta_det > 0.0) || eta_det > 1.0)
    throw std::invalid_argument("apply_detection_loss: eta_det must be in (0, 1]");
  if (psd < 0.0) throw std::invalid_argument("apply_detection_loss: psd must be >= 0");
  return eta_det * psd + (1.0 - eta_det) * 0.5;
}

// Maps a lab-frame homodyne angle (measured from X_L toward P_L) into the
// signal frame, where 0 is the signal-free quadrature.
inline double signal_frame_angle(double theta_lab, CouplingGeometry geometry) {
  return geometry == CouplingGeometry::DriveAmplitude_SignalPhase
             ? theta_lab
             : 0.5 * pi - theta_lab;
}

struct OutputSpectrumComponents {
  double shot;          // loss-adjusted shot floor
  double interference;  // drive-signal correlation term
  double signal;        // oscillator signal term
  double total() const { return shot + interference + signal; }
};

// Output light quadrature PSD
//   S = 1/2 + 4*Gamma * ( Re[chi] cos(theta) sin(theta) + S_XX sin^2(theta) ),
// followed by the detection-loss map. Sign convention: the drive noise and
// the imprinted signal enter with the same sign, the convention realized by
// the detuned-cavity model; the opposite choice is the theta -> -theta
// mirror and carries identical squeezing depth.
inline OutputSpectrumComponents s_output_quadrature_components(
    double omega, const OscillatorParams& osc, const CouplingConfig& cpl,
    const DetectionConfig& det) {
  const double gm = cpl.measurement_rate();
  const double s = std::sin(det.theta), c = std::cos(det.theta);
  const double interference =
      4.0 * gm * std::real(susceptibility(omega, osc)) * c * s;
  const double signal = 4.0 * gm * s_xx(omega, osc, cpl) * s * s;
  return {apply_detection_loss(0.5, det.eta_det),
          det.eta_det * interference, det.eta_det * signal};
}

inline double s_output_quadrature(double omega, const OscillatorParams& osc,
                                  const CouplingConfig& cpl,
                                  const DetectionConfig& det) {
  return s_output_quadrature_components(omega, osc, cpl, det).total();
}

// Symmetrized 2x2 spectral matrix of the lossless output quadratures:
// diagonal S_DD at theta = 0 and pi/2, off-diagonal from the interference
// term. Its eigenvalue product is >= 1/4 for any physical state.
struct SpectralMatrix {
  double s00, s90, cross;
  double eigen_product() const { return s00 * s90 - cross * cross; }
};

inline SpectralMatrix output_spectral_matrix(double omega,
                                             const OscillatorParams& osc,
                                             const CouplingConfig& cpl) {
  const double gm = cpl.measurement_rate();
  return {0.5, 0.5 + 4.0 * gm * s_xx(omega, osc, cpl),
          2.0 * gm * std::real(susceptibility(omega, osc))};
}

inline double cooperativity(double gamma_meas, double gamma_th) {
  if (!(gamma_th > 0.0))
    throw std::invalid_argument("cooperativity: gamma_th must be > 0");
  if (gamma_meas < 0.0)
    throw std::invalid_argument("cooperativity: measurement rate must be >= 0");
  return gamma_meas / gamma_th;
}

// var = 2 * integral of S over [center - bw/2, center + bw/2] d(omega)/(2 pi),
// adaptive quadrature on an analytic model.
inline double variance_band(const std::function<double(double)>& psd,
                            double center, double bandwidth,
                            double rel_tol = 1e-6) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("variance_band: bandwidth must be > 0");
  auto r = integrate_adaptive(psd, center - 0.5 * bandwidth,
                              center + 0.5 * bandwidth, rel_tol);
  return 2.0 * r.value / two_pi;
}

// Trapezoidal variant for sampled spectra.
inline double variance_band(const Spectrum& spec, double center, double bandwidth) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("variance_band: bandwidth must be > 0");
  const double lo = center - 0.5 * bandwidth, hi = center + 0.5 * bandwidth;
  if (lo < spec.grid.front() || hi > spec.grid.back())
    throw std::invalid_argument(
        "variance_band: requested band [" + std::to_string(lo) + ", " +
        std::to_string(hi) + "] rad/s exceeds sampled grid [" +
        std::to_string(spec.grid.front()) + ", " +
        std::to_string(spec.grid.back()) + "] rad/s");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < spec.grid.size(); ++i) {
    const double a = std::max(lo, spec.grid[i]);
    const double b = std::min(hi, spec.grid[i + 1]);
    if (b <= a) continue;
    // linear interpolation of the integrand at the clipped endpoints
    const double w = spec.grid[i + 1] - spec.grid[i];
    const double va = spec.values[i] + (spec.values[i + 1] - spec.values[i]) * (a - spec.grid[i]) / w;
    const double vb = spec.values[i] + (spec.values[i + 1] - spec.values[i]) * (b - spec.grid[i]) / w;
    acc += 0.5 * (va + vb) * (b - a);
  }
  return 2.0 * acc / two_pi;
}

// Full-axis variance of an even PSD peaked at osc.omega: integrates over
// [0, cutoff] with the resonance split out so the adaptive rule cannot step
// over a narrow peak. var = 2 * int_0^inf S d(omega)/(2 pi).
inline double variance_full_axis(const std::function<double(double)>& psd,
                                 const OscillatorParams& osc,
                                 double rel_tol = 1e-6) {
  const double w_peak = 200.0 * osc.gamma;
  const double lo = std::max(0.0, osc.omega - w_peak);
  const double hi = osc.omega + w_peak;
  const double cutoff = 20.0 * osc.omega;
  double acc = 0.0;
  if (lo > 0.0) acc += integrate_adaptive(psd, 0.0, lo, rel_tol).value;
  acc += integrate_adaptive(psd, lo, hi, rel_tol).value;
  acc += integrate_adaptive(psd, hi, cutoff, rel_tol).value;
  return 2.0 * acc / two_pi;
}

// Closed-form band variance of the spin-style measurement (shot + projection
// + backaction), with the shot term referred through the detection loss:
//   var = bw/(2 pi eta) + 2 Gamma (1 + 2 Gamma / gamma_s).
// Valid for bandwidth >> gamma_s (caller's responsibility).
inline double spin_style_variance(double gamma_eff, double gamma_s,
                                  double bandwidth, double eta_det) {
  if (gamma_eff < 0.0) throw std::invalid_argument("spin_style_variance: Gamma_eff must be >= 0");
  if (!(gamma_s > 0.0)) throw std::invalid_argument("spin_style_variance: gamma_s must be > 0");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("spin_style_variance: bandwidth must be > 0");
  if (!(eta_det > 0.0) || eta_det > 1.0)
    throw std::invalid_argument("spin_style_variance: eta_det must be in (0, 1]");
  return bandwidth / (two_pi * eta_det) +
         2.0 * gamma_eff * (1.0 + 2.0 * gamma_eff / gamma_s);
}

// ---- hybrid spin-membrane coupling figures of merit ----

struct HybridParams {
  double gamma_th_s = 0.0, gamma_th_m = 0.0;  // thermal decoherence [rad/s]
  double gamma_s_meas = 0.0, gamma_m_meas = 0.0;  // measurement rates [rad/s]
  double gamma_ba_s = 0.0, gamma_ba_m = 0.0;  // residual backaction [rad/s]

  void validate() const {
    for (double v : {gamma_th_s, gamma_th_m, gamma_s_meas, gamma_m_meas,
                     gamma_ba_s, gamma_ba_m})
      if (v < 0.0) throw std::invalid_argument("HybridParams: rates must be >= 0");
  }
  double gamma_tot_s() const { return gamma_th_s + 0.5 * gamma_ba_s; }
  double gamma_tot_m() const { return gamma_th_m + 0.5 * gamma_ba_m; }
};

// g_hyb = sqrt(4 Gamma_m Gamma_s)
inline double hybrid_coupling(double gamma_m_meas, double gamma_s_meas) {
  if (gamma_m_meas < 0.0 || gamma_s_meas < 0.0)
    throw std::invalid_argument("hybrid_coupling: measurement rates must be >= 0");
  return std::sqrt(4.0 * gamma_m_meas * gamma_s_meas);
}

// C_hyb = 4 g_hyb^2 / (gamma_s_tot gamma_m_tot)
inline double hybrid_cooperativity(const HybridParams& h) {
  h.validate();
  if (!(h.gamma_tot_s() > 0.0) || !(h.gamma_tot_m() > 0.0))
    throw std::invalid_argument("hybrid_cooperativity: total decoherence rates must be > 0");
  const double g = hybrid_coupling(h.gamma_m_meas, h.gamma_s_meas);
  return 4.0 * g * g / (h.gamma_tot_s() * h.gamma_tot_m());
}

// C_hyb <= 16 C_m C_s, with equality only at zero residual backaction.
inline bool hybrid_bound_holds(const HybridParams& h) {
  const double c_s = cooperativity(h.gamma_s_meas, h.gamma_th_s);
  const double c_m = cooperativity(h.gamma_m_meas, h.gamma_th_m);
  return hybrid_cooperativity(h) <= 16.0 * c_m * c_s * (1.0 + 1e-12);
}

} // namespace qnoise
