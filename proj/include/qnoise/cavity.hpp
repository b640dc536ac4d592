#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "qnoise/constants.hpp"
#include "qnoise/core.hpp"

// Detuned-cavity optomechanics: backaction spectra, dynamical backaction
// (optical spring and damping), sideband-cooling occupation, and the full
// cavity-filtered homodyne output spectrum with its resonant-drive
// simplification.

namespace qnoise {

struct CavityParams {
  double kappa;    // total cavity linewidth [rad/s]
  double delta_c;  // drive detuning from cavity resonance [rad/s]
  double eta_in;   // incoupling efficiency kappa_1/kappa in (0, 1]
  double g0;       // single-photon optomechanical coupling [rad/s]
  double n_c;      // intracavity photon number

  CavityParams(double kappa_, double delta_c_, double eta_in_, double g0_, double n_c_)
      : kappa(kappa_), delta_c(delta_c_), eta_in(eta_in_), g0(g0_), n_c(n_c_) {
    if (!(kappa > 0.0)) throw std::invalid_argument("CavityParams: kappa must be > 0");
    if (!(eta_in > 0.0) || eta_in > 1.0)
      throw std::invalid_argument("CavityParams: eta_in must be in (0, 1]");
    if (!(g0 > 0.0)) throw std::invalid_argument("CavityParams: g0 must be > 0");
    if (n_c < 0.0) throw std::invalid_argument("CavityParams: n_c must be >= 0");
  }

  // Input drive field amplitude [s^-1/2] consistent with the steady-state
  // intracavity photon number: n_c = alpha_L^2 kappa eta / (kappa^2/4 + Delta^2).
  double alpha_drive() const {
    return std::sqrt(n_c * (0.25 * kappa * kappa + delta_c * delta_c) /
                     (kappa * eta_in));
  }
};

// Standard input-power -> intracavity-photon-number conversion. Experiments
// quote input powers but fit rates, so this stays an overridable helper.
inline double photons_from_power(double power_w, double wavelength_m,
                                 double kappa, double delta_c, double eta_in) {
  if (!(power_w >= 0.0) || !(wavelength_m > 0.0))
    throw std::invalid_argument("photons_from_power: invalid power or wavelength");
  const double omega_laser = two_pi * speed_of_light / wavelength_m;
  const double lorentzian = 0.25 * kappa * kappa /
                            (0.25 * kappa * kappa + delta_c * delta_c);
  return 4.0 * eta_in * power_w / (hbar * omega_laser * kappa) * lorentzian;
}

struct OptomechDerived {
  complexd g_om;       // enhanced coupling with cavity phase [rad/s]
  double gamma_meas;   // measurement rate 4|g_om|^2/kappa [rad/s]
  // Excess mechanical broadening beyond the bare and dynamical damping
  // [rad/s]. It widens the effective susceptibility without adding thermal
  // noise, which is how the squeezing fits treat the mechanical linewidth
  // as a free parameter.
  double gamma_extra = 0.0;

  static OptomechDerived from(const CavityParams& c) {
    const complexd g =
        c.g0 * c.alpha_drive() * std::sqrt(c.kappa * c.eta_in) /
        complexd(0.5 * c.kappa, -c.delta_c);
    return {g, 4.0 * std::norm(g) / c.kappa};
  }

  // Sets |g_om| from a target measurement rate, keeping the cavity phase.
  static OptomechDerived from_measurement_rate(const CavityParams& c,
                                               double gamma_meas) {
    if (gamma_meas < 0.0)
      throw std::invalid_argument("OptomechDerived: measurement rate must be >= 0");
    const double mag = std::sqrt(0.25 * gamma_meas * c.kappa);
    const complexd phase =
        complexd(0.5 * c.kappa, c.delta_c) /
        std::abs(complexd(0.5 * c.kappa, c.delta_c));
    return {mag * phase, gamma_meas};
  }
};

// chi_c(w) = 1 / (kappa/2 - i (w + Delta_c)); |chi_c| peaks at w = -Delta_c.
inline complexd cavity_susceptibility(double omega, const CavityParams& c) {
  return 1.0 / complexd(0.5 * c.kappa, -(omega + c.delta_c));
}

struct FilterFunctions {
  complexd xi_plus, xi_minus, r_plus, r_minus;
};

inline FilterFunctions filter_functions(double omega, const CavityParams& c) {
  const complexd chi = cavity_susceptibility(omega, c);
  const complexd chi_mirror = std::conj(cavity_susceptibility(-omega, c));
  const complexd chi0 = cavity_susceptibility(0.0, c);
  const complexd i(0.0, 1.0);
  return {0.5 * (chi + chi_mirror),
          0.5 * i * (chi - chi_mirror),
          chi0 * chi + std::conj(chi0) * chi_mirror,
          i * (chi0 * chi - std::conj(chi0) * chi_mirror)};
}

struct DynamicalBackaction {
  double spring_shift;     // delta Omega_m [rad/s]
  double optical_damping;  // gamma_m,opt [rad/s]
};

// delta_Omega = 2|g|^2 Delta / (kappa^2/4 + Delta^2),
// gamma_opt = -4|g|^2 Delta kappa Omega / (kappa^2/4 + Delta^2)^2.
// Red detuning (Delta < 0) gives positive damping and a negative spring shift.
inline DynamicalBackaction dynamical_backaction(const OscillatorParams& osc,
                                                const CavityParams& c,
                                                const OptomechDerived& d) {
  const double g2 = std::norm(d.g_om);
  const double denom = 0.25 * c.kappa * c.kappa + c.delta_c * c.delta_c;
  return {2.0 * g2 * c.delta_c / denom,
          -4.0 * g2 * c.delta_c * c.kappa * osc.omega / (denom * denom)};
}

// chi_m,eff^-1 = (Omega^2 - w^2 - i gamma w - 4|g|^2 Omega xi_-(w)) / Omega.
inline complexd effective_mech_susceptibility(double omega,
                                              const OscillatorParams& osc,
                                              const CavityParams& c,
                                              const OptomechDerived& d) {
  const complexd xi_m = filter_functions(omega, c).xi_minus;
  return osc.omega /
         (complexd(osc.omega * osc.omega - omega * omega,
                   -(osc.gamma + d.gamma_extra) * omega) -
          4.0 * std::norm(d.g_om) * osc.omega * xi_m);
}

// Quantum backaction force PSD of the off-resonantly driven cavity
// (two Lorentzians at Delta_c +/- omega); even in omega, equals Gamma_m at
// Delta_c = 0, omega = 0.
inline double backaction_force_psd(double omega, const CavityParams& c,
                                   const OptomechDerived& d) {
  const double g2 = std::norm(d.g_om);
  const double hw = 0.25 * c.kappa * c.kappa;
  return 0.5 * g2 *
         (c.kappa / (hw + (c.delta_c + omega) * (c.delta_c + omega)) +
          c.kappa / (hw + (c.delta_c - omega) * (c.delta_c - omega)));
}

struct PhononOccupation {
  double total;       // n_m
  double thermal;     // n_cool = n_th gamma_m / (gamma_m + gamma_opt)
  double backaction;  // S_qba(Omega_m) / (gamma_m + gamma_opt)
};

inline PhononOccupation phonon_occupation(const OscillatorParams& osc,
                                          const CavityParams& c,
                                          const OptomechDerived& d) {
  const double gamma_opt = dynamical_backaction(osc, c, d).optical_damping;
  const double gamma_total = osc.gamma + gamma_opt;
  if (!(gamma_total > 0.0))
    throw std::invalid_argument("phonon_occupation: total damping must be > 0");
  const double thermal = osc.n_th * osc.gamma / gamma_total;
  const double backaction = backaction_force_psd(osc.omega, c, d) / gamma_total;
  return {thermal + backaction, thermal, backaction};
}

// Approximate backaction occupation n_qba ~ S_qba(Omega_m)/gamma_opt; the
// exact denominator (gamma_m + gamma_opt) is used by phonon_occupation.
inline double phonon_backaction_approx(const OscillatorParams& osc,
                                       const CavityParams& c,
                                       const OptomechDerived& d) {
  const double gamma_opt = dynamical_backaction(osc, c, d).optical_damping;
  if (!(gamma_opt > 0.0))
    throw std::invalid_argument("phonon_backaction_approx: gamma_opt must be > 0");
  return backaction_force_psd(osc.omega, c, d) / gamma_opt;
}

// Coefficients of the detector signal
//   D(w) = A X_L^in + B P_L^in + C P_th + Dx X_v + Dp P_v,
// where (X_v, P_v) is the vacuum entering through the undetected fraction
// 1 - eta_in of the cavity decay.
struct DetectorCoefficients {
  complexd a, b, c;
  complexd dx{0.0, 0.0}, dp{0.0, 0.0};
};

// Exact quadrature input-output map of the driven cavity plus mechanics.
// In the frame of the mean intracavity field (coupling G = 2|g_om| on the
// amplitude quadrature) the cavity resolvent is
//   (X_c, P_c) = [[xi_plus, xi_minus], [-xi_minus, xi_plus]] (inputs),
// the mechanics sees the force -G X_c, and the detected port returns
//   u_out = sqrt(kappa eta) (X_c, P_c) - u_in.
// The homodyne angle theta is measured from the input drive quadrature; the
// mean field sits at phi = arg(g_om) relative to it, so the coefficients are
// evaluated at theta - phi.
inline DetectorCoefficients detector_coefficients(double omega, double theta,
                                                  const OscillatorParams& osc,
                                                  const CavityParams& cav,
                                                  const OptomechDerived& d) {
  const FilterFunctions f = filter_functions(omega, cav);
  const complexd chi_m = effective_mech_susceptibility(omega, osc, cav, d);
  const double g_abs = std::abs(d.g_om);
  const double big_g = 2.0 * g_abs;
  const double g2chi_ = big_g * big_g;
  const complexd g2chi = g2chi_ * chi_m;
  const double k1 = cav.kappa * cav.eta_in;
  const double k2 = cav.kappa * (1.0 - cav.eta_in);
  const double phi = (g_abs > 0.0) ? std::arg(d.g_om) : 0.0;
  const double ct = std::cos(theta - phi), st = std::sin(theta - phi);
  const complexd xp = f.xi_plus, xm = f.xi_minus;
  const complexd a = ct * (k1 * xp - 1.0 + k1 * g2chi * xm * xp) +
                     st * (-k1 * xm + k1 * g2chi * xp * xp);
  const complexd b = ct * (k1 * xm + k1 * g2chi * xm * xm) +
                     st * (k1 * xp - 1.0 + k1 * g2chi * xp * xm);
  const complexd c = -std::sqrt(k1) * big_g * std::sqrt(2.0 * osc.gamma) *
                     chi_m * (ct * xm + st * xp);
  const double k12 = std::sqrt(k1 * k2);
  const complexd dx = k12 * (ct * (xp + g2chi * xm * xp) +
                             st * (-xm + g2chi * xp * xp));
  const complexd dp = k12 * (ct * (xm + g2chi * xm * xm) +
                             st * (xp + g2chi * xp * xm));
  return {a, b, c, dx, dp};
}

// Full symmetrized output PSD
//   S_DD = |A|^2/2 + |B|^2/2 + |C|^2 (n_th + 1/2) + (|Dx|^2 + |Dp|^2)/2,
// the squeezing-fit model. Detection loss, when present, is applied on top
// via apply_detection_loss.
inline double s_dd_full(double omega, double theta, const OscillatorParams& osc,
                        const CavityParams& c, const OptomechDerived& d) {
  const DetectorCoefficients k = detector_coefficients(omega, theta, osc, c, d);
  return 0.5 * std::norm(k.a) + 0.5 * std::norm(k.b) +
         std::norm(k.c) * (osc.n_th + 0.5) +
         0.5 * (std::norm(k.dx) + std::norm(k.dp));
}

// Symmetrized spectral matrix of the full model's output quadratures at
// theta = 0 and pi/2 (coefficients are linear in cos/sin theta).
inline SpectralMatrix output_spectral_matrix(double omega,
                                             const OscillatorParams& osc,
                                             const CavityParams& c,
                                             const OptomechDerived& d) {
  const DetectorCoefficients kx = detector_coefficients(omega, 0.0, osc, c, d);
  const DetectorCoefficients kp =
      detector_coefficients(omega, 0.5 * pi, osc, c, d);
  const double nb = osc.n_th + 0.5;
  const double s00 = 0.5 * std::norm(kx.a) + 0.5 * std::norm(kx.b) +
                     nb * std::norm(kx.c) +
                     0.5 * (std::norm(kx.dx) + std::norm(kx.dp));
  const double s90 = 0.5 * std::norm(kp.a) + 0.5 * std::norm(kp.b) +
                     nb * std::norm(kp.c) +
                     0.5 * (std::norm(kp.dx) + std::norm(kp.dp));
  const double cross = 0.5 * std::real(kx.a * std::conj(kp.a)) +
                       0.5 * std::real(kx.b * std::conj(kp.b)) +
                       nb * std::real(kx.c * std::conj(kp.c)) +
                       0.5 * std::real(kx.dx * std::conj(kp.dx)) +
                       0.5 * std::real(kx.dp * std::conj(kp.dp));
  return {s00, s90, cross};
}

// Resonant-drive (Delta_c = 0) closed form, Lorentzian approximation around
// the mechanical resonance. With losses=false the incoupling is idealized to
// eta = 1.
inline double s_dd_resonant_simplified(double omega, double theta,
                                       const OscillatorParams& osc,
                                       const CavityParams& c,
                                       const OptomechDerived& d,
                                       bool losses = true) {
  if (c.delta_c != 0.0)
    throw std::invalid_argument("s_dd_resonant_simplified: requires Delta_c = 0");
  const double eta = losses ? c.eta_in : 1.0;
  const double g2 = std::norm(d.g_om);
  const double kap = c.kappa;
  const double chi_c2 = std::norm(cavity_susceptibility(omega, c));
  // At Delta_c = 0 xi_- vanishes, so the mechanical susceptibility carries
  // only the bare and excess damping.
  OscillatorParams broadened = osc;
  broadened.gamma += d.gamma_extra;
  const double chi_m2 = std::norm(susceptibility(omega, broadened));
  const double st = std::sin(theta), ct = std::cos(theta);
  const double delta_minus_w = c.delta_c - omega;
  const double gamma_th = osc.gamma_th();

  // shot floor, lowered below 1/2 by the lossy cavity
  double s = 0.5 - (1.0 - eta) * eta * 0.25 * kap * kap * chi_c2;
  // Interference term. The overall sign is chosen to agree with the full
  // detector-coefficient model (whose general and resonant-intermediate
  // forms are mutually consistent); the re-expressed closed form carries
  // the opposite sign.
  s -= 4.0 * g2 * eta * kap * chi_m2 * chi_c2 * chi_c2 *
       (osc.gamma * kap * (1.0 - eta) * delta_minus_w +
        2.0 * ((2.0 * eta - 1.0) * 0.25 * kap * kap +
               delta_minus_w * delta_minus_w) *
            (omega - osc.omega)) *
       st * ct;
  // backaction-driven signal
  s += 8.0 * g2 * g2 * kap * kap * eta * eta * chi_m2 * chi_c2 * chi_c2 * st * st;
  // thermally driven signal
  s += 8.0 * gamma_th * g2 * kap * eta * chi_m2 * chi_c2 * st * st;
  return s;
}

} // namespace qnoise
