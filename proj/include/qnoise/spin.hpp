#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnoise/constants.hpp"
#include "qnoise/core.hpp"
#include "qnoise/integrate.hpp"
#include "qnoise/spectrum.hpp"

// Atomic-ensemble Faraday interface: measurement-rate calibration from atom
// number and photon flux, inhomogeneous-coupling averages over the cloud and
// beam geometry, the atom-number variance sweep, and the polarization
// squeezing spectrum.

namespace qnoise {

struct SpinEnsembleParams {
  double n_atoms;       // atom count
  double alpha_1;       // vector polarisability (dimensionless)
  double photon_flux;   // Phi = 2 |S_x| [1/s]
  double polarization;  // mean-spin polarization fraction in (0, 1]
  double omega_larmor;  // Omega_s [rad/s]
  double gamma_s;       // spin linewidth [rad/s]

  SpinEnsembleParams(double n_atoms_, double alpha_1_, double photon_flux_,
                     double polarization_, double omega_larmor_, double gamma_s_)
      : n_atoms(n_atoms_), alpha_1(alpha_1_), photon_flux(photon_flux_),
        polarization(polarization_), omega_larmor(omega_larmor_),
        gamma_s(gamma_s_) {
    if (!(n_atoms > 0.0))
      throw std::invalid_argument("SpinEnsembleParams: n_atoms must be > 0");
    if (!(polarization > 0.0) || polarization > 1.0)
      throw std::invalid_argument("SpinEnsembleParams: polarization must be in (0, 1]");
    if (!(photon_flux > 0.0))
      throw std::invalid_argument("SpinEnsembleParams: photon_flux must be > 0");
    if (!(omega_larmor > 0.0) || !(gamma_s > 0.0))
      throw std::invalid_argument("SpinEnsembleParams: omega_larmor and gamma_s must be > 0");
  }

  // Stretched f = 2 atoms contribute 2 units of spin each.
  double f_x_mean() const { return 2.0 * n_atoms * polarization; }
  double s_x_mean() const { return 0.5 * photon_flux; }
};

struct CloudBeamGeometry {
  double cloud_radial_waist;  // w_a, 1/e^2 radius of the cloud density [m]
  double cloud_axial_sigma;   // standard deviation of the axial density [m]
  double beam_waist;          // w_0 [m]
  double wavelength;          // [m]

  CloudBeamGeometry(double w_a, double sigma_z, double w0, double lambda)
      : cloud_radial_waist(w_a), cloud_axial_sigma(sigma_z), beam_waist(w0),
        wavelength(lambda) {
    if (!(w_a > 0.0) || !(sigma_z > 0.0) || !(w0 > 0.0) || !(lambda > 0.0))
      throw std::invalid_argument("CloudBeamGeometry: all lengths must be > 0");
  }

  double rayleigh_range() const {
    return pi * beam_waist * beam_waist / wavelength;
  }

  // Beam radius at axial position z.
  double beam_radius(double z) const {
    const double zr = rayleigh_range();
    return beam_waist * std::sqrt(1.0 + (z / zr) * (z / zr));
  }

  // |u_0(r, z)|^2 with u_0 the fundamental Gaussian mode, u_0(0) = 1.
  double mode_intensity(double r, double z) const {
    const double w = beam_radius(z);
    const double ratio = beam_waist / w;
    return ratio * ratio * std::exp(-2.0 * r * r / (w * w));
  }
};

// Gamma_s = alpha_1^2 |S_x| |F_x| / 4.
inline double spin_measurement_rate(const SpinEnsembleParams& p) {
  return p.alpha_1 * p.alpha_1 * p.s_x_mean() * p.f_x_mean() / 4.0;
}

struct InhomogeneousFactors {
  double eta_mean;     // <|u_0|^2>
  double eta_sq_mean;  // <|u_0|^4>
  // standard errors; zero for the quadrature method
  double eta_mean_err = 0.0;
  double eta_sq_mean_err = 0.0;
};

namespace detail {

// Radial average of |u_0|^(2n) over the Gaussian cloud at fixed z. With the
// cloud density ~ exp(-2 r^2 / w_a^2) and the mode ~ exp(-2 n r^2 / w(z)^2),
// the radial integral is elementary:
//   <|u_0|^(2n)>_r (z) = (w_0 / w(z))^(2n) / (1 + n w_a^2 / w(z)^2).
inline double radial_moment(const CloudBeamGeometry& g, double z, int n) {
  const double w = g.beam_radius(z);
  const double ratio2 = (g.beam_waist * g.beam_waist) / (w * w);
  const double wa2 = g.cloud_radial_waist * g.cloud_radial_waist;
  return std::pow(ratio2, n) / (1.0 + n * wa2 / (w * w));
}

inline double axial_average(const CloudBeamGeometry& g, int n, double rel_tol) {
  const double sz = g.cloud_axial_sigma;
  const double norm = 1.0 / (std::sqrt(two_pi) * sz);
  auto integrand = [&](double z) {
    return norm * std::exp(-0.5 * (z / sz) * (z / sz)) * radial_moment(g, z, n);
  };
  auto r = integrate_adaptive(integrand, -8.0 * sz, 8.0 * sz, rel_tol);
  if (!r.converged)
    throw std::runtime_error(
        "inhomogeneous_factors: quadrature did not converge, achieved error "
        "estimate " + std::to_string(r.error_estimate));
  return r.value;
}

} // namespace detail

// Ensemble averages of the normalized mode intensity and its square over a
// 3D Gaussian cloud, by axial quadrature over the closed-form radial average.
inline InhomogeneousFactors inhomogeneous_factors_quadrature(
    const CloudBeamGeometry& g, double rel_tol = 1e-8) {
  return {detail::axial_average(g, 1, rel_tol),
          detail::axial_average(g, 2, rel_tol)};
}

// Same averages by Monte-Carlo sampling of atom positions; seedable, returns
// standard errors of both means.
inline InhomogeneousFactors inhomogeneous_factors_monte_carlo(
    const CloudBeamGeometry& g, std::uint64_t seed, std::size_t n_samples) {
  if (n_samples < 10000)
    throw std::invalid_argument(
        "inhomogeneous_factors: monte-carlo needs at least 1e4 samples");
  std::mt19937_64 rng(seed);
  // density ~ exp(-2 r^2 / w_a^2) means per-axis sigma = w_a / 2
  std::normal_distribution<double> radial(0.0, 0.5 * g.cloud_radial_waist);
  std::normal_distribution<double> axial(0.0, g.cloud_axial_sigma);
  double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double x = radial(rng), y = radial(rng), z = axial(rng);
    const double eta = g.mode_intensity(std::sqrt(x * x + y * y), z);
    s1 += eta;
    s2 += eta * eta;
    q1 += eta * eta;
    q2 += eta * eta * eta * eta;
  }
  const double n = static_cast<double>(n_samples);
  const double m1 = s1 / n, m2 = s2 / n;
  const double v1 = std::max(0.0, q1 / n - m1 * m1);
  const double v2 = std::max(0.0, q2 / n - m2 * m2);
  return {m1, m2, std::sqrt(v1 / n), std::sqrt(v2 / n)};
}

// Gamma_s,eff = <eta^2> Gamma_s.
inline double effective_spin_rate(double gamma_s_meas, double eta_sq_mean) {
  if (gamma_s_meas < 0.0)
    throw std::invalid_argument("effective_spin_rate: rate must be >= 0");
  if (!(eta_sq_mean > 0.0) || eta_sq_mean > 1.0)
    throw std::invalid_argument("effective_spin_rate: <eta^2> must be in (0, 1]");
  return eta_sq_mean * gamma_s_meas;
}

struct SpinVariancePoint {
  double gamma_eff;   // [rad/s]
  double shot;        // bandwidth / (2 pi eta_det)
  double projection;  // 2 Gamma_eff
  double backaction;  // 4 Gamma_eff^2 / gamma_s
  double total() const { return shot + projection + backaction; }
};

// Band-integrated variance of the signal-carrying light quadrature for a
// list of measurement rates, decomposed into the three terms of the
// atom-number sweep.
inline std::vector<SpinVariancePoint> spin_variance_curve(
    const std::vector<double>& rates, double gamma_s, double bandwidth,
    double eta_det) {
  std::vector<SpinVariancePoint> out;
  out.reserve(rates.size());
  for (double g : rates) {
    spin_style_variance(g, gamma_s, bandwidth, eta_det);  // argument checks
    out.push_back({g, bandwidth / (two_pi * eta_det), 2.0 * g,
                   4.0 * g * g / gamma_s});
  }
  return out;
}

// Polarization squeezing spectrum: the core output-quadrature PSD with the
// spin coupling geometry (light amplitude carries the signal) and detection
// loss applied.
inline Spectrum spin_squeezing_spectrum(const std::vector<double>& grid,
                                        const SpinEnsembleParams& p,
                                        double gamma_eff,
                                        const DetectionConfig& det,
                                        double n_th = 0.03) {
  if (grid.size() < 2)
    throw std::invalid_argument("spin_squeezing_spectrum: need at least two grid points");
  for (double w : grid)
    if (std::abs(w - p.omega_larmor) > 0.5 * p.omega_larmor)
      throw std::invalid_argument(
          "spin_squeezing_spectrum: grid must lie within half an octave of the "
          "Larmor frequency");
  OscillatorParams osc(p.omega_larmor, p.gamma_s, n_th);
  CouplingConfig cpl = CouplingConfig::from_measurement_rate(
      gamma_eff, CouplingGeometry::DrivePhase_SignalAmplitude);
  std::vector<double> values;
  values.reserve(grid.size());
  for (double w : grid)
    values.push_back(s_output_quadrature(w, osc, cpl, det));
  return Spectrum(std::vector<double>(grid), std::move(values),
                  SpectrumKind::LightQuadrature);
}

} // namespace qnoise
