#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnoise {

enum class SpectrumKind {
  LightQuadrature,        // dimensionless, shot noise = 1/2
  OscillatorDisplacement, // [1/(rad/s)]
  Force                   // [rad/s]
};

inline const char* to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::LightQuadrature: return "light_quadrature";
    case SpectrumKind::OscillatorDisplacement: return "oscillator_displacement";
    case SpectrumKind::Force: return "force";
  }
  return "unknown";
}

// Sampled symmetrized PSD on a strictly increasing angular-frequency grid.
// The convention tag travels with the data so file consumers cannot misread
// it: all spectra in this library are two-sided symmetrized, with the vacuum
// light-quadrature level at 1/2.
struct Spectrum {
  std::vector<double> grid;   // [rad/s], strictly increasing
  std::vector<double> values; // >= 0
  std::vector<double> errors; // optional per-bin standard errors (may be empty)
  SpectrumKind kind = SpectrumKind::LightQuadrature;

  static constexpr const char* convention = "two-sided symmetrized";

  Spectrum() = default;
  Spectrum(std::vector<double> g, std::vector<double> v,
           SpectrumKind k = SpectrumKind::LightQuadrature)
      : grid(std::move(g)), values(std::move(v)), kind(k) {
    validate();
  }

  void validate() const {
    if (grid.size() != values.size())
      throw std::invalid_argument("Spectrum: grid and values length mismatch");
    if (grid.size() < 2)
      throw std::invalid_argument("Spectrum: need at least two samples");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw std::invalid_argument("Spectrum: grid must be strictly increasing");
    for (double v : values)
      if (v < 0.0)
        throw std::invalid_argument("Spectrum: symmetrized PSD values must be >= 0");
    if (!errors.empty() && errors.size() != values.size())
      throw std::invalid_argument("Spectrum: errors length mismatch");
  }
};

} // namespace qnoise
