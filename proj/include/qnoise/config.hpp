#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnoise/cavity.hpp"
#include "qnoise/constants.hpp"
#include "qnoise/core.hpp"
#include "qnoise/fit.hpp"
#include "qnoise/langevin.hpp"
#include "qnoise/welch.hpp"

// Experiment configuration: strict JSON schema with unit suffixes. Every
// frequency-like key carries _hz, angles carry _pi, powers _uw or _mw,
// lengths _um or _nm, temperatures _k. Unknown keys are rejected so typos
// cannot silently drop physics parameters.

namespace qnoise {

// Validation failures (schema, units, parameter ranges) map to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace cfg {

using json = nlohmann::json;

// Tracks which keys were consumed and rejects leftovers.
class Strict {
 public:
  Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError("config: " + path_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    mark(key);
    const json& v = at(key);
    if (!v.is_number())
      throw ConfigError("config: " + path_ + "." + key + " must be a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    if (!j_.contains(key)) return fallback;
    return number(key);
  }

  std::size_t count(const std::string& key) {
    mark(key);
    const json& v = at(key);
    if (!v.is_number_unsigned())
      throw ConfigError("config: " + path_ + "." + key +
                        " must be a non-negative integer");
    return v.get<std::size_t>();
  }

  std::string text(const std::string& key) {
    mark(key);
    const json& v = at(key);
    if (!v.is_string())
      throw ConfigError("config: " + path_ + "." + key + " must be a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    if (!j_.contains(key)) return fallback;
    return text(key);
  }

  bool flag_or(const std::string& key, bool fallback) {
    if (!j_.contains(key)) return fallback;
    mark(key);
    const json& v = at(key);
    if (!v.is_boolean())
      throw ConfigError("config: " + path_ + "." + key + " must be a boolean");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    mark(key);
    const json& v = at(key);
    if (!v.is_array())
      throw ConfigError("config: " + path_ + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ConfigError("config: " + path_ + "." + key +
                          " must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  // Returns a reference: callers construct nested Strict views on it, which
  // hold a reference themselves.
  const json& child(const std::string& key) {
    mark(key);
    return at(key);
  }

  std::optional<json> child_opt(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    mark(key);
    return at(key);
  }

  // call after all reads; rejects unconsumed keys by name. Keys starting
  // with an underscore are comments and always permitted.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()) && it.key().rfind("_", 0) != 0)
        throw ConfigError("config: unknown key " + path_ + "." + it.key());
  }

  const std::string& path() const { return path_; }

 private:
  const json& at(const std::string& key) const {
    if (!j_.contains(key))
      throw ConfigError("config: missing key " + path_ + "." + key);
    return j_[key];
  }
  void mark(const std::string& key) { seen_.insert(key); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError("config: " + what + " must be > 0");
  return v;
}

} // namespace cfg

// ---- task configurations (internal units after parsing) ----

struct GridSpec {
  double omega_min, omega_max;  // [rad/s]
  std::size_t n_points;

  std::vector<double> build() const {
    std::vector<double> g(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
      g[i] = omega_min + (omega_max - omega_min) * static_cast<double>(i) /
                             static_cast<double>(n_points - 1);
    return g;
  }

  static GridSpec parse(const cfg::json& j, const std::string& path) {
    cfg::Strict s(j, path);
    GridSpec g{};
    g.omega_min = hz_to_rad(cfg::positive(s.number("f_min_hz"), path + ".f_min_hz"));
    g.omega_max = hz_to_rad(cfg::positive(s.number("f_max_hz"), path + ".f_max_hz"));
    g.n_points = s.count("n_points");
    s.finish();
    if (!(g.omega_max > g.omega_min))
      throw ConfigError("config: " + path + " f_max_hz must exceed f_min_hz");
    if (g.n_points < 2)
      throw ConfigError("config: " + path + ".n_points must be >= 2");
    return g;
  }
};

// oscillator + coupling + detection for the generic/spin spectrum models
struct CoreModelConfig {
  OscillatorParams osc{1.0, 0.1, 0.0};
  CouplingConfig cpl = CouplingConfig::from_measurement_rate(
      0.0, CouplingGeometry::DriveAmplitude_SignalPhase);
  DetectionConfig det{0.0, 1.0};

  static CoreModelConfig parse(const cfg::json& j, const std::string& path,
                               CouplingGeometry default_geometry) {
    cfg::Strict s(j, path);
    CoreModelConfig m;
    try {
      m.osc = OscillatorParams(hz_to_rad(s.number("frequency_hz")),
                               hz_to_rad(s.number("linewidth_hz")),
                               s.number_or("n_th", 0.0));
      CouplingGeometry geom = default_geometry;
      const std::string g = s.text_or(
          "geometry", default_geometry == CouplingGeometry::DriveAmplitude_SignalPhase
                          ? "drive_amplitude"
                          : "drive_phase");
      if (g == "drive_amplitude")
        geom = CouplingGeometry::DriveAmplitude_SignalPhase;
      else if (g == "drive_phase")
        geom = CouplingGeometry::DrivePhase_SignalAmplitude;
      else
        throw ConfigError("config: " + path + ".geometry must be drive_amplitude or drive_phase");
      m.cpl = CouplingConfig::from_measurement_rate(
          hz_to_rad(s.number("measurement_rate_hz")), geom);
      m.det = DetectionConfig(pi * s.number("theta_pi"),
                              s.number_or("eta_det", 1.0));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + path + ": " + e.what());
    }
    s.finish();
    return m;
  }
};

struct OptomechModelConfig {
  OscillatorParams osc{1.0, 0.1, 0.0};
  CavityParams cav{1.0, 0.0, 1.0, 1.0, 0.0};
  OptomechDerived drv{};
  double theta = 0.0;
  double eta_det = 1.0;
  // power-mode extras, zero when the measurement rate is given directly
  double g0 = 0.0;
  double wavelength = 0.0;

  static OptomechModelConfig parse(const cfg::json& j, const std::string& path) {
    cfg::Strict s(j, path);
    OptomechModelConfig m;
    try {
      const double omega_m = hz_to_rad(s.number("omega_m_hz"));
      double gamma_m;
      if (s.has("gamma_m_hz"))
        gamma_m = hz_to_rad(s.number("gamma_m_hz"));
      else
        gamma_m = omega_m / cfg::positive(s.number("q_m"), path + ".q_m");
      double n_th;
      if (s.has("n_th"))
        n_th = s.number("n_th");
      else
        n_th = thermal_occupation(
            omega_m, cfg::positive(s.number("temperature_k"), path + ".temperature_k"));
      m.osc = OscillatorParams(omega_m, gamma_m, n_th);

      const double kappa = hz_to_rad(s.number("kappa_hz"));
      const double delta_c = hz_to_rad(s.number("delta_c_hz"));
      const double eta_in = s.number_or("eta_in", 1.0);
      m.g0 = s.has("g0_hz") ? hz_to_rad(s.number("g0_hz")) : 0.0;
      if (s.has("measurement_rate_hz")) {
        m.cav = CavityParams(kappa, delta_c, eta_in,
                             m.g0 > 0.0 ? m.g0 : 1.0, 0.0);
        m.drv = OptomechDerived::from_measurement_rate(
            m.cav, hz_to_rad(s.number("measurement_rate_hz")));
      } else {
        // power calibration path: needs g0, power, wavelength
        if (!(m.g0 > 0.0))
          throw ConfigError("config: " + path + " needs g0_hz when no measurement_rate_hz is given");
        m.wavelength = 1e-9 * cfg::positive(s.number("wavelength_nm"),
                                            path + ".wavelength_nm");
        const double power = 1e-6 * cfg::positive(s.number("power_uw"),
                                                  path + ".power_uw");
        const double n_c =
            photons_from_power(power, m.wavelength, kappa, delta_c, eta_in);
        m.cav = CavityParams(kappa, delta_c, eta_in, m.g0, n_c);
        m.drv = OptomechDerived::from(m.cav);
      }
      m.drv.gamma_extra = hz_to_rad(s.number_or("gamma_extra_hz", 0.0));
      m.theta = pi * s.number_or("theta_pi", 0.0);
      m.eta_det = s.number_or("eta_det", 1.0);
      if (!(m.eta_det > 0.0) || m.eta_det > 1.0)
        throw ConfigError("config: " + path + ".eta_det must be in (0, 1]");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + path + ": " + e.what());
    }
    s.finish();
    return m;
  }
};

inline cfg::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  cfg::json j;
  try {
    j = cfg::json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return j;
}

} // namespace qnoise
