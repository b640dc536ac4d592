#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qnoise/cavity.hpp"
#include "qnoise/config.hpp"
#include "qnoise/csvio.hpp"
#include "qnoise/fit.hpp"
#include "qnoise/langevin.hpp"
#include "qnoise/spin.hpp"
#include "qnoise/welch.hpp"

// Subcommand implementations: parse one task config, run the model, emit
// CSV/report files with a parameter-echo header so every output can be
// reproduced from its own comments.

namespace qnoise {

struct RunContext {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;

  std::string resolve(const std::string& filename) const {
    if (!filename.empty() && filename[0] == '/') return filename;
    return out_dir + "/" + filename;
  }

  void note(const std::string& msg) const {
    if (!quiet) std::printf("%s\n", msg.c_str());
  }
};

namespace detail {

inline void standard_header(CsvBuilder& b, const cfg::json& config_echo) {
  b.comment(artifact_version);
  b.comment(std::string("convention: ") + Spectrum::convention +
            ", shot noise = 1/2");
  b.comment("config: " + config_echo.dump());
}

// config parameter names carry unit suffixes; internal names do not
inline std::pair<std::string, double> internal_param(const std::string& key) {
  auto ends_with = [&](const char* suf) {
    const std::string s(suf);
    return key.size() > s.size() &&
           key.compare(key.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with("_hz"))
    return {key.substr(0, key.size() - 3), two_pi};
  if (ends_with("_pi"))
    return {key.substr(0, key.size() - 3), pi};
  return {key, 1.0};
}

inline std::string external_param(const std::string& name, double& scale) {
  static const std::set<std::string> freq_like = {
      "omega",      "gamma",   "gamma_meas", "gamma_extra",
      "omega_m",    "gamma_m", "kappa",      "delta_c"};
  if (freq_like.count(name)) {
    scale = two_pi;
    return name + "_hz";
  }
  if (name == "theta") {
    scale = pi;
    return "theta_pi";
  }
  scale = 1.0;
  return name;
}

} // namespace detail

// ---- spectrum ----

inline std::string run_spectrum(const cfg::json& config, const RunContext& ctx) {
  cfg::Strict s(config, "spectrum");
  const std::string system = s.text("system");
  const GridSpec grid = GridSpec::parse(s.child("grid"), "spectrum.grid");
  const std::string output = s.text("output");

  CsvBuilder b;
  detail::standard_header(b, config);
  b.columns({"frequency_Hz", "psd", "psd_shot_relative_dB", "psd_shot",
             "psd_interference", "psd_signal"});

  if (system == "generic" || system == "spin") {
    const CoreModelConfig m = CoreModelConfig::parse(
        s.child("model"), "spectrum.model",
        system == "spin" ? CouplingGeometry::DrivePhase_SignalAmplitude
                         : CouplingGeometry::DriveAmplitude_SignalPhase);
    s.finish();
    for (double w : grid.build()) {
      const OutputSpectrumComponents c =
          s_output_quadrature_components(w, m.osc, m.cpl, m.det);
      const double total = c.total();
      b.row({rad_to_hz(w), total, 10.0 * std::log10(total / c.shot), c.shot,
             c.interference, c.signal});
    }
  } else if (system == "optomech") {
    const OptomechModelConfig m =
        OptomechModelConfig::parse(s.child("model"), "spectrum.model");
    s.finish();
    OptomechDerived empty = m.drv;
    empty.g_om = 0.0;
    for (double w : grid.build()) {
      const DetectorCoefficients k =
          detector_coefficients(w, m.theta, m.osc, m.cav, m.drv);
      const DetectorCoefficients k0 =
          detector_coefficients(w, m.theta, m.osc, m.cav, empty);
      // shot = empty-cavity level; signal = mechanically scattered power;
      // interference = the cross terms between the two
      const double nb = m.osc.n_th + 0.5;
      const double shot = 0.5 * (std::norm(k0.a) + std::norm(k0.b));
      const double signal = 0.5 * (std::norm(k.a - k0.a) + std::norm(k.b - k0.b)) +
                            nb * std::norm(k.c);
      const double total =
          0.5 * std::norm(k.a) + 0.5 * std::norm(k.b) + nb * std::norm(k.c);
      const double interference = total - shot - signal;
      const double lt = apply_detection_loss(total, m.eta_det);
      const double lshot = apply_detection_loss(shot, m.eta_det);
      b.row({rad_to_hz(w), lt, 10.0 * std::log10(lt / lshot), lshot,
             m.eta_det * interference, m.eta_det * signal});
    }
  } else {
    throw ConfigError("config: spectrum.system must be generic, spin or optomech");
  }
  const std::string path = ctx.resolve(output);
  b.write(path);
  ctx.note("wrote " + path);
  return path;
}

// ---- cooling curve ----

inline std::string run_cooling_curve(const cfg::json& config,
                                     const RunContext& ctx) {
  cfg::Strict s(config, "cooling_curve");
  cfg::Strict m(s.child("model"), "cooling_curve.model");
  const double omega_m = hz_to_rad(m.number("omega_m_hz"));
  const double gamma_m = m.has("gamma_m_hz")
                             ? hz_to_rad(m.number("gamma_m_hz"))
                             : omega_m / m.number("q_m");
  const double n_th = m.has("n_th")
                          ? m.number("n_th")
                          : thermal_occupation(omega_m, m.number("temperature_k"));
  const double kappa = hz_to_rad(m.number("kappa_hz"));
  const double delta_c = hz_to_rad(m.number("delta_c_hz"));
  const double eta_in = m.number_or("eta_in", 1.0);
  const double g0 = hz_to_rad(m.number("g0_hz"));
  const double wavelength = 1e-9 * m.number("wavelength_nm");
  m.finish();

  std::vector<double> powers_uw;
  if (s.has("powers_uw")) {
    powers_uw = s.numbers("powers_uw");
  } else {
    cfg::Strict p(s.child("power_sweep"), "cooling_curve.power_sweep");
    const double lo = p.number("min_uw");
    const double hi = p.number("max_uw");
    const std::size_t n = p.count("n_points");
    const bool log_spacing = p.text_or("spacing", "log") == "log";
    p.finish();
    if (n < 2 || !(hi > lo) || !(lo > 0.0))
      throw ConfigError("config: cooling_curve.power_sweep range invalid");
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      powers_uw.push_back(log_spacing ? lo * std::pow(hi / lo, t)
                                      : lo + (hi - lo) * t);
    }
  }
  const std::string output = s.text("output");
  s.finish();

  OscillatorParams osc(omega_m, gamma_m, n_th);
  const double gamma_th = osc.gamma_th();
  CsvBuilder b;
  detail::standard_header(b, config);
  b.columns({"power_uW", "n_m_total", "n_m_thermal_component",
             "n_m_backaction_component", "C_qu"});
  for (double p_uw : powers_uw) {
    const double n_c =
        photons_from_power(1e-6 * p_uw, wavelength, kappa, delta_c, eta_in);
    CavityParams cav(kappa, delta_c, eta_in, g0, n_c);
    const OptomechDerived d = OptomechDerived::from(cav);
    const PhononOccupation occ = phonon_occupation(osc, cav, d);
    b.row({p_uw, occ.total, occ.thermal, occ.backaction,
           cooperativity(d.gamma_meas, gamma_th)});
  }
  const std::string path = ctx.resolve(output);
  b.write(path);
  ctx.note("wrote " + path);
  return path;
}

// ---- variance sweep ----

inline std::string run_variance_sweep(const cfg::json& config,
                                      const RunContext& ctx) {
  cfg::Strict s(config, "variance_sweep");
  std::vector<double> rates;  // [rad/s]
  if (s.has("rates_hz")) {
    for (double r : s.numbers("rates_hz")) rates.push_back(hz_to_rad(r));
  } else {
    cfg::Strict r(s.child("rate_sweep"), "variance_sweep.rate_sweep");
    const double lo = hz_to_rad(r.number("min_hz"));
    const double hi = hz_to_rad(r.number("max_hz"));
    const std::size_t n = r.count("n_points");
    r.finish();
    if (n < 2 || !(hi > lo))
      throw ConfigError("config: variance_sweep.rate_sweep range invalid");
    for (std::size_t i = 0; i < n; ++i)
      rates.push_back(lo + (hi - lo) * static_cast<double>(i) /
                               static_cast<double>(n - 1));
  }
  const double gamma_s = hz_to_rad(s.number("gamma_s_hz"));
  const double bandwidth = hz_to_rad(s.number("bandwidth_hz"));
  const double eta_det = s.number_or("eta_det", 1.0);
  const std::string output = s.text("output");
  s.finish();

  CsvBuilder b;
  detail::standard_header(b, config);
  b.columns({"Gamma_eff_Hz", "var_total", "var_shot", "var_projection",
             "var_backaction"});
  for (const SpinVariancePoint& p :
       spin_variance_curve(rates, gamma_s, bandwidth, eta_det))
    b.row({rad_to_hz(p.gamma_eff), p.total(), p.shot, p.projection,
           p.backaction});
  const std::string path = ctx.resolve(output);
  b.write(path);
  ctx.note("wrote " + path);
  return path;
}

// ---- simulate ----

struct SimulateOutputs {
  std::string timeseries_path;
  std::string psd_path;
};

inline SimulateOutputs run_simulate(const cfg::json& config,
                                    const RunContext& ctx) {
  cfg::Strict s(config, "simulate");
  const CoreModelConfig m = CoreModelConfig::parse(
      s.child("model"), "simulate.model",
      CouplingGeometry::DriveAmplitude_SignalPhase);

  cfg::Strict t(s.child("trajectory"), "simulate.trajectory");
  TrajectoryConfig tc;
  tc.dt = t.number("dt_s");
  tc.duration = t.number("duration_s");
  tc.n_traj = t.count("n_traj");
  tc.seed = static_cast<std::uint64_t>(t.number("seed"));
  tc.record_x = t.flag_or("record_x", true);
  tc.record_p = t.flag_or("record_p", false);
  if (t.has("thetas_pi"))
    for (double th : t.numbers("thetas_pi")) tc.thetas.push_back(pi * th);
  tc.eta_det = t.number_or("eta_det", 1.0);
  t.finish();
  if (ctx.seed_override) tc.seed = *ctx.seed_override;

  cfg::Strict p(s.child("psd"), "simulate.psd");
  const std::size_t segment_length = p.count("segment_length");
  const double overlap = p.number_or("overlap", 0.5);
  const std::string window_name = p.text_or("window", "hann");
  p.finish();
  if (window_name != "hann" && window_name != "rectangular")
    throw ConfigError("config: simulate.psd.window must be hann or rectangular");
  const WindowKind window =
      window_name == "hann" ? WindowKind::Hann : WindowKind::Rectangular;

  const std::string ts_output = s.text("timeseries_output");
  const std::string psd_output = s.text("psd_output");
  s.finish();

  const TimeSeries ts = simulate(m.osc, m.cpl, tc);

  CsvBuilder tb;
  detail::standard_header(tb, config);
  tb.comment("dt_s: " + format_number(ts.dt));
  tb.comment("seed: " + std::to_string(ts.seed));
  tb.comment("n_traj: " + std::to_string(ts.n_traj) +
             ", samples_per_trajectory: " +
             std::to_string(ts.samples_per_trajectory));
  if (ts.short_duration)
    tb.comment("warning: duration below 1000 damping times, poor statistics");
  std::vector<std::string> cols{"time_s"};
  for (const auto& n : ts.channel_names) cols.push_back(n);
  tb.columns(cols);
  const std::size_t total = ts.n_traj * ts.samples_per_trajectory;
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<double> row{static_cast<double>(i) * ts.dt};
    for (const auto& c : ts.channels) row.push_back(c[i]);
    tb.row(row);
  }
  const std::string ts_path = ctx.resolve(ts_output);
  tb.write(ts_path);

  CsvBuilder pb;
  detail::standard_header(pb, config);
  pb.comment("seed: " + std::to_string(ts.seed));
  std::vector<std::string> pcols{"frequency_Hz"};
  std::vector<Spectrum> spectra;
  for (const auto& name : ts.channel_names) {
    PsdAccumulator acc(ts.dt, segment_length, overlap, window);
    for (std::size_t traj = 0; traj < ts.n_traj; ++traj)
      acc.feed(ts.trajectory_slice(name, traj));
    spectra.push_back(acc.finalize());
    pcols.push_back("psd_" + name);
    pcols.push_back("psd_err_" + name);
  }
  pb.columns(pcols);
  for (std::size_t k = 0; k < spectra[0].grid.size(); ++k) {
    std::vector<double> row{rad_to_hz(spectra[0].grid[k])};
    for (const auto& sp : spectra) {
      row.push_back(sp.values[k]);
      row.push_back(sp.errors[k]);
    }
    pb.row(row);
  }
  const std::string psd_path = ctx.resolve(psd_output);
  pb.write(psd_path);
  ctx.note("wrote " + ts_path + " and " + psd_path);
  return {ts_path, psd_path};
}

// ---- fit ----

inline std::string run_fit(const cfg::json& config, const RunContext& ctx) {
  cfg::Strict s(config, "fit");
  const std::string input = s.text("input_spectrum");
  const std::string model_name = s.text("model");
  FitModelKind kind;
  if (model_name == "core_squeezing") kind = FitModelKind::CoreSqueezing;
  else if (model_name == "spin_squeezing") kind = FitModelKind::SpinSqueezing;
  else if (model_name == "optomech_full") kind = FitModelKind::OptomechFull;
  else
    throw ConfigError("config: fit.model must be core_squeezing, spin_squeezing "
                      "or optomech_full");

  FitProblem prob;
  prob.model = kind;
  {
    cfg::Strict fx(s.child("fixed"), "fit.fixed");
    for (const auto& name : model_parameters(kind)) {
      double scale;
      const std::string key = detail::external_param(name, scale);
      if (fx.has(key)) prob.fixed[name] = scale * fx.number(key);
    }
    fx.finish();
  }
  {
    const cfg::json free_list = s.child("free");
    if (!free_list.is_array())
      throw ConfigError("config: fit.free must be an array");
    for (const auto& f : free_list) {
      cfg::Strict ff(f, "fit.free[]");
      const std::string key = ff.text("name");
      const auto [name, scale] = detail::internal_param(key);
      FreeParam fp;
      fp.name = name;
      fp.initial = scale * ff.number("initial");
      if (ff.has("lower")) fp.lower = scale * ff.number("lower");
      if (ff.has("upper")) fp.upper = scale * ff.number("upper");
      ff.finish();
      prob.free.push_back(fp);
    }
  }
  const std::string output = s.text("output");
  const bool report_cooperativity = s.flag_or("report_cooperativity", true);
  s.finish();

  const std::string spectrum_path = ctx.resolve(input);
  prob.data = read_spectrum_csv(spectrum_path);
  const FitResult res = fit(prob);

  // FNV-1a content hash of the input file for provenance
  std::uint64_t hash = 14695981039346656037ull;
  {
    std::ifstream in(spectrum_path, std::ios::binary);
    char c;
    while (in.get(c)) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 1099511628211ull;
    }
  }

  std::ostringstream out;
  out << "# " << artifact_version << "\n";
  out << "# config: " << config.dump() << "\n";
  out << "input_spectrum = " << spectrum_path << "\n";
  out << "input_fnv1a = " << hash << "\n";
  out << "model = " << to_string(kind) << "\n";
  out << "converged = " << (res.converged ? "true" : "false") << "\n";
  out << "iterations = " << res.iterations << "\n";
  out << "reduced_chisq = " << format_number(res.reduced_chisq) << "\n";
  out << "gradient_norm = " << format_number(res.final_gradient_norm) << "\n";
  out << "message = " << res.message << "\n";
  for (const auto& [name, value] : res.estimates) {
    double scale;
    const std::string key = detail::external_param(name, scale);
    out << key << " = " << format_number(value / scale) << "\n";
    out << key << "_sigma = " << format_number(res.uncertainties.at(name) / scale)
        << "\n";
  }
  if (report_cooperativity && res.converged) {
    try {
      const ValueWithUncertainty c =
          cooperativity_from_fit(res, kind, prob.fixed);
      out << "cooperativity = " << format_number(c.value) << "\n";
      out << "cooperativity_sigma = " << format_number(c.sigma) << "\n";
    } catch (const std::invalid_argument&) {
      out << "cooperativity = unavailable\n";
    }
  }
  const std::string path = ctx.resolve(output);
  atomic_write(path, out.str());
  ctx.note("wrote " + path);
  return path;
}

// ---- squeeze scan ----

inline std::string run_squeeze_scan(const cfg::json& config,
                                    const RunContext& ctx) {
  cfg::Strict s(config, "squeeze_scan");
  const std::string system = s.text("system");
  const GridSpec grid = GridSpec::parse(s.child("grid"), "squeeze_scan.grid");
  cfg::Strict t(s.child("theta_scan"), "squeeze_scan.theta_scan");
  const double th_lo = pi * t.number("min_pi");
  const double th_hi = pi * t.number("max_pi");
  const std::size_t n_th = t.count("n_points");
  t.finish();
  if (n_th < 2 || !(th_hi > th_lo))
    throw ConfigError("config: squeeze_scan.theta_scan range invalid");
  const std::string output = s.text("output");

  std::vector<double> thetas(n_th);
  for (std::size_t i = 0; i < n_th; ++i)
    thetas[i] = th_lo + (th_hi - th_lo) * static_cast<double>(i) /
                            static_cast<double>(n_th - 1);

  std::function<double(double, double)> model;
  double shot = 0.5;
  if (system == "generic" || system == "spin") {
    const CoreModelConfig m = CoreModelConfig::parse(
        s.child("model"), "squeeze_scan.model",
        system == "spin" ? CouplingGeometry::DrivePhase_SignalAmplitude
                         : CouplingGeometry::DriveAmplitude_SignalPhase);
    s.finish();
    model = [m](double w, double th) {
      DetectionConfig det(th, m.det.eta_det);
      return s_output_quadrature(w, m.osc, m.cpl, det);
    };
  } else if (system == "optomech") {
    const OptomechModelConfig m =
        OptomechModelConfig::parse(s.child("model"), "squeeze_scan.model");
    s.finish();
    model = [m](double w, double th) {
      return apply_detection_loss(s_dd_full(w, th, m.osc, m.cav, m.drv),
                                  m.eta_det);
    };
  } else {
    throw ConfigError("config: squeeze_scan.system must be generic, spin or optomech");
  }

  const SqueezingReport rep =
      squeezing_report(model, grid.build(), thetas, shot);
  CsvBuilder b;
  detail::standard_header(b, config);
  b.columns({"min_ratio_dB", "f_at_min_Hz", "theta_at_min_pi"});
  b.row({rep.min_ratio_db, rad_to_hz(rep.omega_at_min),
         rep.theta_at_min / pi});
  const std::string path = ctx.resolve(output);
  b.write(path);
  ctx.note("wrote " + path);
  return path;
}

// ---- hybrid ----

inline std::string run_hybrid(const cfg::json& config, const RunContext& ctx) {
  cfg::Strict s(config, "hybrid");
  HybridParams h;
  h.gamma_s_meas = hz_to_rad(s.number("gamma_s_meas_hz"));
  h.gamma_m_meas = hz_to_rad(s.number("gamma_m_meas_hz"));
  h.gamma_th_s = hz_to_rad(s.number("gamma_th_s_hz"));
  h.gamma_th_m = hz_to_rad(s.number("gamma_th_m_hz"));
  h.gamma_ba_s = hz_to_rad(s.number_or("gamma_ba_s_hz", 0.0));
  h.gamma_ba_m = hz_to_rad(s.number_or("gamma_ba_m_hz", 0.0));
  const std::string output = s.text("output");
  s.finish();
  h.validate();

  CsvBuilder b;
  detail::standard_header(b, config);
  b.columns({"g_hyb_Hz", "C_hyb", "C_s", "C_m", "bound_16CmCs"});
  const double cs = cooperativity(h.gamma_s_meas, h.gamma_th_s);
  const double cm = cooperativity(h.gamma_m_meas, h.gamma_th_m);
  b.row({rad_to_hz(hybrid_coupling(h.gamma_m_meas, h.gamma_s_meas)),
         hybrid_cooperativity(h), cs, cm, 16.0 * cm * cs});
  const std::string path = ctx.resolve(output);
  b.write(path);
  ctx.note("wrote " + path);
  return path;
}

} // namespace qnoise
