#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnoise/cavity.hpp"
#include "qnoise/core.hpp"
#include "qnoise/spectrum.hpp"

// Weighted nonlinear least-squares fitting of the analytic spectral models,
// squeezing-depth reports, and cooperativity extraction with uncertainty
// propagation.

namespace qnoise {

enum class FitModelKind { CoreSqueezing, SpinSqueezing, OptomechFull };

inline const char* to_string(FitModelKind k) {
  switch (k) {
    case FitModelKind::CoreSqueezing: return "core_squeezing";
    case FitModelKind::SpinSqueezing: return "spin_squeezing";
    case FitModelKind::OptomechFull: return "optomech_full";
  }
  return "unknown";
}

using ParamMap = std::map<std::string, double>;

// Canonical parameter list per model; every fit assigns each exactly once.
inline std::vector<std::string> model_parameters(FitModelKind kind) {
  switch (kind) {
    case FitModelKind::CoreSqueezing:
    case FitModelKind::SpinSqueezing:
      return {"omega", "gamma", "n_th", "gamma_meas", "theta", "eta_det"};
    case FitModelKind::OptomechFull:
      return {"omega_m", "gamma_m", "n_th", "gamma_meas", "gamma_extra",
              "kappa", "delta_c", "eta_in", "theta", "eta_det"};
  }
  throw std::invalid_argument("model_parameters: unknown model");
}

// Evaluate the model PSD at omega for a full parameter assignment.
inline double evaluate_model(FitModelKind kind, const ParamMap& p,
                             double omega) {
  auto get = [&](const char* name) {
    auto it = p.find(name);
    if (it == p.end())
      throw std::invalid_argument(std::string("evaluate_model: missing ") + name);
    return it->second;
  };
  switch (kind) {
    case FitModelKind::CoreSqueezing:
    case FitModelKind::SpinSqueezing: {
      // identical analytics; the spin variant exists so configs can carry
      // the interface-specific defaults
      OscillatorParams osc(get("omega"), get("gamma"), get("n_th"));
      CouplingConfig cpl = CouplingConfig::from_measurement_rate(
          get("gamma_meas"), kind == FitModelKind::SpinSqueezing
                                 ? CouplingGeometry::DrivePhase_SignalAmplitude
                                 : CouplingGeometry::DriveAmplitude_SignalPhase);
      DetectionConfig det(get("theta"), get("eta_det"));
      return s_output_quadrature(omega, osc, cpl, det);
    }
    case FitModelKind::OptomechFull: {
      OscillatorParams osc(get("omega_m"), get("gamma_m"), get("n_th"));
      CavityParams cav(get("kappa"), get("delta_c"), get("eta_in"),
                       /*g0=*/1.0, /*n_c=*/0.0);
      OptomechDerived d =
          OptomechDerived::from_measurement_rate(cav, get("gamma_meas"));
      d.gamma_extra = get("gamma_extra");
      return apply_detection_loss(s_dd_full(omega, get("theta"), osc, cav, d),
                                  get("eta_det"));
    }
  }
  throw std::invalid_argument("evaluate_model: unknown model");
}

struct FreeParam {
  std::string name;
  double initial;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct FitProblem {
  Spectrum data;  // with per-bin uncertainties when available
  FitModelKind model = FitModelKind::CoreSqueezing;
  std::vector<FreeParam> free;
  ParamMap fixed;

  void validate() const {
    data.validate();
    const auto names = model_parameters(model);
    std::size_t assigned = 0;
    for (const auto& n : names) {
      const bool in_fixed = fixed.count(n) > 0;
      bool in_free = false;
      for (const auto& f : free) in_free |= (f.name == n);
      if (in_fixed && in_free)
        throw std::invalid_argument("FitProblem: parameter " + n +
                                    " is both free and fixed");
      if (!in_fixed && !in_free)
        throw std::invalid_argument("FitProblem: parameter " + n +
                                    " is unassigned");
      ++assigned;
    }
    for (const auto& [k, v] : fixed)
      if (std::find(names.begin(), names.end(), k) == names.end())
        throw std::invalid_argument("FitProblem: unknown fixed parameter " + k);
    for (const auto& f : free) {
      if (std::find(names.begin(), names.end(), f.name) == names.end())
        throw std::invalid_argument("FitProblem: unknown free parameter " + f.name);
      if (!(f.initial >= f.lower && f.initial <= f.upper))
        throw std::invalid_argument("FitProblem: initial guess for " + f.name +
                                    " outside bounds");
    }
    if (data.grid.size() < free.size() + 5)
      throw std::invalid_argument(
          "FitProblem: need at least 5 more data points than free parameters");
  }
};

struct FitOptions {
  std::size_t max_iterations = 200;
  double fd_rel_step = 1e-6;
  double rel_cost_tol = 1e-10;
  double gradient_tol = 1e-8;
};

struct FitResult {
  ParamMap estimates;
  ParamMap uncertainties;     // 1 sigma, from the local quadratic model
  Eigen::MatrixXd covariance; // ordered like free_names
  std::vector<std::string> free_names;
  double reduced_chisq = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  std::string message;

  ParamMap all_parameters(const ParamMap& fixed) const {
    ParamMap all = fixed;
    for (const auto& [k, v] : estimates) all[k] = v;
    return all;
  }
};

namespace detail {

inline ParamMap assemble(const FitProblem& prob,
                         const std::vector<double>& x) {
  ParamMap p = prob.fixed;
  for (std::size_t i = 0; i < prob.free.size(); ++i)
    p[prob.free[i].name] = x[i];
  return p;
}

inline void weighted_residuals(const FitProblem& prob,
                               const std::vector<double>& x,
                               Eigen::VectorXd& r) {
  const ParamMap p = assemble(prob, x);
  const std::size_t n = prob.data.grid.size();
  const bool have_err = !prob.data.errors.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        have_err && prob.data.errors[i] > 0.0 ? 1.0 / prob.data.errors[i] : 1.0;
    r(static_cast<Eigen::Index>(i)) =
        w * (evaluate_model(prob.model, p, prob.data.grid[i]) -
             prob.data.values[i]);
  }
}

} // namespace detail

// Damped least squares (Levenberg-style adaptive damping between gradient
// and Gauss-Newton steps) on weighted residuals. Jacobian by central finite
// differences; bounds enforced by projection.
inline FitResult fit(const FitProblem& prob, const FitOptions& opt = {}) {
  prob.validate();
  const std::size_t np = prob.free.size();
  const std::size_t nd = prob.data.grid.size();
  std::vector<double> x(np);
  for (std::size_t i = 0; i < np; ++i) x[i] = prob.free[i].initial;
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < np; ++i)
      v[i] = std::clamp(v[i], prob.free[i].lower, prob.free[i].upper);
  };

  Eigen::VectorXd r(nd), r_trial(nd);
  detail::weighted_residuals(prob, x, r);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  std::size_t streak = 0;  // consecutive iterations meeting a tolerance
  FitResult res;
  for (const auto& f : prob.free) res.free_names.push_back(f.name);

  std::size_t iter = 0;
  bool converged = false;
  std::string message = "max iterations reached";
  Eigen::MatrixXd jac(nd, np);
  for (; iter < opt.max_iterations; ++iter) {
    // central-difference Jacobian of the weighted residual
    for (std::size_t j = 0; j < np; ++j) {
      const double h = opt.fd_rel_step * std::max(std::abs(x[j]), 1e-30);
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      Eigen::VectorXd rp(nd), rm(nd);
      detail::weighted_residuals(prob, xp, rp);
      detail::weighted_residuals(prob, xm, rm);
      jac.col(static_cast<Eigen::Index>(j)) = (rp - rm) / (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    res.final_gradient_norm = grad.norm();

    bool stepped = false;
    for (int attempt = 0; attempt < 25 && !stepped; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (std::size_t j = 0; j < np; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        a(jj, jj) += lambda * std::max(jtj(jj, jj), 1e-30);
      }
      Eigen::LDLT<Eigen::MatrixXd> solver(a);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-grad);
      std::vector<double> x_trial = x;
      for (std::size_t j = 0; j < np; ++j)
        x_trial[j] += delta(static_cast<Eigen::Index>(j));
      project(x_trial);
      detail::weighted_residuals(prob, x_trial, r_trial);
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      if (cost_trial < cost) {
        const double rel_drop = (cost - cost_trial) / std::max(cost, 1e-300);
        x = x_trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel_drop < opt.rel_cost_tol) ++streak; else streak = 0;
      } else {
        lambda *= 10.0;
      }
    }
    if (res.final_gradient_norm < opt.gradient_tol) ++streak;
    if (!stepped || streak >= 3) {
      converged = true;
      message = stepped ? "converged" : "no descent direction at tolerance";
      ++iter;
      break;
    }
  }

  // covariance from the unscaled normal matrix at the optimum
  for (std::size_t j = 0; j < np; ++j) {
    const double h = opt.fd_rel_step * std::max(std::abs(x[j]), 1e-30);
    std::vector<double> xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Eigen::VectorXd rp(nd), rm(nd);
    detail::weighted_residuals(prob, xp, rp);
    detail::weighted_residuals(prob, xm, rm);
    jac.col(static_cast<Eigen::Index>(j)) = (rp - rm) / (2.0 * h);
  }
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    res.covariance = lu.inverse();
  } else {
    // damped pseudo-inverse as a fallback for singular curvature
    for (std::size_t j = 0; j < np; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      jtj(jj, jj) += 1e-12 * std::max(jtj(jj, jj), 1.0);
    }
    res.covariance = jtj.inverse();
    message += " (singular curvature, damped covariance)";
  }

  const double dof = static_cast<double>(nd > np ? nd - np : 1);
  res.reduced_chisq = 2.0 * cost / dof;
  res.converged = converged;
  res.iterations = iter;
  res.message = message;
  for (std::size_t j = 0; j < np; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    res.estimates[prob.free[j].name] = x[j];
    res.uncertainties[prob.free[j].name] =
        std::sqrt(std::max(0.0, res.covariance(jj, jj)));
  }
  return res;
}

struct SqueezingReport {
  double min_ratio_db;
  double omega_at_min;  // [rad/s]
  double theta_at_min;  // NaN when theta is not scanned
};

// Minimum of a sampled spectrum relative to the shot level; ties broken
// toward the smallest frequency.
inline SqueezingReport squeezing_report(const Spectrum& spec,
                                        double shot_level) {
  if (!(shot_level > 0.0))
    throw std::invalid_argument("squeezing_report: shot level must be > 0");
  double best = spec.values[0];
  double wbest = spec.grid[0];
  for (std::size_t i = 1; i < spec.grid.size(); ++i)
    if (spec.values[i] < best) {
      best = spec.values[i];
      wbest = spec.grid[i];
    }
  return {10.0 * std::log10(best / shot_level), wbest,
          std::numeric_limits<double>::quiet_NaN()};
}

namespace detail {

// golden-section minimization on a unimodal bracket
inline double golden_refine(const std::function<double(double)>& f, double a,
                            double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

} // namespace detail

// Analytic-model variant: scans the grid, then refines the minimum location
// by golden section between the neighboring grid points.
inline SqueezingReport squeezing_report(
    const std::function<double(double)>& model,
    const std::vector<double>& grid, double shot_level) {
  if (!(shot_level > 0.0))
    throw std::invalid_argument("squeezing_report: shot level must be > 0");
  if (grid.size() < 3)
    throw std::invalid_argument("squeezing_report: need at least 3 grid points");
  std::size_t ib = 0;
  double best = model(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = model(grid[i]);
    if (v < best) {
      best = v;
      ib = i;
    }
  }
  const double lo = grid[ib > 0 ? ib - 1 : 0];
  const double hi = grid[std::min(ib + 1, grid.size() - 1)];
  const double w = detail::golden_refine(model, lo, hi, 1e-9 * grid[ib]);
  const double v = std::min(best, model(w));
  return {10.0 * std::log10(v / shot_level),
          v < best ? w : grid[ib],
          std::numeric_limits<double>::quiet_NaN()};
}

// theta x omega scan for models exposing the homodyne angle.
inline SqueezingReport squeezing_report(
    const std::function<double(double, double)>& model,
    const std::vector<double>& omega_grid,
    const std::vector<double>& theta_grid, double shot_level) {
  if (theta_grid.empty())
    throw std::invalid_argument("squeezing_report: empty theta grid");
  SqueezingReport best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (double th : theta_grid) {
    auto slice = [&](double w) { return model(w, th); };
    SqueezingReport r = squeezing_report(slice, omega_grid, shot_level);
    if (r.min_ratio_db < best.min_ratio_db) {
      best = r;
      best.theta_at_min = th;
    }
  }
  return best;
}

struct ValueWithUncertainty {
  double value;
  double sigma;
};

// C = Gamma / gamma_th with the model's decoherence definition; first-order
// uncertainty propagation through the fit covariance.
inline ValueWithUncertainty cooperativity_from_fit(const FitResult& res,
                                                   FitModelKind kind,
                                                   const ParamMap& fixed) {
  if (!res.converged)
    throw std::invalid_argument("cooperativity_from_fit: fit did not converge");
  const ParamMap p = res.all_parameters(fixed);
  auto need = [&](const char* n) {
    auto it = p.find(n);
    if (it == p.end())
      throw std::invalid_argument(
          std::string("cooperativity_from_fit: missing parameter ") + n);
    return it->second;
  };
  auto value = [&](const ParamMap& q) {
    auto at = [&](const char* n) { return q.at(n); };
    switch (kind) {
      case FitModelKind::CoreSqueezing:
      case FitModelKind::SpinSqueezing:
        return at("gamma_meas") / (at("gamma") * (at("n_th") + 0.5));
      case FitModelKind::OptomechFull:
        // the membrane bath is hot, so gamma_th = gamma_m n_th
        return at("gamma_meas") / (at("gamma_m") * at("n_th"));
    }
    throw std::invalid_argument("cooperativity_from_fit: unknown model");
  };
  // touch the required parameters so missing ones are reported by name
  if (kind == FitModelKind::OptomechFull) {
    need("gamma_meas"); need("gamma_m"); need("n_th");
  } else {
    need("gamma_meas"); need("gamma"); need("n_th");
  }
  const double c0 = value(p);
  // gradient with respect to the free parameters only
  const std::size_t np = res.free_names.size();
  Eigen::VectorXd grad(np);
  for (std::size_t j = 0; j < np; ++j) {
    const std::string& name = res.free_names[j];
    const double v = p.at(name);
    const double h = 1e-6 * std::max(std::abs(v), 1e-30);
    ParamMap pp = p, pm = p;
    pp[name] = v + h;
    pm[name] = v - h;
    grad(static_cast<Eigen::Index>(j)) = (value(pp) - value(pm)) / (2.0 * h);
  }
  const double var = np > 0 ? double(grad.transpose() * res.covariance * grad) : 0.0;
  return {c0, std::sqrt(std::max(0.0, var))};
}

// Documented initial-guess heuristic: extremum location sets omega, full
// width at half extremum sets gamma, and the extremum depth is inverted
// through the sin^2-weighted signal term for Gamma.
inline ParamMap guess_from_extremum(const Spectrum& spec, double shot_level,
                                    double theta) {
  std::size_t ie = 0;
  double dev = 0.0;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double d = std::abs(spec.values[i] - shot_level);
    if (d > dev) {
      dev = d;
      ie = i;
    }
  }
  const double half = shot_level + 0.5 * (spec.values[ie] - shot_level);
  std::size_t lo = ie, hi = ie;
  const bool peak = spec.values[ie] > shot_level;
  auto beyond = [&](double v) { return peak ? v > half : v < half; };
  while (lo > 0 && beyond(spec.values[lo])) --lo;
  while (hi + 1 < spec.values.size() && beyond(spec.values[hi])) ++hi;
  const double gamma = std::max(spec.grid[hi] - spec.grid[lo],
                                spec.grid[1] - spec.grid[0]);
  const double s2 = std::sin(theta) * std::sin(theta);
  // peak height ~ 4 Gamma S_XX(Omega) sin^2(theta) with S_XX(Omega) ~ 2 (gamma_th + Gamma)/gamma^2;
  // drop the interference term and solve the quadratic for Gamma
  const double excess = std::max(std::abs(spec.values[ie] - shot_level), 1e-6);
  const double a = 8.0 * s2 / (gamma * gamma);
  // excess = a Gamma (gamma/2 + Gamma) taking gamma_th ~ gamma/2
  const double gm =
      (-a * 0.5 * gamma + std::sqrt(a * a * 0.25 * gamma * gamma +
                                    4.0 * a * excess)) / (2.0 * a);
  return {{"omega", spec.grid[ie]}, {"gamma", gamma}, {"gamma_meas", gm}};
}

} // namespace qnoise
