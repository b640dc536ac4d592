#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

// Adaptive Gauss-Kronrod (G7/K15) quadrature. Narrow Lorentzian-like peaks
// are handled by bisecting intervals until the embedded error estimate meets
// the requested tolerance.

namespace qnoise {

namespace detail {

// K15 nodes/weights on [-1, 1]; the odd-indexed nodes form the embedded G7 rule.
inline constexpr double kronrod_nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898,  0.0,
     0.207784955007898,  0.405845151377397,  0.586087235467691,
     0.741531185599394,  0.864864423359769,  0.949107912342759,
     0.991455371120813};

inline constexpr double kronrod_weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529};

inline constexpr double gauss_weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

struct PanelResult {
  double integral;
  double error;
};

template <typename F>
PanelResult gauss_kronrod_panel(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(mid + half * kronrod_nodes[i]);
    k += kronrod_weights[i] * v;
    if (i % 2 == 1) g += gauss_weights[i / 2] * v;
  }
  k *= half;
  g *= half;
  return {k, std::abs(k - g)};
}

} // namespace detail

struct QuadratureResult {
  double value;
  double error_estimate;
  bool converged;
};

template <typename F>
QuadratureResult integrate_adaptive(const F& f, double a, double b,
                                    double rel_tol = 1e-6,
                                    double abs_tol = 0.0,
                                    int max_panels = 4096) {
  if (!(b > a)) throw std::invalid_argument("integrate_adaptive: requires b > a");

  struct Panel {
    double a, b, integral, error;
  };

  auto first = detail::gauss_kronrod_panel(f, a, b);
  std::vector<Panel> panels{{a, b, first.integral, first.error}};
  int evaluations = 1;

  while (evaluations < max_panels) {
    double total = 0.0, err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].integral;
      err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    const double tol = std::max(abs_tol, rel_tol * std::abs(total));
    if (err <= tol) return {total, err, true};

    Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    auto left = detail::gauss_kronrod_panel(f, p.a, mid);
    auto right = detail::gauss_kronrod_panel(f, mid, p.b);
    panels[worst] = {p.a, mid, left.integral, left.error};
    panels.push_back({mid, p.b, right.integral, right.error});
    evaluations += 2;
  }

  double total = 0.0, err = 0.0;
  for (const auto& p : panels) {
    total += p.integral;
    err += p.error;
  }
  return {total, err, err <= std::max(abs_tol, rel_tol * std::abs(total))};
}

} // namespace qnoise
