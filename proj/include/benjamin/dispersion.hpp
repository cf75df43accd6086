#pragma once

// Linear dispersive-tail structure in the frame moving with the pulse.
// With x = kappa^2,
//
//   phase speed      v(kappa)  = -c_s + phi(x),  phi(x) = gamma x^r - delta x^m
//   group velocity   w'(kappa) = -c_s + psi(x),  psi(x) = (2r+1) gamma x^r - (2m+1) delta x^m
//
// F(x) = psi(x) - c_s has two positive zeros x- < x+ exactly when
// gamma > gamma*, the value at which max psi = c_s.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "benjamin/error.hpp"
#include "benjamin/solitary.hpp"
#include "benjamin/spectral.hpp"

namespace benjamin {

inline double phase_speed(double kappa, const EquationParams& p) {
  const double x = kappa * kappa;
  return -p.c_s + p.gamma * abs_power(x, p.r) - p.delta * abs_power(x, p.m);
}

inline double group_velocity(double kappa, const EquationParams& p) {
  const double x = kappa * kappa;
  return -p.c_s + (2.0 * p.r + 1.0) * p.gamma * abs_power(x, p.r) - (2.0 * p.m + 1.0) * p.delta * abs_power(x, p.m);
}

/// F(x) = psi(x) - c_s
inline double radiation_function(double x, const EquationParams& p) {
  return (2.0 * p.r + 1.0) * p.gamma * abs_power(x, p.r) - (2.0 * p.m + 1.0) * p.delta * abs_power(x, p.m) - p.c_s;
}

inline double gamma_star(const EquationParams& p) {
  if (!(p.r > 0.0) || !(p.r < p.m)) throw InvalidArgument("gamma* needs 0 < r < m");
  if (!(p.c_s > 0.0) || !(p.delta > 0.0)) throw InvalidArgument("gamma* needs c_s > 0 and delta > 0");
  const double r = p.r, m = p.m;
  const double base = r * (2.0 * r + 1.0) / (m * (2.0 * m + 1.0) * p.delta);
  const double denom = (2.0 * r + 1.0) * (1.0 - r / m) * std::pow(base, r / (m - r));
  return std::pow(p.c_s / denom, (m - r) / m);
}

enum class DispersionRegime { two_roots, no_forward_radiation };

inline const char* to_string(DispersionRegime r) {
  return r == DispersionRegime::two_roots ? "two-roots" : "no-forward-radiation";
}

struct DispersionReport {
  double gamma = 0.0;
  double gamma_max = 0.0;
  double gamma_star = 0.0;
  DispersionRegime regime = DispersionRegime::no_forward_radiation;
  std::optional<double> x_minus, x_plus;  // zeros of F
  double x_phi_max = 0.0;                 // maximizer of phi
  double x_psi_max = 0.0;                 // maximizer of psi
  double x_c = 0.0;                       // psi(x_c) = 0
  double x_p = 0.0;                       // phase speed equals group velocity
  double discriminant = 0.0;              // gamma^2 - 3 delta c_s (gBenjamin only)
  bool closed_form = false;               // r = 1/2, m = 1
  std::string phase_speed_sign;
  std::string group_velocity_sign;
};

/// Inconsistent regime and root bracketing; should not happen.
class DispersionInconsistency : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

template <class Fn>
double bisect(Fn&& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline DispersionReport classify_dispersion(const EquationParams& p) {
  require_admissible(p);
  if (!(p.r > 0.0)) throw InvalidArgument("dispersion classification needs r > 0");
  DispersionReport rep;
  const double r = p.r, m = p.m;
  rep.gamma = p.gamma;
  rep.gamma_max = gamma_max(p);
  rep.gamma_star = gamma_star(p);
  rep.regime = p.gamma > rep.gamma_star ? DispersionRegime::two_roots : DispersionRegime::no_forward_radiation;
  const double expo = 1.0 / (m - r);
  rep.x_phi_max = std::pow(r * p.gamma / (m * p.delta), expo);
  rep.x_psi_max = std::pow(r * (2.0 * r + 1.0) * p.gamma / (m * (2.0 * m + 1.0) * p.delta), expo);
  rep.x_c = std::pow((2.0 * r + 1.0) * p.gamma / ((2.0 * m + 1.0) * p.delta), expo);
  rep.x_p = rep.x_phi_max;
  rep.closed_form = r == 0.5 && p.m == 1;

  if (rep.closed_form) {
    // zeros of F after squaring: 9 d^2 x^2 + (6 d c - 4 g^2) x + c^2 = 0
    const double d = p.delta, c = p.c_s, g = p.gamma;
    rep.discriminant = g * g - 3.0 * d * c;
    rep.x_c = 4.0 * g * g / (9.0 * d * d);
    rep.x_p = (g / (2.0 * d)) * (g / (2.0 * d));
    if (rep.regime == DispersionRegime::two_roots) {
      // sqrt(x) = (g -+ sqrt(g^2 - 3 d c)) / (3 d)
      const double s = std::sqrt(rep.discriminant);
      const double lo = (g - s) / (3.0 * d), hi = (g + s) / (3.0 * d);
      rep.x_minus = lo * lo;
      rep.x_plus = hi * hi;
    }
  } else if (rep.regime == DispersionRegime::two_roots) {
    auto f = [&](double x) { return radiation_function(x, p); };
    // delta x^m = 2 (c_s + gamma x^r) puts F(x_big) < 0
    double x_big = 1.0;
    while (p.delta * std::pow(x_big, m) < 2.0 * (p.c_s + p.gamma * std::pow(x_big, r))) x_big *= 2.0;
    const double xs = rep.x_psi_max;
    if (!(f(xs) > 0.0) || !(f(x_big) < 0.0) || !(xs < x_big))
      throw DispersionInconsistency("F has no sign change although gamma > gamma*");
    rep.x_minus = detail::bisect(f, 0.0, xs);
    rep.x_plus = detail::bisect(f, xs, x_big);
  }

  rep.phase_speed_sign = "v < 0 for all kappa != 0";
  if (rep.regime == DispersionRegime::two_roots)
    rep.group_velocity_sign = "w' > 0 for x- < kappa^2 < x+, w' < 0 otherwise";
  else
    rep.group_velocity_sign = "w' <= 0 for all kappa";
  return rep;
}

}  // namespace benjamin
