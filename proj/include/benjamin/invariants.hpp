#pragma once

// Discrete momentum, mass and energy
//
//   I_h = h sum U_j^2,   C_h = h sum U_j,
//   E_h = h sum [ delta |(D^m U)_j|^2 - gamma U_j (H^{2r} U)_j - 2 U_j^{q+2} / ((q+1)(q+2)) ],
//
// with H the operator of symbol |kappa|.

#include <cmath>

#include "benjamin/spectral.hpp"

namespace benjamin {

inline double invariant_momentum(const SpectralField& u) {
  double s = 0.0;
  for (double v : u.values()) s += v * v;
  return u.grid().spacing() * s;
}

inline double invariant_mass(const SpectralField& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return u.grid().spacing() * s;
}

inline double invariant_energy(const SpectralField& u, const EquationParams& p) {
  const auto& g = u.grid();
  const auto& v = u.values();
  const auto dfield = derivative(u, p.m);
  const auto& dm = dfield.values();
  std::vector<double> hv(v.size(), 0.0);
  if (p.gamma != 0.0) {
    const auto sym = tabulate_symbol(g, [&](double kappa) { return abs_power(kappa, 2.0 * p.r); });
    hv = apply_multiplier(sym, u).values();
  }
  const double cq = 2.0 / ((p.q + 1.0) * (p.q + 2.0));
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j)
    s += p.delta * dm[j] * dm[j] - p.gamma * v[j] * hv[j] - cq * integer_power(v[j], p.q + 2);
  return g.spacing() * s;
}

struct Invariants {
  double momentum = 0.0;  // I_h
  double energy = 0.0;    // E_h
  double mass = 0.0;      // C_h
};

inline Invariants invariants(const SpectralField& u, const EquationParams& p) {
  return {invariant_momentum(u), invariant_energy(u, p), invariant_mass(u)};
}

}  // namespace benjamin
