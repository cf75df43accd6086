#pragma once

// Tail diagnostics of computed profiles: envelope of |phi| beyond the
// core and (phi, phi') phase-plane data.

#include <cmath>
#include <utility>
#include <vector>

#include "benjamin/error.hpp"
#include "benjamin/spectral.hpp"

namespace benjamin {

class InsufficientEnvelope : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct EnvelopePoint {
  double x;
  double value;
};

/// Local maxima of |phi_j| at nodes with x_j >= x_min, in increasing x.
inline std::vector<EnvelopePoint> envelope_extract(const SpectralField& phi, double x_min) {
  const auto& g = phi.grid();
  const auto& v = phi.values();
  const int n = g.size();
  std::vector<EnvelopePoint> out;
  for (int j = 1; j + 1 < n; ++j) {
    const double x = g.node(j);
    if (x < x_min) continue;
    const double a = std::abs(v[j - 1]), b = std::abs(v[j]), c = std::abs(v[j + 1]);
    if (b > a && b >= c && b > 0.0) out.push_back({x, b});
  }
  if (out.size() < 4)
    throw InsufficientEnvelope("only " + std::to_string(out.size()) + " local maxima of |phi| beyond x = " +
                               std::to_string(x_min) + " (need 4)");
  return out;
}

/// Default start of the envelope window: three decay lengths 1/K past the
/// peak, with K the gKdV rate (q/2) sqrt(c_s/delta).
inline double default_envelope_start(const SpectralField& phi, const EquationParams& p) {
  const auto& g = phi.grid();
  const auto& v = phi.values();
  int jmax = 0;
  for (int j = 0; j < g.size(); ++j)
    if (std::abs(v[j]) > std::abs(v[jmax])) jmax = j;
  const double rate = 0.5 * p.q * std::sqrt(p.c_s / p.delta);
  return g.node(jmax) + 3.0 / rate;
}

struct PhasePoint {
  double value;
  double slope;
};

inline std::vector<PhasePoint> phase_plot_data(const SpectralField& phi) {
  const auto& v = phi.values();
  const auto dfield = derivative(phi, 1);
  const auto& d = dfield.values();
  std::vector<PhasePoint> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = {v[j], d[j]};
  return out;
}

}  // namespace benjamin
