#pragma once

// Parameter sweeps over profile solves: amplitude against speed, amplitude
// against the nonlinearity exponent, and envelope decay fits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "benjamin/decay.hpp"
#include "benjamin/fit.hpp"
#include "benjamin/solitary.hpp"

namespace benjamin {

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown by any task is rethrown after all workers finish.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(m);
            if (!first) first = std::current_exception();
          }
        }
      });
  }
  if (first) std::rethrow_exception(first);
}

/// c_min, c_min + stride, ... up to c_max (inclusive within round-off).
inline std::vector<double> stride_range(double lo, double hi, double stride) {
  if (!(stride > 0.0) || !(hi >= lo)) throw InvalidArgument("range needs stride > 0 and hi >= lo");
  const long n = static_cast<long>(std::floor((hi - lo) / stride + 1e-9));
  std::vector<double> v(n + 1);
  for (long i = 0; i <= n; ++i) v[i] = lo + i * stride;
  return v;
}

struct SolveRow {
  double parameter = 0.0;  // c_s or q
  double amplitude = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string error;  // empty when the solve produced a profile

  bool usable() const { return error.empty() && converged; }
};

struct StudyResult {
  std::vector<SolveRow> rows;
  std::optional<FitResult> fit;
  std::vector<std::string> warnings;
};

inline SolveRow solve_row(double parameter, const ProfileEquation& eq, const PeriodicGrid& g,
                          const PetviashviliConfig& cfg) {
  SolveRow row;
  row.parameter = parameter;
  try {
    const auto prof = solve_profile(gkdv_seed(eq, g), eq, cfg);
    row.amplitude = prof.amplitude();
    row.converged = prof.converged;
    row.iterations = prof.iterations;
    row.residual = prof.residual;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// One profile per c_s with gamma held fixed, and the power law
/// A = K c_s^alpha fitted to the converged rows.
inline StudyResult amplitude_speed_study(const EquationParams& tmpl, const std::vector<double>& speeds,
                                         const PeriodicGrid& g, const PetviashviliConfig& cfg, int threads = 1) {
  StudyResult out;
  out.rows.resize(speeds.size());
  parallel_for(speeds.size(), threads, [&](std::size_t i) {
    EquationParams p = tmpl;
    p.c_s = speeds[i];
    try {
      out.rows[i] = solve_row(speeds[i], ProfileEquation::general(p), g, cfg);
    } catch (const std::exception& e) {
      out.rows[i].parameter = speeds[i];
      out.rows[i].error = e.what();
    }
  });
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    if (r.usable()) {
      xs.push_back(r.parameter);
      ys.push_back(r.amplitude);
    } else {
      out.warnings.push_back("c_s = " + std::to_string(r.parameter) + " excluded from the fit: " +
                             (r.error.empty() ? "not converged" : r.error));
    }
  }
  try {
    out.fit = fit_power(xs, ys);
  } catch (const std::exception& e) {
    out.warnings.push_back(std::string("power fit failed: ") + e.what());
  }
  return out;
}

/// Amplitude of the gKdV wave at speed c: A = (c (q+1)(q+2)/2)^{1/q}, so
/// the reference exponent is alpha = 1/q.
inline double gkdv_amplitude(double c_s, int q) { return std::pow(c_s * (q + 1) * (q + 2) / 2.0, 1.0 / q); }

/// Amplitude for each q. With gamma_tilde set the normalized equation is
/// solved; otherwise tmpl (with its gamma and c_s) is used for every q.
inline StudyResult amplitude_q_study(const EquationParams& tmpl, const std::vector<int>& qs,
                                     std::optional<double> gamma_tilde, const PeriodicGrid& g,
                                     const PetviashviliConfig& cfg, int threads = 1) {
  StudyResult out;
  out.rows.resize(qs.size());
  parallel_for(qs.size(), threads, [&](std::size_t i) {
    try {
      EquationParams p = tmpl;
      p.q = qs[i];
      const auto eq = gamma_tilde ? ProfileEquation::normalized(qs[i], p.r, p.m, *gamma_tilde)
                                  : ProfileEquation::general(p);
      out.rows[i] = solve_row(qs[i], eq, g, cfg);
    } catch (const std::exception& e) {
      out.rows[i].parameter = qs[i];
      out.rows[i].error = e.what();
    }
  });
  for (const auto& r : out.rows)
    if (!r.usable())
      out.warnings.push_back("q = " + std::to_string(static_cast<int>(r.parameter)) + ": " +
                             (r.error.empty() ? "not converged" : r.error));
  return out;
}

/// Denominator degree matching algebraic decay of order 2r + 1.
inline int rational_degree_for(double r) { return static_cast<int>(std::lround(2.0 * r + 1.0)); }

inline bool integer_order(double r) { return std::abs(r - std::round(r)) < 1e-12; }

enum class DecayModel { automatic, exp1, exp2, rational };

struct DecayStudy {
  std::vector<EnvelopePoint> envelope;
  std::vector<FitResult> fits;  // exp1 and exp2 for integer r, one rational fit otherwise
};

/// Envelope of |phi| on x_min <= x <= x_max and the fits suited to the
/// decay type: exponential for integer r, rational of degree 2r + 1
/// otherwise. A non-automatic model (and a positive degree for the
/// rational model) overrides the choice.
inline DecayStudy decay_study(const SpectralField& phi, double r, double x_min,
                              double x_max = std::numeric_limits<double>::infinity(),
                              DecayModel model = DecayModel::automatic, int degree = 0) {
  DecayStudy out;
  for (const auto& e : envelope_extract(phi, x_min))
    if (e.x <= x_max) out.envelope.push_back(e);
  if (out.envelope.size() < 4)
    throw InsufficientEnvelope("fewer than 4 envelope maxima in [" + std::to_string(x_min) + ", " +
                               std::to_string(x_max) + "]");
  std::vector<double> xs, ys;
  for (const auto& e : out.envelope) {
    xs.push_back(e.x);
    ys.push_back(e.value);
  }
  if (model == DecayModel::automatic)
    model = integer_order(r) ? DecayModel::exp2 : DecayModel::rational;
  switch (model) {
    case DecayModel::exp1:
      out.fits.push_back(fit_exp(xs, ys, 1));
      break;
    case DecayModel::exp2:
      out.fits.push_back(fit_exp(xs, ys, 1));
      out.fits.push_back(fit_exp(xs, ys, 2));
      break;
    default:
      out.fits.push_back(fit_rational(xs, ys, degree > 0 ? degree : rational_degree_for(r)));
      break;
  }
  return out;
}

}  // namespace benjamin
