#pragma once

// Solitary-wave profiles of
//
//   -c_s phi + F(phi) - L phi = 0,   F(phi) = a phi^{q+1}
//
// (a = 1/(q+1) for the physical equation, a = 1 for the normalized form)
// computed by the Petviashvili iteration in Fourier space, optionally
// wrapped in restarted minimal polynomial extrapolation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "benjamin/accel.hpp"
#include "benjamin/error.hpp"
#include "benjamin/spectral.hpp"

namespace benjamin {

/// s(r, m) = (r/m) (m/r - 1)^{(m-r)/m}
inline double s_factor(double r, int m) {
  return (r / m) * std::pow(static_cast<double>(m) / r - 1.0, (m - r) / m);
}

/// Largest gamma keeping c_s + delta x^m - gamma x^r positive on x > 0.
/// Returns +inf for r = 0 (no constraint from the nonlocal term).
inline double gamma_max(const EquationParams& p) {
  if (p.m < 1 || !(p.r >= 0.0)) throw InvalidArgument("invalid (r, m)");
  if (p.r >= p.m) throw InvalidArgument("gamma_max requires r < m");
  if (!(p.c_s > 0.0) || !(p.delta > 0.0)) throw InvalidArgument("gamma_max requires c_s > 0 and delta > 0");
  if (p.r == 0.0) return std::numeric_limits<double>::infinity();
  const double m = p.m;
  return std::pow(p.delta, p.r / m) * std::pow(p.c_s, (m - p.r) / m) / s_factor(p.r, p.m);
}

inline void require_admissible(const EquationParams& p) {
  p.validate();
  if (!(p.c_s > 0.0)) throw InvalidArgument("profile problems need c_s > 0");
  const double gmax = gamma_max(p);
  if (!(p.gamma < gmax))
    throw Inadmissible("gamma = " + std::to_string(p.gamma) + " is not below gamma_max(c_s) = " +
                           std::to_string(gmax),
                       p.gamma, gmax);
}

/// The profile equation actually iterated: resolvent c_s + L and the
/// nonlinearity coefficient a in F(phi) = a phi^{q+1}.
struct ProfileEquation {
  EquationParams params;
  double nonlinear_coeff = 0.0;

  static ProfileEquation general(const EquationParams& p) {
    require_admissible(p);
    return {p, 1.0 / (p.q + 1)};
  }

  /// psi - psi^{q+1} + D^{2m} psi - (gamma~/s(r,m)) |D|^{2r} psi = 0, i.e.
  /// c_s = delta = 1, gamma = gamma~ gamma_max(1, 1), a = 1.
  static ProfileEquation normalized(int q, double r, int m, double gamma_tilde) {
    if (!(gamma_tilde >= 0.0) || !(gamma_tilde < 1.0))
      throw Inadmissible("normalized gamma~ must lie in [0, 1)", gamma_tilde, 1.0);
    EquationParams p{r, m, q, 0.0, 1.0, 1.0};
    p.gamma = r > 0.0 ? gamma_tilde / s_factor(r, m) : 0.0;
    p.validate();
    return {p, 1.0};
  }

  int q() const noexcept { return params.q; }
};

struct NormalizedForm {
  EquationParams source;
  double amplitude_scale = 0.0;  // A(q) = ((q+1) c_s)^{1/q}
  double spatial_scale = 0.0;    // |B| = (c_s/delta)^{1/(2m)}
  double gamma_tilde = 0.0;      // gamma / gamma_max(c_s)

  ProfileEquation equation() const {
    return ProfileEquation::normalized(source.q, source.r, source.m, gamma_tilde);
  }
};

inline NormalizedForm normalize(const EquationParams& p) {
  require_admissible(p);
  NormalizedForm n;
  n.source = p;
  n.amplitude_scale = std::pow((p.q + 1) * p.c_s, 1.0 / p.q);
  n.spatial_scale = std::pow(p.c_s / p.delta, 1.0 / (2.0 * p.m));
  n.gamma_tilde = p.r > 0.0 ? p.gamma / gamma_max(p) : 0.0;
  return n;
}

/// Recover (gamma, c_s, delta) from the normalized description.
inline EquationParams denormalize_params(const NormalizedForm& n) {
  EquationParams p = n.source;
  EquationParams unit = p;
  unit.gamma = 0.0;
  p.gamma = p.r > 0.0 ? n.gamma_tilde * gamma_max(unit) : 0.0;
  return p;
}

/// phi(X) = A psi(B X): the psi grid (half-length l) maps to X-half-length l / B.
inline SpectralField denormalize(const NormalizedForm& n, const SpectralField& psi) {
  PeriodicGrid g(psi.grid().half_length() / n.spatial_scale, psi.size());
  std::vector<double> v = psi.values();
  for (double& x : v) x *= n.amplitude_scale;
  return SpectralField::from_values(g, std::move(v));
}

/// Closed-form gKdV (gamma = 0, m = 1) solitary wave of the given equation,
/// A sech^{2/q}(K (x - center)), wrapped to the nearest periodic image.
/// A = [c_s (q+1)(q+2)/2]^{1/q} for a = 1/(q+1), K = (q/2) sqrt(c_s/delta).
struct GkdvShape {
  double amplitude;
  double rate;
};

inline GkdvShape gkdv_shape(const ProfileEquation& eq) {
  const auto& p = eq.params;
  if (!(p.c_s > 0.0) || !(p.delta > 0.0)) throw InvalidArgument("gkdv seed needs c_s, delta > 0");
  const int q = p.q;
  const double standard = std::pow(p.c_s * (q + 1) * (q + 2) / 2.0, 1.0 / q);
  const double rescale = std::pow(1.0 / (eq.nonlinear_coeff * (q + 1)), 1.0 / q);
  return {standard * rescale, 0.5 * q * std::sqrt(p.c_s / p.delta)};
}

inline double periodic_offset(double x, double center, double l) {
  double d = x - center;
  const double period = 2.0 * l;
  d -= period * std::round(d / period);
  return d;
}

inline SpectralField gkdv_seed(const ProfileEquation& eq, const PeriodicGrid& g, double center = 0.0) {
  const auto s = gkdv_shape(eq);
  const double expo = 2.0 / eq.q();
  return SpectralField::sample(g, [&](double x) {
    const double d = periodic_offset(x, center, g.half_length());
    return s.amplitude * std::pow(1.0 / std::cosh(s.rate * d), expo);
  });
}

inline SpectralField gkdv_seed(const EquationParams& p, const PeriodicGrid& g, double center = 0.0) {
  p.validate();
  return gkdv_seed(ProfileEquation{p, 1.0 / (p.q + 1)}, g, center);
}

struct MultipulseSeed {
  SpectralField field;
  std::vector<std::string> warnings;
};

/// Sum of gKdV seeds at the given centers. Pulses closer than six decay
/// lengths (periodically) produce a warning.
inline MultipulseSeed multipulse_seed(const ProfileEquation& eq, const PeriodicGrid& g,
                                      const std::vector<double>& centers) {
  MultipulseSeed out{SpectralField(g), {}};
  if (centers.empty()) return out;
  const double decay = 1.0 / gkdv_shape(eq).rate;
  std::vector<double> v(g.size(), 0.0);
  for (double c : centers) {
    const auto single = gkdv_seed(eq, g, c);
    for (int j = 0; j < g.size(); ++j) v[j] += single[j];
  }
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t k = i + 1; k < centers.size(); ++k) {
      const double d = std::abs(periodic_offset(centers[i], centers[k], g.half_length()));
      if (d < 6.0 * decay)
        out.warnings.push_back("pulses at " + std::to_string(centers[i]) + " and " +
                               std::to_string(centers[k]) + " overlap (separation " +
                               std::to_string(d) + " < 6 decay lengths)");
    }
  out.field = SpectralField::from_values(g, std::move(v));
  return out;
}

enum class StopMode { residual_euclid, residual_max, residual_relative, sfe };

inline StopMode parse_stop_mode(const std::string& s) {
  if (s == "residual-euclid") return StopMode::residual_euclid;
  if (s == "residual-max") return StopMode::residual_max;
  if (s == "residual-relative") return StopMode::residual_relative;
  if (s == "sfe") return StopMode::sfe;
  throw InvalidArgument("unknown stop mode '" + s + "'");
}

inline const char* to_string(StopMode m) {
  switch (m) {
    case StopMode::residual_euclid: return "residual-euclid";
    case StopMode::residual_max: return "residual-max";
    case StopMode::residual_relative: return "residual-relative";
    case StopMode::sfe: return "sfe";
  }
  return "?";
}

struct PetviashviliConfig {
  std::optional<double> epsilon;  // default (q+1)/q
  double tol = 1e-12;
  int max_iters = 500;
  StopMode stop_mode = StopMode::residual_euclid;
  std::optional<accel::MpeConfig> accel = accel::MpeConfig{};
  bool dealias = false;

  double exponent(int q) const { return epsilon.value_or((q + 1.0) / q); }

  void validate(int q) const {
    const double e = exponent(q);
    if (!(e > 1.0) || !(e < (q + 2.0) / q))
      throw InvalidArgument("epsilon must satisfy 1 < epsilon < (q+2)/q");
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
    if (accel) accel->validate();
  }
};

enum class IterateKind { seed, base, extrapolant };

struct TraceEntry {
  int iteration = 0;  // base steps taken when this iterate was accepted
  IterateKind kind = IterateKind::base;
  double sfe = 0.0;
  double residual = 0.0;  // in the configured stop norm (sfe mode: euclid)
};

struct WaveProfile {
  SpectralField field;
  ProfileEquation equation;
  std::vector<TraceEntry> trace;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double sfe = 0.0;
  accel::CycleStats accel_stats;

  double amplitude() const { return field.max_abs(); }
};

/// Breakdown of the stabilizing factor; carries the trace accumulated so far.
class DegenerateIteration : public NumericalError {
 public:
  DegenerateIteration(const std::string& what, std::vector<TraceEntry> trace = {})
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

/// Everything one Petviashvili evaluation at phi produces.
struct PetviashviliEval {
  double factor = 0.0;  // m(phi)
  double sfe = 0.0;
  double res_euclid = 0.0;
  double res_max = 0.0;
  double res_relative = 0.0;
  Spectrum nonlinear;  // F^(phi)

  double metric(StopMode mode) const {
    switch (mode) {
      case StopMode::residual_euclid: return res_euclid;
      case StopMode::residual_max: return res_max;
      case StopMode::residual_relative: return res_relative;
      case StopMode::sfe: return sfe;
    }
    return res_euclid;
  }
};

/// Working state of the iteration for one (equation, grid) pair.
class PetviashviliOperator {
 public:
  PetviashviliOperator(const ProfileEquation& eq, const PeriodicGrid& g, bool dealias = false)
      : eq_(eq), grid_(g), fft_(g), resolvent_(resolvent_symbol(eq.params, g)), dealias_(dealias) {
    const double smin = resolvent_.min();
    if (!(smin > 0.0)) {
      const double gmax = eq.params.r > 0.0 ? gamma_max(eq.params) : std::numeric_limits<double>::infinity();
      throw Inadmissible("resolvent symbol is not positive on every mode (min " + std::to_string(smin) + ")",
                         eq.params.gamma, gmax);
    }
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  const MultiplierSymbol& resolvent() const noexcept { return resolvent_; }
  const ProfileEquation& equation() const noexcept { return eq_; }

  /// The iteration runs on the half spectrum stored as interleaved
  /// (re, im) pairs, so that sigma_k phi^_k is never formed from a
  /// re-transformed (noisy) grid function.
  std::vector<double> pack(const Spectrum& c) const {
    std::vector<double> y(2 * c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      y[2 * k] = c[k].real();
      y[2 * k + 1] = c[k].imag();
    }
    return y;
  }

  Spectrum unpack(std::span<const double> y) const {
    if (y.size() != 2 * static_cast<std::size_t>(grid_.modes()))
      throw InvalidArgument("packed spectrum length does not match the grid");
    Spectrum c(y.size() / 2);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = Complex(y[2 * k], y[2 * k + 1]);
    return c;
  }

  std::vector<double> values_of(std::span<const double> packed) const { return fft_.inverse(unpack(packed)); }

  /// Spectrum of a * phi^{q+1}.
  Spectrum nonlinear_spectrum(const Spectrum& phi_hat) const {
    Spectrum in = phi_hat;
    if (dealias_) truncate_two_thirds(in, grid_.size());
    auto v = fft_.inverse(in);
    const int e = eq_.q() + 1;
    for (double& x : v) x = eq_.nonlinear_coeff * integer_power(x, e);
    Spectrum out = fft_.forward(v);
    if (dealias_) truncate_two_thirds(out, grid_.size());
    return out;
  }

  PetviashviliEval evaluate(std::span<const double> packed) const {
    PetviashviliEval ev;
    const Spectrum c = unpack(packed);
    ev.nonlinear = nonlinear_spectrum(c);
    const int nyq = grid_.nyquist();
    double num = 0.0, den = 0.0, norm2 = 0.0, res2 = 0.0;
    Spectrum r(c.size());
    for (int k = 0; k <= nyq; ++k) {
      const double w = (k == 0 || k == nyq) ? 1.0 : 2.0;
      const double a2 = std::norm(c[k]);
      num += w * resolvent_.table[k] * a2;
      den += w * (ev.nonlinear[k] * std::conj(c[k])).real();
      norm2 += w * a2;
      r[k] = resolvent_.table[k] * c[k] - ev.nonlinear[k];
      res2 += w * std::norm(r[k]);
    }
    if (!(std::abs(den) > 1e-14 * norm2) || !std::isfinite(den))
      throw DegenerateIteration("stabilizing factor denominator vanishes");
    ev.factor = num / den;
    ev.sfe = std::abs(1.0 - ev.factor);
    const double length = grid_.length();  // h N
    ev.res_euclid = std::sqrt(length * res2);
    ev.res_relative = norm2 > 0.0 ? std::sqrt(res2 / norm2) : std::numeric_limits<double>::infinity();
    const auto rv = fft_.inverse(r);
    for (double x : rv) ev.res_max = std::max(ev.res_max, std::abs(x));
    return ev;
  }

  /// phi^ <- m^eps F^(phi) / (c_s + L^), packed
  std::vector<double> step(const PetviashviliEval& ev, double epsilon) const {
    if (!(ev.factor > 0.0))
      throw DegenerateIteration("stabilizing factor is not positive (m = " + std::to_string(ev.factor) + ")");
    const double scale = std::pow(ev.factor, epsilon);
    Spectrum next(ev.nonlinear.size());
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = scale * ev.nonlinear[k] / resolvent_.table[k];
    return pack(next);
  }

 private:
  ProfileEquation eq_;
  PeriodicGrid grid_;
  FourierTransform fft_;
  MultiplierSymbol resolvent_;
  bool dealias_;
};

/// m(phi) = sum sigma_k |phi^_k|^2 / sum F^_k conj(phi^_k)
inline double stabilizing_factor(const SpectralField& phi, const ProfileEquation& eq) {
  PetviashviliOperator op(eq, phi.grid());
  return op.evaluate(op.pack(phi.coefficients())).factor;
}

inline SpectralField petviashvili_step(const SpectralField& phi, const ProfileEquation& eq,
                                       std::optional<double> epsilon = std::nullopt) {
  PetviashviliOperator op(eq, phi.grid());
  const auto ev = op.evaluate(op.pack(phi.coefficients()));
  const auto next = op.step(ev, epsilon.value_or((eq.q() + 1.0) / eq.q()));
  return SpectralField::from_coefficients(phi.grid(), op.unpack(next));
}

/// (c_s + L) phi - F(phi), assembled from independent symbol and
/// pointwise operations.
inline SpectralField profile_residual(const SpectralField& phi, const ProfileEquation& eq) {
  auto lhs = apply_multiplier(resolvent_symbol(eq.params, phi.grid()), phi);
  auto nl = nonlinearity(phi, eq.q());
  const double to_coeff = eq.nonlinear_coeff * (eq.q() + 1);
  return lhs + (-to_coeff) * nl;
}

inline double euclid_norm(const SpectralField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(f.grid().spacing() * s);
}

inline WaveProfile solve_profile(const SpectralField& seed, const ProfileEquation& eq,
                                 const PetviashviliConfig& cfg) {
  cfg.validate(eq.q());
  const PetviashviliOperator op(eq, seed.grid(), cfg.dealias);
  const double epsilon = cfg.exponent(eq.q());
  const auto& g = seed.grid();

  WaveProfile out{seed, eq, {}, false, 0, 0.0, 0.0, {}};
  int steps = 0;

  // Small cache: stop/merit and the following step see the same vector.
  struct Cached {
    std::vector<double> y;
    PetviashviliEval ev;
  };
  std::vector<Cached> cache;
  auto eval = [&](const std::vector<double>& y) -> const PetviashviliEval& {
    for (auto& c : cache)
      if (c.y == y) return c.ev;
    PetviashviliEval ev;
    try {
      ev = op.evaluate(y);
    } catch (const DegenerateIteration& e) {
      throw DegenerateIteration(e.what(), out.trace);
    }
    if (cache.size() == 2) cache.erase(cache.begin());
    cache.push_back({y, std::move(ev)});
    return cache.back().ev;
  };
  auto record = [&](const std::vector<double>& y, IterateKind kind) {
    const auto& ev = eval(y);
    const double res = cfg.stop_mode == StopMode::sfe ? ev.res_euclid : ev.metric(cfg.stop_mode);
    out.trace.push_back({steps, kind, ev.sfe, res});
    return ev.metric(cfg.stop_mode);
  };
  auto step = [&](const std::vector<double>& y) {
    const auto& ev = eval(y);
    std::vector<double> next;
    try {
      next = op.step(ev, epsilon);
    } catch (const DegenerateIteration& e) {
      throw DegenerateIteration(e.what(), out.trace);
    }
    ++steps;
    return next;
  };

  std::vector<double> last;
  if (cfg.accel) {
    auto stop = [&](const std::vector<double>& y, accel::Origin origin) {
      const auto kind = origin == accel::Origin::initial  ? IterateKind::seed
                        : origin == accel::Origin::base ? IterateKind::base
                                                        : IterateKind::extrapolant;
      return record(y, kind) <= cfg.tol || steps >= cfg.max_iters;
    };
    auto merit = [&](const std::vector<double>& y) { return eval(y).metric(cfg.stop_mode); };
    auto result = accel::cycle(step, op.pack(seed.coefficients()), *cfg.accel, accel::StopFn(stop), merit);
    last = result.last();
    out.accel_stats = result.stats;
  } else {
    std::vector<double> y = op.pack(seed.coefficients());
    double metric = record(y, IterateKind::seed);
    while (!(metric <= cfg.tol) && steps < cfg.max_iters) {
      y = step(y);
      metric = record(y, IterateKind::base);
    }
    last = std::move(y);
  }

  const auto& ev = eval(last);
  out.field = SpectralField::from_coefficients(g, op.unpack(last));
  out.iterations = steps;
  out.residual = ev.metric(cfg.stop_mode);
  out.sfe = ev.sfe;
  out.converged = out.residual <= cfg.tol;
  return out;
}

/// Peak of |phi| at the two boundary nodes relative to its maximum.
inline double boundary_tail_ratio(const SpectralField& phi) {
  const auto& v = phi.values();
  const double peak = phi.max_abs();
  if (peak == 0.0) return 0.0;
  return std::max(std::abs(v.front()), std::abs(v.back())) / peak;
}

struct AutoDomainResult {
  WaveProfile profile;
  int doublings = 0;
  double tail_ratio = 0.0;
};

using SeedFn = std::function<SpectralField(const PeriodicGrid&)>;

/// Solve from seed(g) and double the domain (same spacing) while the
/// boundary tail exceeds tail_tol of the peak, up to max_doublings times.
inline AutoDomainResult solve_profile_auto(const ProfileEquation& eq, PeriodicGrid g, const PetviashviliConfig& cfg,
                                           const SeedFn& seed, int max_doublings = 2, double tail_tol = 1e-8) {
  AutoDomainResult out{solve_profile(seed(g), eq, cfg), 0, 0.0};
  out.tail_ratio = boundary_tail_ratio(out.profile.field);
  while (out.tail_ratio > tail_tol && out.doublings < max_doublings) {
    g = PeriodicGrid(2.0 * g.half_length(), 2 * g.size());
    out.profile = solve_profile(seed(g), eq, cfg);
    out.tail_ratio = boundary_tail_ratio(out.profile.field);
    ++out.doublings;
  }
  return out;
}

inline AutoDomainResult solve_profile_auto(const ProfileEquation& eq, PeriodicGrid g,
                                           const PetviashviliConfig& cfg, int max_doublings = 2,
                                           double tail_tol = 1e-8) {
  return solve_profile_auto(
      eq, g, cfg, [&](const PeriodicGrid& gg) { return gkdv_seed(eq, gg); }, max_doublings, tail_tol);
}

}  // namespace benjamin
