#pragma once

// Time integration of the Fourier-Galerkin system
//
//   d u^_k/dt = i kappa_k L^_k u^_k - i kappa_k F^(u)_k
//
// by the symmetric three-stage composition of implicit midpoint steps
// with weights b1 = 1/(2 - 2^{1/3}), b2 = 1 - 2 b1, b3 = b1 (order 4).
// Each midpoint stage Y = u + tau G((u + Y)/2) is solved by fixed-point
// sweeps in which the diagonal linear part is inverted exactly.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "benjamin/error.hpp"
#include "benjamin/invariants.hpp"
#include "benjamin/pulse.hpp"
#include "benjamin/spectral.hpp"

namespace benjamin {

inline std::array<double, 3> yoshida_coefficients() {
  const double b1 = 1.0 / (2.0 - std::cbrt(2.0));
  return {b1, 1.0 - 2.0 * b1, b1};
}

struct StepperConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double stage_tol = 1e-13;  // relative increment between sweeps
  int stage_max_sweeps = 100;
  bool projection = false;  // rescale to the initial I_h after every step
  int sample_every = 1;
  std::array<double, 3> b = yoshida_coefficients();
  bool dealias = false;

  void validate() const {
    if (!(dt != 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be finite and non-zero");
    if (!std::isfinite(t_end) || t_end * dt < 0.0) throw InvalidArgument("t_end must lie in the direction of dt");
    if (!(stage_tol > 0.0)) throw InvalidArgument("stage tolerance must be positive");
    if (stage_max_sweeps < 1) throw InvalidArgument("stage_max_sweeps must be >= 1");
    if (sample_every < 1) throw InvalidArgument("sample_every must be >= 1");
  }
};

/// A midpoint stage whose sweeps did not reach the tolerance.
class StageDivergence : public NumericalError {
 public:
  StageDivergence(const std::string& what, double tau, std::vector<double> history)
      : NumericalError(what), tau_(tau), history_(std::move(history)) {}
  double tau() const noexcept { return tau_; }
  /// relative increment of every sweep
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  double tau_;
  std::vector<double> history_;
};

/// Linear part Lambda_k = i kappa_k L^_k and nonlinear part
/// N_k = -i kappa_k F^(u)_k on the half spectrum; the Nyquist mode is
/// dropped from both.
class SemidiscreteSystem {
 public:
  SemidiscreteSystem(const EquationParams& p, const PeriodicGrid& g, bool dealias = false)
      : params_(p), grid_(g), fft_(g), dealias_(dealias), lambda_(g.modes()), ikappa_(g.modes()),
        values_(g.size()), work_(g.modes()) {
    p.validate();
    const auto sym = dispersion_symbol(p, g);
    for (int k = 0; k < g.modes(); ++k) {
      ikappa_[k] = Complex(0.0, g.wavenumber(k));
      lambda_[k] = ikappa_[k] * sym.table[k];
    }
    ikappa_[g.nyquist()] = 0.0;
    lambda_[g.nyquist()] = 0.0;
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  const EquationParams& params() const noexcept { return params_; }
  const std::vector<Complex>& linear() const noexcept { return lambda_; }

  void nonlinear(std::span<const Complex> u, std::span<Complex> out) const {
    std::copy(u.begin(), u.end(), work_.begin());
    if (dealias_) truncate_two_thirds(work_, grid_.size());
    fft_.inverse(work_, values_);
    const int e = params_.q + 1;
    const double scale = 1.0 / e;
    for (double& v : values_) v = scale * integer_power(v, e);
    fft_.forward(values_, out);
    if (dealias_) {
      Spectrum tmp(out.begin(), out.end());
      truncate_two_thirds(tmp, grid_.size());
      std::copy(tmp.begin(), tmp.end(), out.begin());
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= -ikappa_[k];
  }

  Spectrum rhs(const Spectrum& u) const {
    Spectrum g(u.size());
    nonlinear(u, g);
    for (std::size_t k = 0; k < u.size(); ++k) g[k] += lambda_[k] * u[k];
    return g;
  }

 private:
  EquationParams params_;
  PeriodicGrid grid_;
  FourierTransform fft_;
  bool dealias_;
  std::vector<Complex> lambda_;
  std::vector<Complex> ikappa_;
  mutable std::vector<double> values_;
  mutable Spectrum work_;
};

/// G(u) of the semidiscrete system.
inline SpectralField rhs(const SpectralField& u, const EquationParams& p) {
  SemidiscreteSystem sys(p, u.grid());
  return SpectralField::from_coefficients(u.grid(), sys.rhs(u.coefficients()));
}

namespace detail {

inline double weighted_norm2(std::span<const Complex> c) {
  double s = 0.0;
  const std::size_t last = c.size() - 1;
  for (std::size_t k = 0; k < c.size(); ++k) s += (k == 0 || k == last ? 1.0 : 2.0) * std::norm(c[k]);
  return s;
}

}  // namespace detail

struct StageStats {
  long substeps = 0;
  long sweeps = 0;
  int max_sweeps = 0;
};

/// Reusable workspace for midpoint stages and composed steps.
class MidpointSolver {
 public:
  MidpointSolver(const SemidiscreteSystem& sys, double stage_tol, int max_sweeps)
      : sys_(sys), tol_(stage_tol), max_sweeps_(max_sweeps), rhs_(sys.grid().modes()),
        mid_(sys.grid().modes()), nl_(sys.grid().modes()), next_(sys.grid().modes()) {}

  /// Y = u + tau G((u + Y)/2); y may alias neither u nor internal storage.
  int solve(std::span<const Complex> u, double tau, Spectrum& y) {
    const auto& lam = sys_.linear();
    const std::size_t nm = u.size();
    // Lambda is imaginary, so the linear propagator (1 + z)/(1 - z),
    // z = i theta, is the rotation by 2 atan(theta); building it as a
    // rotation keeps |factor| = 1 without a per-step rounding bias.
    inv_.resize(nm);
    for (std::size_t k = 0; k < nm; ++k) {
      const double theta = 0.5 * tau * lam[k].imag();
      rhs_[k] = std::polar(1.0, 2.0 * std::atan(theta)) * u[k];
      inv_[k] = 1.0 / Complex(1.0, -theta);
    }
    y.assign(u.begin(), u.end());
    std::vector<double> history;
    for (int sweep = 1; sweep <= max_sweeps_; ++sweep) {
      for (std::size_t k = 0; k < nm; ++k) mid_[k] = 0.5 * (u[k] + y[k]);
      sys_.nonlinear(mid_, nl_);
      double diff = 0.0, size = 0.0;
      const std::size_t last = nm - 1;
      for (std::size_t k = 0; k < nm; ++k) {
        next_[k] = rhs_[k] + inv_[k] * (tau * nl_[k]);
        const double w = (k == 0 || k == last) ? 1.0 : 2.0;
        diff += w * std::norm(next_[k] - y[k]);
        size += w * std::norm(next_[k]);
      }
      std::swap(y, next_);
      const double rel = size > 0.0 ? std::sqrt(diff / size) : std::sqrt(diff);
      history.push_back(rel);
      if (!std::isfinite(rel)) break;
      if (rel <= tol_) {
        ++stats_.substeps;
        stats_.sweeps += sweep;
        stats_.max_sweeps = std::max(stats_.max_sweeps, sweep);
        return sweep;
      }
    }
    const std::string what = "midpoint stage did not converge in " + std::to_string(max_sweeps_) +
                             " sweeps (last relative increment " + std::to_string(history.back()) + ")";
    throw StageDivergence(what, tau, std::move(history));
  }

  /// One composed step of size dt with weights b. On failure u is left
  /// at the start of the step.
  void step(Spectrum& u, double dt, const std::array<double, 3>& b) {
    work_.assign(u.begin(), u.end());
    for (double bi : b) {
      solve(work_, bi * dt, stage_);
      std::swap(work_, stage_);
    }
    std::swap(u, work_);
  }

  const StageStats& stats() const noexcept { return stats_; }

 private:
  const SemidiscreteSystem& sys_;
  double tol_;
  int max_sweeps_;
  StageStats stats_;
  Spectrum rhs_, mid_, nl_, next_, stage_, work_, inv_;
};

/// I_h from coefficients (Parseval with the 1/N forward normalization).
inline double momentum_of(std::span<const Complex> c, const PeriodicGrid& g) {
  return g.length() * detail::weighted_norm2(c);
}

inline void project_momentum(Spectrum& u, const PeriodicGrid& g, double target) {
  const double now = momentum_of(u, g);
  if (now > 0.0) {
    const double s = std::sqrt(target / now);
    for (auto& c : u) c *= s;
  }
}

inline SpectralField midpoint_substep(const SpectralField& u, double tau, const EquationParams& p,
                                      const StepperConfig& cfg = {}) {
  if (tau == 0.0) throw InvalidArgument("midpoint step size must be non-zero");
  SemidiscreteSystem sys(p, u.grid(), cfg.dealias);
  MidpointSolver solver(sys, cfg.stage_tol, cfg.stage_max_sweeps);
  Spectrum y;
  solver.solve(u.coefficients(), tau, y);
  return SpectralField::from_coefficients(u.grid(), std::move(y));
}

inline SpectralField yoshida_step(const SpectralField& u, double dt, const EquationParams& p,
                                  const StepperConfig& cfg = {}) {
  SemidiscreteSystem sys(p, u.grid(), cfg.dealias);
  MidpointSolver solver(sys, cfg.stage_tol, cfg.stage_max_sweeps);
  Spectrum c = u.coefficients();
  const double i0 = momentum_of(c, u.grid());
  solver.step(c, dt, cfg.b);
  if (cfg.projection) project_momentum(c, u.grid(), i0);
  return SpectralField::from_coefficients(u.grid(), std::move(c));
}

struct SimulationRecord {
  PeriodicGrid grid;
  EquationParams params;
  std::vector<double> times;
  std::vector<Invariants> invariants;
  std::vector<PulseRecord> pulses;  // empty unless tracking was requested
  std::vector<SpectralField> snapshots;
  StageStats stage_stats;
  long steps = 0;
  bool final_step_shortened = false;
  double final_dt = 0.0;
};

struct IntegrateOptions {
  bool store_snapshots = false;
  std::optional<TrackOptions> track;  // pulse tracking when set
  std::size_t speed_window = 16;
};

using Observer = std::function<void(double t, const SpectralField& u)>;

struct IntegrationOutcome {
  SimulationRecord record;
  std::optional<StageDivergence> failure;  // set when a stage diverged
  SpectralField final_state;

  bool ok() const noexcept { return !failure.has_value(); }
};

/// Number of whole steps and the length of a trailing shortened step
/// (0 when t_end is a whole multiple of dt up to round-off).
inline std::pair<long, double> step_plan(double t_end, double dt) {
  const double ratio = t_end / dt;
  long n = static_cast<long>(std::floor(ratio + 1e-9));
  const double rest = t_end - n * dt;
  if (std::abs(rest) <= 1e-12 * std::max(1.0, std::abs(t_end))) return {n, 0.0};
  return {n, rest};
}

inline IntegrationOutcome integrate(const SpectralField& u0, const EquationParams& p, const StepperConfig& cfg,
                                    const IntegrateOptions& opt = {}, const std::vector<Observer>& observers = {}) {
  cfg.validate();
  const auto& g = u0.grid();
  SemidiscreteSystem sys(p, g, cfg.dealias);
  MidpointSolver solver(sys, cfg.stage_tol, cfg.stage_max_sweeps);
  std::optional<PulseTracker> tracker;
  if (opt.track) tracker.emplace(*opt.track, opt.speed_window);

  IntegrationOutcome out{SimulationRecord{g, p, {}, {}, {}, {}, {}, 0, false, cfg.dt}, std::nullopt, u0};
  auto& rec = out.record;
  Spectrum c = u0.coefficients();
  const double i0 = momentum_of(c, g);

  auto sample = [&](double t) {
    const auto f = SpectralField::from_coefficients(g, c);
    rec.times.push_back(t);
    rec.invariants.push_back(invariants(f, p));
    if (tracker) {
      try {
        rec.pulses.push_back(tracker->observe(t, f));
      } catch (const NoPulse&) {
        PulseRecord none;
        none.t = t;
        none.amplitude = std::numeric_limits<double>::quiet_NaN();
        none.position = std::numeric_limits<double>::quiet_NaN();
        rec.pulses.push_back(none);
      }
    }
    if (opt.store_snapshots) rec.snapshots.push_back(f);
    for (const auto& obs : observers) obs(t, f);
  };

  const auto [whole, rest] = step_plan(cfg.t_end, cfg.dt);
  rec.final_step_shortened = rest != 0.0;
  if (rec.final_step_shortened) rec.final_dt = rest;
  const long total = whole + (rec.final_step_shortened ? 1 : 0);

  sample(0.0);
  try {
    for (long n = 1; n <= total; ++n) {
      const bool short_step = rec.final_step_shortened && n == total;
      solver.step(c, short_step ? rest : cfg.dt, cfg.b);
      if (cfg.projection) project_momentum(c, g, i0);
      rec.steps = n;
      const double t = short_step ? cfg.t_end : n * cfg.dt;
      if (n % cfg.sample_every == 0 || n == total) sample(t);
    }
  } catch (const StageDivergence& e) {
    out.failure = e;
  }
  rec.stage_stats = solver.stats();
  out.final_state = SpectralField::from_coefficients(g, std::move(c));
  return out;
}

}  // namespace benjamin
