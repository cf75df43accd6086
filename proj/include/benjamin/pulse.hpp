#pragma once

// Pulse tracking: peak location and height of the dominant extremum,
// unwrapped across the periodic boundary, plus windowed speed estimates.

#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <optional>
#include <span>
#include <algorithm>
#include <vector>

#include "benjamin/error.hpp"
#include "benjamin/spectral.hpp"

namespace benjamin {

struct PulseRecord {
  double t = 0.0;
  double amplitude = 0.0;
  double position = 0.0;
  std::optional<double> speed_estimate;
};

class NoPulse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class PeakSign { elevation, depression };
enum class PeakRefinement { quadratic, spectral };

struct TrackOptions {
  PeakSign sign = PeakSign::elevation;
  PeakRefinement refinement = PeakRefinement::quadratic;
};

namespace detail {

// Trigonometric interpolant of a real field and its first two derivatives
// at x. The Nyquist term is taken as the cosine mode.
struct TrigValue {
  double f, df, d2f;
};

inline TrigValue trig_eval(const SpectralField& u, double x) {
  const auto& g = u.grid();
  const auto& c = u.coefficients();
  const double s = x + g.half_length();
  TrigValue out{c[0].real(), 0.0, 0.0};
  const int nyq = g.nyquist();
  for (int k = 1; k < nyq; ++k) {
    const double kap = g.wavenumber(k);
    const Complex e = std::polar(1.0, kap * s);
    const Complex a = 2.0 * c[k] * e;
    out.f += a.real();
    out.df += (Complex(0.0, kap) * a).real();
    out.d2f += -kap * kap * a.real();
  }
  const double kn = g.wavenumber(nyq);
  out.f += c[nyq].real() * std::cos(kn * s);
  out.d2f += -kn * kn * c[nyq].real() * std::cos(kn * s);
  return out;
}

}  // namespace detail

/// Dominant extremum of u (maximum, or minimum in depression mode),
/// refined either by the parabola through the three nearest samples or by
/// Newton iterations on the trigonometric interpolant starting there.
inline PulseRecord track_pulse(const SpectralField& u, const std::optional<PulseRecord>& prev = std::nullopt,
                               const TrackOptions& opt = {}) {
  const auto& g = u.grid();
  const auto& v = u.values();
  const int n = g.size();
  const double sgn = opt.sign == PeakSign::elevation ? 1.0 : -1.0;
  double lo = v[0], hi = v[0];
  int jmax = 0;
  for (int j = 0; j < n; ++j) {
    lo = std::min(lo, v[j]);
    hi = std::max(hi, v[j]);
    if (sgn * v[j] > sgn * v[jmax]) jmax = j;
  }
  if (!(hi - lo >= 1e-14)) throw NoPulse("field is flat; no pulse to track");

  const double fm = v[(jmax - 1 + n) % n], f0 = v[jmax], fp = v[(jmax + 1) % n];
  const double h = g.spacing();
  const double curv = fm - 2.0 * f0 + fp;
  double offset = curv != 0.0 ? 0.5 * (fm - fp) / curv : 0.0;
  offset = std::clamp(offset, -0.5, 0.5);
  double x = g.node(jmax) + offset * h;
  double amp = f0 - 0.25 * (fm - fp) * offset;

  if (opt.refinement == PeakRefinement::spectral) {
    double xs = x;
    bool ok = true;
    for (int it = 0; it < 30; ++it) {
      const auto tv = detail::trig_eval(u, xs);
      if (!(sgn * tv.d2f < 0.0)) {
        ok = false;
        break;
      }
      const double dx = -tv.df / tv.d2f;
      xs += dx;
      if (std::abs(dx) > h) {
        ok = false;
        break;
      }
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(xs))) break;
    }
    if (ok) {
      x = xs;
      amp = detail::trig_eval(u, x).f;
    }
  }

  // periodic image closest to the previous position
  if (prev) x += g.length() * std::round((prev->position - x) / g.length());
  return {0.0, amp, x, std::nullopt};
}

struct Peak {
  double position = 0.0;
  double amplitude = 0.0;
};

/// Local maxima of u taller than min_height, tallest first, keeping only
/// peaks at least min_separation (periodic distance) from every taller
/// one. Positions use the same quadratic refinement as track_pulse.
inline std::vector<Peak> find_peaks(const SpectralField& u, double min_height, double min_separation,
                                    std::size_t max_count = 16) {
  const auto& g = u.grid();
  const auto& v = u.values();
  const int n = g.size();
  std::vector<Peak> cand;
  for (int j = 0; j < n; ++j) {
    const double fm = v[(j - 1 + n) % n], f0 = v[j], fp = v[(j + 1) % n];
    if (!(f0 > fm && f0 >= fp && f0 > min_height)) continue;
    const double curv = fm - 2.0 * f0 + fp;
    const double off = curv != 0.0 ? std::clamp(0.5 * (fm - fp) / curv, -0.5, 0.5) : 0.0;
    cand.push_back({g.node(j) + off * g.spacing(), f0 - 0.25 * (fm - fp) * off});
  }
  std::sort(cand.begin(), cand.end(), [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
  std::vector<Peak> out;
  for (const auto& c : cand) {
    if (out.size() >= max_count) break;
    bool apart = true;
    for (const auto& o : out) {
      double d = std::abs(c.position - o.position);
      d = std::min(d, g.length() - d);
      if (d < min_separation) apart = false;
    }
    if (apart) out.push_back(c);
  }
  return out;
}

/// Least-squares slope of y against t.
inline double ls_slope(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sty += (t[i] - mt) * (y[i] - my);
    stt += (t[i] - mt) * (t[i] - mt);
  }
  return stt > 0.0 ? sty / stt : 0.0;
}

/// Follows one pulse through a run, attaching a sliding-window speed.
class PulseTracker {
 public:
  explicit PulseTracker(TrackOptions opt = {}, std::size_t window = 16) : opt_(opt), window_(window) {
    if (window < 2) throw InvalidArgument("speed window must hold at least 2 samples");
  }

  const PulseRecord& observe(double t, const SpectralField& u) {
    const std::optional<PulseRecord> prev =
        records_.empty() ? std::nullopt : std::optional<PulseRecord>(records_.back());
    PulseRecord rec = track_pulse(u, prev, opt_);
    rec.t = t;
    ts_.push_back(t);
    xs_.push_back(rec.position);
    if (ts_.size() > window_) {
      ts_.pop_front();
      xs_.pop_front();
    }
    if (ts_.size() == window_) {
      std::vector<double> tv(ts_.begin(), ts_.end()), xv(xs_.begin(), xs_.end());
      rec.speed_estimate = ls_slope(tv, xv);
    }
    records_.push_back(rec);
    return records_.back();
  }

  const std::vector<PulseRecord>& records() const noexcept { return records_; }

 private:
  TrackOptions opt_;
  std::size_t window_;
  std::deque<double> ts_, xs_;
  std::vector<PulseRecord> records_;
};

struct SpeedPhase {
  std::vector<double> speed_t;      // end of each window
  std::vector<double> speed;        // least-squares slope over the window
  std::vector<double> t;
  std::vector<double> phase_error;  // x(t) - (x(0) + c_s t)
};

/// Speed and phase-error series from a pulse track. Fewer records than the
/// window give empty series.
inline SpeedPhase speed_and_phase(const std::vector<PulseRecord>& recs, double c_s, std::size_t window = 16) {
  SpeedPhase out;
  if (window < 2 || recs.size() < window) return out;
  const double x0 = recs.front().position, t0 = recs.front().t;
  std::vector<double> t(recs.size()), x(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    t[i] = recs[i].t;
    x[i] = recs[i].position;
    out.t.push_back(t[i]);
    out.phase_error.push_back(x[i] - (x0 + c_s * (t[i] - t0)));
  }
  for (std::size_t i = window - 1; i < recs.size(); ++i) {
    const std::span<const double> tw(t.data() + i + 1 - window, window), xw(x.data() + i + 1 - window, window);
    out.speed_t.push_back(t[i]);
    out.speed.push_back(ls_slope(tw, xw));
  }
  return out;
}

}  // namespace benjamin
