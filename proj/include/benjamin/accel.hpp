#pragma once

// Minimal polynomial extrapolation (MPE) for vector fixed-point sequences,
// and the restarted cycle that wraps a base iteration with it.
//
// Given iterates y_0..y_{k+1} with differences u_j = y_{j+1} - y_j, MPE
// solves min || U c + u_k ||, U = [u_0 .. u_{k-1}], sets c_k = 1 and returns
// s = sum_j (c_j / sum_i c_i) y_j. For an affine iteration whose error has
// a minimal polynomial of degree <= k, s is the exact fixed point.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "benjamin/error.hpp"

namespace benjamin::accel {

using Vector = std::vector<double>;

struct MpeConfig {
  int width = 6;
  int max_cycles = 100000;
  double degeneracy_floor = 1e-13;
  // columns of U whose Gram-Schmidt remainder falls below this fraction of
  // their norm end the window (the minimal polynomial has lower degree)
  double rank_tolerance = 1e-12;
  // an extrapolant is kept only if merit(s) <= guard_factor * merit(last base iterate)
  double guard_factor = 10.0;

  void validate() const {
    if (width < 1) throw InvalidArgument("MPE width must be >= 1");
    if (max_cycles < 1) throw InvalidArgument("max_cycles must be >= 1");
    if (!(degeneracy_floor > 0.0)) throw InvalidArgument("degeneracy floor must be positive");
  }
};

/// Raised when the coefficient sum vanishes or the difference matrix is
/// empty; callers fall back to the last base iterate.
class DegenerateExtrapolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ExtrapolationWindow {
 public:
  explicit ExtrapolationWindow(int width) : width_(width) {
    if (width < 1) throw InvalidArgument("MPE width must be >= 1");
    iterates_.reserve(width + 2);
  }

  int width() const noexcept { return width_; }
  /// width + 2 iterates make a full window
  bool full() const noexcept { return static_cast<int>(iterates_.size()) == width_ + 2; }
  std::size_t size() const noexcept { return iterates_.size(); }
  const std::vector<Vector>& iterates() const noexcept { return iterates_; }
  const Vector& back() const { return iterates_.back(); }

  void push(Vector y) {
    if (full()) throw InvalidArgument("extrapolation window is already full");
    if (!iterates_.empty() && y.size() != iterates_.front().size())
      throw InvalidArgument("iterates in a window must have equal length");
    iterates_.push_back(std::move(y));
  }

  void clear() { iterates_.clear(); }

  Vector difference(std::size_t j) const {
    const auto& a = iterates_[j];
    const auto& b = iterates_[j + 1];
    Vector u(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) u[i] = b[i] - a[i];
    return u;
  }

 private:
  int width_;
  std::vector<Vector> iterates_;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Extrapolated limit of a full window (or of its leading part when the
/// differences become linearly dependent earlier).
inline Vector mpe_extrapolate(const ExtrapolationWindow& w, double degeneracy_floor = 1e-13,
                              double rank_tolerance = 1e-12) {
  if (!w.full()) throw InvalidArgument("extrapolation window is not full");
  const int k_max = w.width();
  const std::size_t n = w.iterates().front().size();

  // Modified Gram-Schmidt on u_0, u_1, ... until a column is (numerically)
  // dependent on its predecessors or all k_max + 1 columns are consumed.
  std::vector<Vector> q;
  std::vector<std::vector<double>> r;  // r[j] = column j of R (length j + 1)
  int k = k_max;
  std::vector<double> last_coeffs;
  for (int j = 0; j <= k_max; ++j) {
    Vector v = w.difference(j);
    const double norm0 = std::sqrt(detail::dot(v, v));
    std::vector<double> col(j + 1, 0.0);
    for (int i = 0; i < j; ++i) {
      col[i] = detail::dot(q[i], v);
      for (std::size_t t = 0; t < n; ++t) v[t] -= col[i] * q[i][t];
    }
    const double rem = std::sqrt(detail::dot(v, v));
    if (j == k_max || rem <= rank_tolerance * norm0 || norm0 == 0.0) {
      k = j;
      last_coeffs.assign(col.begin(), col.begin() + j);
      break;
    }
    col[j] = rem;
    for (double& t : v) t /= rem;
    q.push_back(std::move(v));
    r.push_back(std::move(col));
  }

  if (k == 0) return w.iterates().front();  // u_0 = 0: y_0 is already fixed

  // R c = -Q^T u_k, with Q^T u_k = last_coeffs
  std::vector<double> c(k + 1, 0.0);
  c[k] = 1.0;
  for (int i = k - 1; i >= 0; --i) {
    double s = -last_coeffs[i];
    for (int j = i + 1; j < k; ++j) s -= r[j][i] * c[j];
    c[i] = s / r[i][i];
  }
  double sum = 0.0;
  for (double ci : c) sum += ci;
  if (!std::isfinite(sum) || std::abs(sum) < degeneracy_floor)
    throw DegenerateExtrapolation("MPE coefficient sum below the degeneracy floor");

  Vector s(n, 0.0);
  for (int j = 0; j <= k; ++j) {
    const double weight = c[j] / sum;
    const auto& y = w.iterates()[j];
    for (std::size_t t = 0; t < n; ++t) s[t] += weight * y[t];
  }
  return s;
}

inline Vector mpe_extrapolate(const ExtrapolationWindow& w, const MpeConfig& cfg) {
  return mpe_extrapolate(w, cfg.degeneracy_floor, cfg.rank_tolerance);
}

struct CycleStats {
  int steps = 0;
  int cycles = 0;
  int accepted = 0;    // extrapolants kept
  int rejected = 0;    // extrapolants discarded by the merit guard
  int degenerate = 0;  // windows that could not be extrapolated
};

struct CycleResult {
  std::vector<Vector> iterates;  // every accepted iterate, y0 first
  CycleStats stats;
  bool stopped = false;  // stop fired (as opposed to running out of cycles)

  const Vector& last() const { return iterates.back(); }
};

/// Where an iterate handed to the stop predicate came from.
enum class Origin { initial, base, extrapolant };

using StepFn = std::function<Vector(const Vector&)>;
using StopFn = std::function<bool(const Vector&, Origin)>;
using MeritFn = std::function<double(const Vector&)>;

/// Restarted MPE: repeatedly take width + 1 base steps (width + 2 iterates),
/// extrapolate, and restart from the extrapolant. `stop` sees every base
/// iterate and every accepted extrapolant. With a merit function,
/// extrapolants that raise it by more than guard_factor are discarded.
inline CycleResult cycle(const StepFn& step, Vector y0, const MpeConfig& cfg, const StopFn& stop,
                         const MeritFn& merit = {}) {
  cfg.validate();
  CycleResult out;
  out.iterates.push_back(std::move(y0));
  if (stop(out.iterates.back(), Origin::initial)) {
    out.stopped = true;
    return out;
  }
  ExtrapolationWindow w(cfg.width);
  for (int c = 0; c < cfg.max_cycles; ++c) {
    ++out.stats.cycles;
    w.clear();
    w.push(out.iterates.back());
    while (!w.full()) {
      Vector y = step(w.back());
      ++out.stats.steps;
      out.iterates.push_back(y);
      if (stop(y, Origin::base)) {
        out.stopped = true;
        return out;
      }
      w.push(std::move(y));
    }
    Vector s;
    try {
      s = mpe_extrapolate(w, cfg);
    } catch (const DegenerateExtrapolation&) {
      ++out.stats.degenerate;
      continue;  // restart from the last base iterate
    }
    if (merit) {
      const double ms = merit(s);
      const double mb = merit(w.back());
      if (!std::isfinite(ms) || ms > cfg.guard_factor * mb) {
        ++out.stats.rejected;
        continue;
      }
    }
    ++out.stats.accepted;
    out.iterates.push_back(s);
    if (stop(out.iterates.back(), Origin::extrapolant)) {
      out.stopped = true;
      return out;
    }
  }
  return out;
}

inline CycleResult cycle(const StepFn& step, Vector y0, const MpeConfig& cfg,
                         const std::function<bool(const Vector&)>& stop, const MeritFn& merit = {}) {
  return cycle(step, std::move(y0), cfg, StopFn([&](const Vector& y, Origin) { return stop(y); }), merit);
}

}  // namespace benjamin::accel
