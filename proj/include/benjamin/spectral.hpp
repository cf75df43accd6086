#pragma once

// Periodic grids, the discrete Fourier pair and the Fourier-multiplier
// operators of the Benjamin-type family
//
//   u_t - L u_x + (u^{q+1}/(q+1))_x = 0,   L^(xi) = delta |xi|^{2m} - gamma |xi|^{2r}.
//
// Transform normalization: the forward transform carries 1/N, so that
// coefficient k = 0 is the mean value of the field. Real fields are stored
// as the half spectrum k = 0..N/2 (conjugate symmetry is implicit).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "benjamin/error.hpp"

namespace benjamin {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

struct EquationParams {
  double r = 0.5;
  int m = 1;
  int q = 2;
  double gamma = 0.0;
  double delta = 1.0;
  double c_s = 0.0;  // 0 when only the evolution is of interest

  void validate() const {
    if (m < 1) throw InvalidArgument("m must be a positive integer");
    if (!(r >= 0.0) || !(r < m)) throw InvalidArgument("r must satisfy 0 <= r < m");
    if (q < 1) throw InvalidArgument("q must be >= 1");
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
    if (c_s < 0.0) throw InvalidArgument("c_s must be non-negative");
  }
};

/// |kappa|^p with 0^p = 0 (also for p = 0, where the symbol term vanishes at the mean mode).
inline double abs_power(double kappa, double p) {
  const double a = std::abs(kappa);
  if (a == 0.0) return 0.0;
  return std::exp(p * std::log(a));
}

class PeriodicGrid {
 public:
  PeriodicGrid(double half_length, int n) : l_(half_length), n_(n) {
    if (!(half_length > 0.0) || !std::isfinite(half_length))
      throw InvalidArgument("grid half-length must be positive");
    if (n < 8 || n % 2 != 0) throw InvalidArgument("grid size must be even and >= 8");
    h_ = 2.0 * l_ / n_;
  }

  double half_length() const noexcept { return l_; }
  double length() const noexcept { return 2.0 * l_; }
  int size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  /// Number of stored (non-negative) modes, N/2 + 1.
  int modes() const noexcept { return n_ / 2 + 1; }
  int nyquist() const noexcept { return n_ / 2; }

  double node(int j) const noexcept { return -l_ + j * h_; }
  std::vector<double> nodes() const {
    std::vector<double> x(n_);
    for (int j = 0; j < n_; ++j) x[j] = node(j);
    return x;
  }

  /// Physical wavenumber pi k / l for a signed mode index k.
  double wavenumber(int k) const noexcept { return std::numbers::pi * k / l_; }
  /// Signed mode index of FFT slot j in [0, N).
  int mode_of_slot(int j) const noexcept { return j < n_ / 2 ? j : j - n_; }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) noexcept {
    return a.n_ == b.n_ && a.l_ == b.l_;
  }

 private:
  double l_;
  int n_;
  double h_;
};

inline PeriodicGrid make_grid(double l, int n) { return PeriodicGrid(l, n); }

namespace detail {

struct FftPlans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// Plans are created once per size under a lock (the FFTW planner is not
// reentrant); new-array execution on a shared plan is thread-safe.
inline const FftPlans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<Complex> cplx(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
  FftPlans p;
  p.r2c = fftw_plan_dft_r2c_1d(n, real.data(), c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(n, c, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p.r2c || !p.c2r) throw NumericalError("FFTW planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace detail

/// Real-to-half-spectrum transform pair for one grid size. Owns scratch
/// storage, so one instance must not be shared between threads.
class FourierTransform {
 public:
  explicit FourierTransform(int n) : n_(n), plans_(&detail::plans_for(n)), scratch_(n / 2 + 1) {}
  explicit FourierTransform(const PeriodicGrid& g) : FourierTransform(g.size()) {}

  int size() const noexcept { return n_; }

  void forward(std::span<const double> values, std::span<Complex> coeffs) const {
    check(values.size(), coeffs.size());
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(values.data()),
                         reinterpret_cast<fftw_complex*>(coeffs.data()));
    const double inv_n = 1.0 / n_;
    for (auto& c : coeffs) c *= inv_n;
  }

  void inverse(std::span<const Complex> coeffs, std::span<double> values) const {
    check(values.size(), coeffs.size());
    // c2r overwrites its input
    std::copy(coeffs.begin(), coeffs.end(), scratch_.begin());
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch_.data()),
                         values.data());
  }

  Spectrum forward(std::span<const double> values) const {
    Spectrum c(n_ / 2 + 1);
    forward(values, c);
    return c;
  }

  std::vector<double> inverse(std::span<const Complex> coeffs) const {
    std::vector<double> v(n_);
    inverse(coeffs, v);
    return v;
  }

 private:
  void check(std::size_t nv, std::size_t nc) const {
    if (nv != static_cast<std::size_t>(n_) || nc != static_cast<std::size_t>(n_ / 2 + 1))
      throw InvalidArgument("transform length does not match the grid");
  }

  int n_;
  const detail::FftPlans* plans_;
  mutable Spectrum scratch_;
};

/// A real periodic function held as grid values and/or its half spectrum;
/// whichever side is missing is computed on first access.
class SpectralField {
 public:
  explicit SpectralField(const PeriodicGrid& g) : grid_(g), values_(std::vector<double>(g.size(), 0.0)) {}

  static SpectralField from_values(const PeriodicGrid& g, std::vector<double> v) {
    if (v.size() != static_cast<std::size_t>(g.size()))
      throw InvalidArgument("value array length does not match the grid");
    SpectralField f(g, 0);
    f.values_ = std::move(v);
    return f;
  }

  static SpectralField from_coefficients(const PeriodicGrid& g, Spectrum c) {
    if (c.size() != static_cast<std::size_t>(g.modes()))
      throw InvalidArgument("coefficient array length does not match the grid");
    SpectralField f(g, 0);
    f.coeffs_ = std::move(c);
    return f;
  }

  template <class Fn>
  static SpectralField sample(const PeriodicGrid& g, Fn&& fn) {
    std::vector<double> v(g.size());
    for (int j = 0; j < g.size(); ++j) v[j] = fn(g.node(j));
    return from_values(g, std::move(v));
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return grid_.size(); }

  const std::vector<double>& values() const {
    if (!values_) values_ = FourierTransform(grid_).inverse(*coeffs_);
    return *values_;
  }

  /// Half spectrum, k = 0..N/2.
  const Spectrum& coefficients() const {
    if (!coeffs_) coeffs_ = FourierTransform(grid_).forward(*values_);
    return *coeffs_;
  }

  /// All N coefficients in FFT slot order (k = 0..N/2-1, then -N/2..-1).
  Spectrum full_coefficients() const {
    const auto& c = coefficients();
    const int n = grid_.size();
    Spectrum full(n);
    for (int j = 0; j <= n / 2; ++j) full[j] = c[j];
    for (int j = n / 2 + 1; j < n; ++j) full[j] = std::conj(c[n - j]);
    return full;
  }

  double operator[](int j) const { return values()[j]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values()) m = std::max(m, std::abs(v));
    return m;
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_grid(o);
    auto v = values();
    const auto& w = o.values();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += w[j];
    return *this = from_values(grid_, std::move(v));
  }

  SpectralField& operator*=(double s) {
    if (values_) for (double& v : *values_) v *= s;
    if (coeffs_) for (auto& c : *coeffs_) c *= s;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  void require_same_grid(const SpectralField& o) const {
    if (!(grid_ == o.grid_)) throw InvalidArgument("fields live on different grids");
  }

 private:
  SpectralField(const PeriodicGrid& g, int) : grid_(g) {}

  PeriodicGrid grid_;
  mutable std::optional<std::vector<double>> values_;
  mutable std::optional<Spectrum> coeffs_;
};

/// Even Fourier multiplier tabulated on the stored modes k = 0..N/2.
struct MultiplierSymbol {
  PeriodicGrid grid;
  std::vector<double> table;

  double operator[](int k) const { return table[static_cast<std::size_t>(k < 0 ? -k : k)]; }
  double min() const { return *std::min_element(table.begin(), table.end()); }
};

template <class Fn>
MultiplierSymbol tabulate_symbol(const PeriodicGrid& g, Fn&& sigma_of_kappa) {
  MultiplierSymbol s{g, std::vector<double>(g.modes())};
  for (int k = 0; k < g.modes(); ++k) s.table[k] = sigma_of_kappa(std::abs(g.wavenumber(k)));
  return s;
}

/// L^: delta |kappa|^{2m} - gamma |kappa|^{2r}; exactly 0 at kappa = 0.
inline double dispersion_value(const EquationParams& p, double kappa) {
  return p.delta * abs_power(kappa, 2.0 * p.m) - p.gamma * abs_power(kappa, 2.0 * p.r);
}

inline MultiplierSymbol dispersion_symbol(const EquationParams& p, const PeriodicGrid& g) {
  p.validate();
  return tabulate_symbol(g, [&](double kappa) { return dispersion_value(p, kappa); });
}

/// c_s + L^, the symbol inverted by the profile iteration.
inline MultiplierSymbol resolvent_symbol(const EquationParams& p, const PeriodicGrid& g) {
  p.validate();
  return tabulate_symbol(g, [&](double kappa) { return p.c_s + dispersion_value(p, kappa); });
}

inline SpectralField apply_multiplier(const MultiplierSymbol& s, const SpectralField& f) {
  if (!(s.grid == f.grid())) throw InvalidArgument("symbol and field live on different grids");
  Spectrum c = f.coefficients();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= s.table[k];
  return SpectralField::from_coefficients(f.grid(), std::move(c));
}

/// Pseudospectral derivative (i kappa)^order. The unpaired Nyquist mode is
/// zeroed for odd orders.
inline SpectralField derivative(const SpectralField& f, int order = 1) {
  const auto& g = f.grid();
  Spectrum c = f.coefficients();
  for (int k = 0; k < g.modes(); ++k) c[k] *= std::pow(Complex(0.0, g.wavenumber(k)), order);
  if (order % 2 != 0) c[g.nyquist()] = 0.0;
  return SpectralField::from_coefficients(g, std::move(c));
}

/// f(x - shift) evaluated on the trigonometric interpolant. The Nyquist
/// mode is dropped unless the shift is a whole number of grid spacings,
/// where it only changes sign.
inline SpectralField translate(const SpectralField& f, double shift) {
  const auto& g = f.grid();
  Spectrum c = f.coefficients();
  const Complex nyq = c[g.nyquist()];
  for (int k = 1; k < g.modes(); ++k) c[k] *= std::polar(1.0, -g.wavenumber(k) * shift);
  const double cells = shift / g.spacing();
  const double whole = std::round(cells);
  if (std::abs(cells - whole) > 1e-12 * std::max(1.0, std::abs(cells)))
    c[g.nyquist()] = 0.0;
  else
    c[g.nyquist()] = std::fmod(whole, 2.0) == 0.0 ? nyq : -nyq;
  return SpectralField::from_coefficients(g, std::move(c));
}

/// Zero every mode with |k| > N/3.
inline void truncate_two_thirds(Spectrum& c, int n) {
  for (std::size_t k = 0; k < c.size(); ++k)
    if (3 * static_cast<long>(k) > n) c[k] = 0.0;
}

inline double integer_power(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

/// F(f) = f^{q+1}/(q+1), pointwise. With dealias, input and output are
/// both truncated by the 2/3 rule.
inline SpectralField nonlinearity(const SpectralField& f, int q, bool dealias = false) {
  if (q < 1) throw InvalidArgument("q must be >= 1");
  std::optional<SpectralField> truncated;
  if (dealias) {
    Spectrum c = f.coefficients();
    truncate_two_thirds(c, f.size());
    truncated = SpectralField::from_coefficients(f.grid(), std::move(c));
  }
  const auto& v = truncated ? truncated->values() : f.values();
  std::vector<double> out(v.size());
  const double scale = 1.0 / (q + 1);
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = integer_power(v[j], q + 1) * scale;
  auto result = SpectralField::from_values(f.grid(), std::move(out));
  if (!dealias) return result;
  Spectrum c = result.coefficients();
  truncate_two_thirds(c, f.size());
  return SpectralField::from_coefficients(f.grid(), std::move(c));
}

}  // namespace benjamin
