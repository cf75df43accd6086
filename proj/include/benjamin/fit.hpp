#pragma once

// Least-squares curve fits used by the profile studies:
//
//   power     y = K x^alpha                   (linear in log space)
//   exp1      y = a e^{b x}                   (linear in log space)
//   exp2      y = a e^{b x} + c e^{d x}       (damped Gauss-Newton)
//   rational  y = p1 / (x^n + q1 x^{n-1} + ... + qn)   (Levenberg-Marquardt)
//
// The rational fit starts from the linearized problem
// p1 - sum_i q_i y x^{n-i} = y x^n and from the denominator x^n + 1, and
// minimizes the SSE of the original model from both.
// SSE and R^2 are always measured on the original data.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "benjamin/error.hpp"

namespace benjamin {

enum class FitModel { power, exp1, exp2, rational };

class RankDeficientFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct FitResult {
  FitModel model = FitModel::power;
  int degree = 0;  // rational denominator degree
  // power: K, alpha; exp1: a, b; exp2: a, b, c, d; rational: p1, q1..qn
  std::vector<double> coeffs;
  double sse = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;  // y - f(x)
  std::size_t n_points = 0;
  bool converged = true;  // false only for an exp2 fit that hit the iteration cap
  int iterations = 0;

  std::string tag() const {
    switch (model) {
      case FitModel::power: return "power";
      case FitModel::exp1: return "exp1";
      case FitModel::exp2: return "exp2";
      case FitModel::rational: return "rational(" + std::to_string(degree) + ")";
    }
    return "?";
  }

  double operator()(double x) const {
    switch (model) {
      case FitModel::power: return coeffs[0] * std::pow(x, coeffs[1]);
      case FitModel::exp1: return coeffs[0] * std::exp(coeffs[1] * x);
      case FitModel::exp2: return coeffs[0] * std::exp(coeffs[1] * x) + coeffs[2] * std::exp(coeffs[3] * x);
      case FitModel::rational: {
        double den = 1.0;
        for (int i = 1; i <= degree; ++i) den = den * x + coeffs[i];
        return coeffs[0] / den;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

inline void check_data(std::span<const double> xs, std::span<const double> ys, std::size_t n_params) {
  if (xs.size() != ys.size()) throw InvalidArgument("x and y series differ in length");
  if (xs.size() < n_params + 1)
    throw InvalidArgument("need at least " + std::to_string(n_params + 1) + " points for this fit");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InvalidArgument("fit data must be finite");
}

inline Eigen::VectorXd solve_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-13);
  if (qr.rank() < a.cols()) throw RankDeficientFit("normal system of the fit is rank deficient");
  return qr.solve(b);
}

inline void finish(FitResult& f, std::span<const double> xs, std::span<const double> ys) {
  for (double c : f.coeffs)
    if (!std::isfinite(c)) throw RankDeficientFit("fit produced non-finite coefficients");
  f.n_points = xs.size();
  f.residuals.resize(xs.size());
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= ys.size();
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    f.residuals[i] = ys[i] - f(xs[i]);
    sse += f.residuals[i] * f.residuals[i];
    sst += (ys[i] - mean) * (ys[i] - mean);
  }
  f.sse = sse;
  f.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
}

// log y = c0 + c1 * t(x)
template <class T>
std::pair<double, double> log_linear(std::span<const double> xs, std::span<const double> ys, T&& transform) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(ys[i] > 0.0)) throw InvalidArgument("log-space fits need positive y values");
    a(i, 0) = 1.0;
    a(i, 1) = transform(xs[i]);
    b(i) = std::log(ys[i]);
  }
  const Eigen::VectorXd c = solve_ls(a, b);
  return {c(0), c(1)};
}

}  // namespace detail

inline FitResult fit_power(std::span<const double> xs, std::span<const double> ys) {
  detail::check_data(xs, ys, 2);
  for (double x : xs)
    if (!(x > 0.0)) throw InvalidArgument("power fits need positive x values");
  const auto [logk, alpha] = detail::log_linear(xs, ys, [](double x) { return std::log(x); });
  FitResult f;
  f.model = FitModel::power;
  f.coeffs = {std::exp(logk), alpha};
  detail::finish(f, xs, ys);
  return f;
}

inline FitResult fit_exp1(std::span<const double> xs, std::span<const double> ys) {
  detail::check_data(xs, ys, 2);
  const auto [loga, b] = detail::log_linear(xs, ys, [](double x) { return x; });
  FitResult f;
  f.model = FitModel::exp1;
  f.coeffs = {std::exp(loga), b};
  detail::finish(f, xs, ys);
  return f;
}

struct GaussNewtonOptions {
  int max_iters = 200;
  double rel_tol = 1e-12;  // relative SSE decrease that counts as converged
};

namespace detail {

inline double sse_of(const FitResult& f, std::span<const double> xs, std::span<const double> ys) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - f(xs[i]);
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

// Damped Gauss-Newton on a e^{bx} + c e^{dx}: full step, halved until
// the SSE does not increase.
inline FitResult gauss_newton_exp2(std::span<const double> xs, std::span<const double> ys, std::vector<double> p0,
                                   const GaussNewtonOptions& opt) {
  FitResult f;
  f.model = FitModel::exp2;
  f.coeffs = std::move(p0);
  f.converged = false;
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  double sse = sse_of(f, xs, ys);
  for (int it = 1; it <= opt.max_iters; ++it) {
    f.iterations = it;
    Eigen::MatrixXd j(n, 4);
    Eigen::VectorXd r(n);
    const auto& c = f.coeffs;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = xs[i];
      const double e1 = std::exp(c[1] * x), e2 = std::exp(c[3] * x);
      j(i, 0) = e1;
      j(i, 1) = c[0] * x * e1;
      j(i, 2) = e2;
      j(i, 3) = c[2] * x * e2;
      r(i) = ys[i] - (c[0] * e1 + c[2] * e2);
    }
    // column scaling keeps the QR threshold meaningful
    Eigen::VectorXd scale = j.colwise().norm();
    for (Eigen::Index k = 0; k < 4; ++k)
      if (scale(k) == 0.0) scale(k) = 1.0;
    Eigen::MatrixXd js = j * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(js);
    qr.setThreshold(1e-14);
    const Eigen::VectorXd step = scale.cwiseInverse().asDiagonal() * qr.solve(r);
    double lambda = 1.0;
    bool improved = false;
    FitResult trial = f;
    for (int h = 0; h < 40; ++h) {
      for (int k = 0; k < 4; ++k) trial.coeffs[k] = f.coeffs[k] + lambda * step(k);
      const double s = sse_of(trial, xs, ys);
      if (s <= sse) {
        improved = true;
        const double decrease = sse - s;
        f.coeffs = trial.coeffs;
        const double prev = sse;
        sse = s;
        if (decrease <= opt.rel_tol * prev || s == 0.0) f.converged = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) f.converged = true;  // no descent direction left
    if (f.converged) break;
  }
  return f;
}

}  // namespace detail

/// exp2 is started from the exp1 fit and from exp1 fits of the two halves
/// of the data; the start with the lowest final SSE wins.
inline FitResult fit_exp(std::span<const double> xs, std::span<const double> ys, int terms = 1,
                         const GaussNewtonOptions& opt = {}) {
  if (terms == 1) return fit_exp1(xs, ys);
  if (terms != 2) throw InvalidArgument("exponential fits take 1 or 2 terms");
  detail::check_data(xs, ys, 4);

  std::vector<std::vector<double>> starts;
  bool positive = std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; });
  if (positive) {
    const auto one = fit_exp1(xs, ys);
    const double a = one.coeffs[0], b = one.coeffs[1];
    starts.push_back({a, b, 0.1 * a, 0.5 * b});
    starts.push_back({a, b, 0.1 * a, 2.0 * b});
    const std::size_t half = xs.size() / 2;
    if (half >= 3 && xs.size() - half >= 3) {
      try {
        const auto lo = fit_exp1(xs.subspan(0, half), ys.subspan(0, half));
        const auto hi = fit_exp1(xs.subspan(half), ys.subspan(half));
        starts.push_back({lo.coeffs[0], lo.coeffs[1], hi.coeffs[0], hi.coeffs[1]});
      } catch (const RankDeficientFit&) {
      }
    }
  } else {
    // no log-space warm start; small symmetric guess
    double ymax = 0.0;
    for (double y : ys) ymax = std::max(ymax, std::abs(y));
    const double span = std::max(xs.back() - xs.front(), 1e-300);
    starts.push_back({ymax, -1.0 / span, 0.1 * ymax, -2.0 / span});
  }

  FitResult best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    auto f = detail::gauss_newton_exp2(xs, ys, s, opt);
    const double e = detail::sse_of(f, xs, ys);
    if (e < best_sse) {
      best_sse = e;
      best = std::move(f);
    }
  }
  if (!std::isfinite(best_sse)) throw RankDeficientFit("exp2 fit failed from every start");
  detail::finish(best, xs, ys);
  return best;
}

namespace detail {

// Levenberg-Marquardt on the residual y - f(x; p). jac(p, r, j) fills the
// residual and the Jacobian of f; it returns false when f is not finite.
template <class Jac>
FitResult levenberg_marquardt(FitResult f, std::size_t n, Jac&& jac, const GaussNewtonOptions& opt) {
  const Eigen::Index np = static_cast<Eigen::Index>(f.coeffs.size());
  Eigen::VectorXd r(static_cast<Eigen::Index>(n)), rt(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd j(static_cast<Eigen::Index>(n), np), jt(static_cast<Eigen::Index>(n), np);
  f.converged = false;
  f.iterations = 0;
  if (!jac(f.coeffs, r, j)) {
    f.coeffs.assign(f.coeffs.size(), std::numeric_limits<double>::quiet_NaN());
    return f;
  }
  double sse = r.squaredNorm();
  double mu = 1e-3;
  std::vector<double> trial(f.coeffs.size());
  for (int it = 1; it <= opt.max_iters; ++it) {
    f.iterations = it;
    // scaled normal equations (J^T J + mu diag(J^T J)) s = J^T r
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd d = jtj.diagonal().cwiseSqrt();
    for (Eigen::Index k = 0; k < np; ++k)
      if (!(d(k) > 0.0)) d(k) = 1.0;
    const Eigen::MatrixXd a = d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
    const Eigen::VectorXd b = d.cwiseInverse().asDiagonal() * g;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      Eigen::MatrixXd damped = a;
      damped.diagonal().array() += mu;
      const Eigen::VectorXd step = d.cwiseInverse().asDiagonal() * damped.ldlt().solve(b);
      for (Eigen::Index k = 0; k < np; ++k) trial[k] = f.coeffs[k] + step(k);
      if (jac(trial, rt, jt)) {
        const double s = rt.squaredNorm();
        if (std::isfinite(s) && s <= sse) {
          const double decrease = sse - s;
          f.coeffs = trial;
          r = rt;
          j = jt;
          const double prev = sse;
          sse = s;
          mu = std::max(mu / 3.0, 1e-15);
          improved = true;
          if (decrease <= opt.rel_tol * prev || s == 0.0) f.converged = true;
          break;
        }
      }
      mu *= 4.0;
    }
    if (!improved) f.converged = true;  // no descent direction left
    if (f.converged) break;
  }
  return f;
}

}  // namespace detail

inline FitResult fit_rational(std::span<const double> xs, std::span<const double> ys, int denom_degree,
                              const GaussNewtonOptions& opt = {}) {
  if (denom_degree < 1) throw InvalidArgument("rational fits need a denominator degree >= 1");
  detail::check_data(xs, ys, denom_degree + 1);
  const int n = denom_degree;
  const Eigen::Index rows = static_cast<Eigen::Index>(xs.size());

  std::vector<std::vector<double>> starts;
  {
    Eigen::MatrixXd a(rows, n + 1);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = xs[i], y = ys[i];
      a(i, 0) = 1.0;
      for (int k = 1; k <= n; ++k) a(i, k) = -y * std::pow(x, n - k);
      b(i) = y * std::pow(x, n);
    }
    // column scaling for the wide dynamic range of x^k
    Eigen::VectorXd scale = a.colwise().norm();
    bool usable = true;
    for (Eigen::Index k = 0; k < scale.size(); ++k)
      if (scale(k) == 0.0) usable = false;
    if (usable) {
      try {
        const Eigen::VectorXd c =
            scale.cwiseInverse().asDiagonal() * detail::solve_ls(a * scale.cwiseInverse().asDiagonal(), b);
        starts.emplace_back(c.data(), c.data() + c.size());
      } catch (const RankDeficientFit&) {
      }
    }
  }
  {
    // f(0) = y at the smallest |x|, denominator x^n + 1
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (std::abs(xs[i]) < std::abs(xs[i0])) i0 = i;
    std::vector<double> c(n + 1, 0.0);
    c[0] = ys[i0] * (std::pow(xs[i0], n) + 1.0);
    c[n] = 1.0;
    starts.push_back(std::move(c));
  }

  auto jac = [&](const std::vector<double>& c, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = xs[i];
      double den = 1.0;
      for (int k = 1; k <= n; ++k) den = den * x + c[k];
      const double f = c[0] / den;
      if (!std::isfinite(f) || den == 0.0) return false;
      r(i) = ys[i] - f;
      j(i, 0) = 1.0 / den;
      const double df = -f / den;
      for (int k = 1; k <= n; ++k) j(i, k) = df * std::pow(x, n - k);
    }
    return true;
  };

  FitResult best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    FitResult f;
    f.model = FitModel::rational;
    f.degree = n;
    f.coeffs = s;
    f = detail::levenberg_marquardt(std::move(f), xs.size(), jac, opt);
    const double e = detail::sse_of(f, xs, ys);
    if (e < best_sse) {
      best_sse = e;
      best = std::move(f);
    }
  }
  if (!std::isfinite(best_sse)) throw RankDeficientFit("rational fit failed from every start");
  detail::finish(best, xs, ys);
  return best;
}

}  // namespace benjamin
