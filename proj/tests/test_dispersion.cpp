#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "benjamin/decay.hpp"
#include "benjamin/dispersion.hpp"

using namespace benjamin;

namespace {

EquationParams gben(double gamma) { return {0.5, 1, 2, gamma, 1.0, 0.75}; }

}  // namespace

TEST(Dispersion, GammaStarClosedForm) {
  // r = 1/2, m = 1: gamma* = sqrt(3 delta c_s)
  EXPECT_NEAR(gamma_star(gben(1.0)), 1.5, 1e-12);
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> uc(0.1, 5.0), ud(0.2, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    EquationParams p{0.5, 1, 2, 0.0, ud(rng), uc(rng)};
    EXPECT_NEAR(gamma_star(p), std::sqrt(3.0 * p.delta * p.c_s), 1e-12 * std::sqrt(3.0 * p.delta * p.c_s));
  }
}

TEST(Dispersion, GammaStarIsTangency) {
  // at gamma*, max over x of psi(x) equals c_s
  std::mt19937 rng(72);
  std::uniform_real_distribution<double> ur(0.1, 0.95), uc(0.2, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 3);
    EquationParams p{ur(rng) * m, m, 2, 0.0, 1.0, uc(rng)};
    p.gamma = gamma_star(p);
    const double xs = std::pow(p.r * (2 * p.r + 1) * p.gamma / (m * (2.0 * m + 1) * p.delta), 1.0 / (m - p.r));
    EXPECT_NEAR(radiation_function(xs, p), 0.0, 1e-10 * p.c_s);
    EXPECT_LT(gamma_star(p), gamma_max(p));
  }
}

TEST(Dispersion, RegimesAndRoots) {
  EXPECT_EQ(classify_dispersion(gben(1.2)).regime, DispersionRegime::no_forward_radiation);
  for (double g : {1.6, 1.7}) {
    const auto rep = classify_dispersion(gben(g));
    EXPECT_EQ(rep.regime, DispersionRegime::two_roots);
    ASSERT_TRUE(rep.x_minus && rep.x_plus);
    EXPECT_LT(*rep.x_minus, *rep.x_plus);
    EXPECT_NEAR(radiation_function(*rep.x_minus, gben(g)), 0.0, 1e-10);
    EXPECT_NEAR(radiation_function(*rep.x_plus, gben(g)), 0.0, 1e-10);
    EXPECT_NEAR(group_velocity(std::sqrt(*rep.x_plus), gben(g)), 0.0, 1e-10);
    EXPECT_NEAR(rep.x_c, 4.0 * g * g / 9.0, 1e-12);
    EXPECT_NEAR(rep.x_p, g * g / 4.0, 1e-12);
    EXPECT_TRUE(rep.closed_form);
    EXPECT_NEAR(rep.discriminant, g * g - 2.25, 1e-14);
  }
}

TEST(Dispersion, GeneralCaseBisection) {
  EquationParams p{2.3, 3, 2, 0.0, 1.0, 2.0};
  const double gmax = gamma_max(p);
  p.gamma = gmax - 1e-4;
  const auto rep = classify_dispersion(p);
  EXPECT_EQ(rep.regime, DispersionRegime::two_roots);
  EXPECT_FALSE(rep.closed_form);
  EXPECT_NEAR(radiation_function(*rep.x_minus, p), 0.0, 1e-10);
  EXPECT_NEAR(radiation_function(*rep.x_plus, p), 0.0, 1e-10);
  // phase speed equals group velocity at x_p
  EXPECT_NEAR(phase_speed(std::sqrt(rep.x_p), p), group_velocity(std::sqrt(rep.x_p), p), 1e-10);
  p.gamma = gmax - 0.1;
  const auto low = classify_dispersion(p);
  EXPECT_EQ(low.regime, p.gamma > gamma_star(p) ? DispersionRegime::two_roots : DispersionRegime::no_forward_radiation);
}

TEST(Dispersion, RandomGammaRegimeConsistent) {
  std::mt19937 rng(73);
  std::uniform_real_distribution<double> uf(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    EquationParams p{0.25 + 0.5 * uf(rng), 1 + static_cast<int>(rng() % 2), 2, 0.0, 1.0, 0.5 + uf(rng)};
    p.gamma = uf(rng) * gamma_max(p) * 0.999;
    const auto rep = classify_dispersion(p);
    if (rep.regime == DispersionRegime::two_roots) {
      EXPECT_NEAR(radiation_function(*rep.x_minus, p), 0.0, 1e-9);
      EXPECT_NEAR(radiation_function(*rep.x_plus, p), 0.0, 1e-9);
      // positive group velocity strictly between the roots
      const double mid = 0.5 * (*rep.x_minus + *rep.x_plus);
      EXPECT_GT(radiation_function(mid, p), 0.0);
    } else {
      EXPECT_FALSE(rep.x_minus.has_value());
      EXPECT_LE(radiation_function(rep.x_psi_max, p), 1e-12);
    }
  }
}

TEST(Dispersion, Errors) {
  EXPECT_THROW(classify_dispersion(gben(1.8)), Inadmissible);
  EXPECT_THROW(classify_dispersion({0.0, 1, 2, 0.5, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(gamma_star({0.5, 1, 2, 1.0, 1.0, 0.0}), InvalidArgument);
  EXPECT_STREQ(to_string(DispersionRegime::two_roots), "two-roots");
}

TEST(Decay, EnvelopeOfDampedCosine) {
  PeriodicGrid g(60.0, 2048);
  const auto f = SpectralField::sample(g, [](double x) { return std::exp(-0.1 * std::abs(x)) * std::cos(2.0 * x); });
  const auto env = envelope_extract(f, 5.0);
  ASSERT_GT(env.size(), 10u);
  for (const auto& e : env) {
    EXPECT_GE(e.x, 5.0);
    EXPECT_NEAR(e.value, std::exp(-0.1 * e.x), 2e-2 * std::exp(-0.1 * e.x));
  }
  EXPECT_THROW(envelope_extract(f, 59.0), InsufficientEnvelope);
}

TEST(Decay, PhasePlotOfSine) {
  PeriodicGrid g(4.0, 64);
  const double kap = g.wavenumber(2);
  const auto f = SpectralField::sample(g, [&](double x) { return std::sin(kap * x); });
  const auto pts = phase_plot_data(f);
  ASSERT_EQ(pts.size(), 64u);
  for (int j = 0; j < 64; ++j) {
    EXPECT_NEAR(pts[j].value, f[j], 1e-15);
    EXPECT_NEAR(pts[j].slope, kap * std::cos(kap * g.node(j)), 1e-12);
  }
}

TEST(Decay, DefaultEnvelopeStart) {
  PeriodicGrid g(40.0, 512);
  const auto f = SpectralField::sample(g, [](double x) { return std::exp(-(x - 2.5) * (x - 2.5)); });
  EquationParams p{0.5, 1, 2, 0.0, 1.0, 1.0};
  EXPECT_NEAR(default_envelope_start(f, p), 2.5 + 3.0, 1e-12);
}
