#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "benjamin/study.hpp"

using namespace benjamin;

TEST(Study, StrideRange) {
  const auto v = stride_range(1.1, 10.0, 0.1);
  ASSERT_EQ(v.size(), 90u);
  EXPECT_DOUBLE_EQ(v.front(), 1.1);
  EXPECT_NEAR(v.back(), 10.0, 1e-12);
  EXPECT_EQ(stride_range(1.0, 1.0, 0.5).size(), 1u);
  EXPECT_THROW(stride_range(1.0, 2.0, 0.0), InvalidArgument);
  EXPECT_THROW(stride_range(2.0, 1.0, 0.1), InvalidArgument);
}

TEST(Study, ParallelForVisitsEachIndexOnce) {
  for (int threads : {1, 2, 3, 8}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1) << threads << " threads";
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Study, ParallelForRethrows) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("row 7");
                            }),
               std::runtime_error);
}

TEST(Study, GkdvAmplitudeLaw) {
  EXPECT_NEAR(gkdv_amplitude(1.0, 1), 3.0, 1e-15);
  EXPECT_NEAR(gkdv_amplitude(2.0, 2), std::sqrt(12.0), 1e-14);
  EXPECT_EQ(rational_degree_for(0.5), 2);
  EXPECT_EQ(rational_degree_for(1.5), 4);
  EXPECT_TRUE(integer_order(1.0));
  EXPECT_FALSE(integer_order(1.5));
}

TEST(Study, AmplitudeSpeedGkdvAndThreadIndependence) {
  const EquationParams tmpl{0.5, 1, 2, 0.0, 1.0, 0.0};
  const std::vector<double> speeds{1.0, 1.5, 2.0, 3.0, 4.0};
  PeriodicGrid g(64.0, 1024);
  const auto one = amplitude_speed_study(tmpl, speeds, g, PetviashviliConfig{}, 1);
  const auto three = amplitude_speed_study(tmpl, speeds, g, PetviashviliConfig{}, 3);
  ASSERT_TRUE(one.fit && three.fit);
  EXPECT_NEAR(one.fit->coeffs[1], 0.5, 1e-8);
  EXPECT_NEAR(one.fit->coeffs[0], std::sqrt(6.0), 1e-7);
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    EXPECT_EQ(one.rows[i].amplitude, three.rows[i].amplitude);
    EXPECT_NEAR(one.rows[i].amplitude, gkdv_amplitude(speeds[i], 2), 1e-8);
  }
  EXPECT_TRUE(one.warnings.empty());
}

TEST(Study, InadmissibleRowsAreExcluded) {
  const EquationParams tmpl{0.5, 1, 2, 1.5, 1.0, 0.0};
  PeriodicGrid g(64.0, 1024);
  // gamma_max(c) = 2 sqrt(c): only c = 0.5 is inadmissible
  const auto s = amplitude_speed_study(tmpl, {0.5, 1.0, 1.5, 2.0}, g, PetviashviliConfig{}, 2);
  EXPECT_FALSE(s.rows[0].usable());
  EXPECT_FALSE(s.rows[0].error.empty());
  EXPECT_TRUE(s.rows[1].usable());
  EXPECT_EQ(s.warnings.size(), 1u);
  ASSERT_TRUE(s.fit);
  EXPECT_EQ(s.fit->n_points, 3u);
}

TEST(Study, AmplitudeQNormalized) {
  PeriodicGrid g(64.0, 1024);
  const EquationParams tmpl{0.5, 1, 2, 0.0, 1.0, 1.0};
  const auto s = amplitude_q_study(tmpl, {1, 2, 3}, 0.0, g, PetviashviliConfig{}, 2);
  // gamma~ = 0 and a = 1: psi = ((q+2)/2)^{1/q} sech^{2/q}
  for (const auto& r : s.rows) {
    ASSERT_TRUE(r.usable());
    const int q = static_cast<int>(r.parameter);
    EXPECT_NEAR(r.amplitude, std::pow((q + 2) / 2.0, 1.0 / q), 1e-8);
  }
}

TEST(Study, DecayModels) {
  PeriodicGrid g(60.0, 2048);
  const auto f = SpectralField::sample(g, [](double x) { return std::exp(-0.1 * std::abs(x)) * std::cos(2.0 * x); });
  const auto expo = decay_study(f, 1.0, 5.0);
  ASSERT_EQ(expo.fits.size(), 2u);
  EXPECT_EQ(expo.fits[0].model, FitModel::exp1);
  EXPECT_EQ(expo.fits[1].model, FitModel::exp2);
  EXPECT_NEAR(expo.fits[0].coeffs[1], -0.1, 2e-3);
  const auto rat = decay_study(f, 0.5, 5.0);
  ASSERT_EQ(rat.fits.size(), 1u);
  EXPECT_EQ(rat.fits[0].degree, 2);
  const auto forced = decay_study(f, 0.5, 5.0, 40.0, DecayModel::rational, 3);
  EXPECT_EQ(forced.fits[0].degree, 3);
  for (const auto& e : forced.envelope) EXPECT_LE(e.x, 40.0);
  EXPECT_THROW(decay_study(f, 1.0, 5.0, 6.0), InsufficientEnvelope);
}
