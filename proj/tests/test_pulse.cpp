#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "benjamin/pulse.hpp"

using namespace benjamin;

namespace {

SpectralField bump(const PeriodicGrid& g, double center, double height, double width = 1.0) {
  return SpectralField::sample(g, [&](double x) {
    double d = x - center;
    d -= g.length() * std::round(d / g.length());
    return height * std::exp(-d * d / (width * width));
  });
}

}  // namespace

TEST(Track, QuadraticAndSpectralRandom) {
  std::mt19937 rng(51);
  PeriodicGrid g(20.0, 512);
  std::uniform_real_distribution<double> uc(-15.0, 15.0), uh(0.5, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = uc(rng), h = uh(rng);
    const auto u = bump(g, c, h, 2.0);
    const auto quad = track_pulse(u);
    EXPECT_NEAR(quad.position, c, 0.05 * g.spacing());
    EXPECT_NEAR(quad.amplitude, h, 1e-3 * h);
    const auto spec = track_pulse(u, std::nullopt, {PeakSign::elevation, PeakRefinement::spectral});
    EXPECT_NEAR(spec.position, c, 1e-10);
    EXPECT_NEAR(spec.amplitude, h, 1e-12 * h);
  }
}

TEST(Track, Depression) {
  PeriodicGrid g(20.0, 512);
  const auto u = -1.0 * bump(g, 3.3, 2.0, 2.0);
  const auto r = track_pulse(u, std::nullopt, {PeakSign::depression, PeakRefinement::spectral});
  EXPECT_NEAR(r.position, 3.3, 1e-10);
  EXPECT_NEAR(r.amplitude, -2.0, 1e-12);
}

TEST(Track, UnwrapsAcrossBoundary) {
  PeriodicGrid g(10.0, 256);
  const auto u = bump(g, -9.5, 1.0);
  PulseRecord prev{0.0, 1.0, 9.8, std::nullopt};
  const auto r = track_pulse(u, prev);
  EXPECT_NEAR(r.position, 10.5, 0.05);
}

TEST(Track, FlatFieldThrows) {
  PeriodicGrid g(10.0, 64);
  EXPECT_THROW(track_pulse(SpectralField(g)), NoPulse);
}

TEST(Peaks, TallestFirstWithSeparation) {
  PeriodicGrid g(50.0, 1024);
  const auto u = bump(g, -20.0, 1.0) + bump(g, 10.0, 2.5) + bump(g, 13.0, 0.8) + bump(g, 30.0, 0.01);
  const auto peaks = find_peaks(u, 0.05, 5.0);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0].position, 10.0, 0.05);
  EXPECT_NEAR(peaks[0].amplitude, 2.5, 0.01);
  EXPECT_NEAR(peaks[1].position, -20.0, 0.05);
  const auto close = find_peaks(u, 0.05, 0.5);
  EXPECT_EQ(close.size(), 3u);
  EXPECT_EQ(find_peaks(u, 0.05, 0.5, 1).size(), 1u);
  // periodic distance: -49 and 49 are 2 apart
  const auto wrap = find_peaks(bump(g, -49.0, 1.0, 0.3) + bump(g, 49.0, 0.9, 0.3), 0.1, 5.0);
  EXPECT_EQ(wrap.size(), 1u);
}

TEST(Slope, ExactOnLinearDataRandom) {
  std::mt19937 rng(52);
  std::uniform_real_distribution<double> ud(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = ud(rng), b = ud(rng);
    std::vector<double> t(10), y(10);
    for (int i = 0; i < 10; ++i) {
      t[i] = 0.3 * i + ud(rng) * 0.01;
      y[i] = a + b * t[i];
    }
    EXPECT_NEAR(ls_slope(t, y), b, 1e-12);
  }
  std::vector<double> same(3, 1.0);
  EXPECT_EQ(ls_slope(same, same), 0.0);
}

TEST(Tracker, SpeedOfTranslatedBump) {
  PeriodicGrid g(30.0, 512);
  PulseTracker tr({PeakSign::elevation, PeakRefinement::spectral}, 4);
  for (int i = 0; i < 6; ++i) {
    const double t = 0.5 * i;
    const auto& rec = tr.observe(t, bump(g, -5.0 + 1.7 * t, 1.0, 2.0));
    if (i < 3) {
      EXPECT_FALSE(rec.speed_estimate.has_value());
    } else {
      EXPECT_NEAR(*rec.speed_estimate, 1.7, 1e-9);
    }
  }
  EXPECT_THROW(PulseTracker({}, 1), InvalidArgument);
}

TEST(SpeedPhase, Series) {
  std::vector<PulseRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({0.1 * i, 1.0, 2.0 + 0.8 * 0.1 * i, std::nullopt});
  const auto sp = speed_and_phase(recs, 0.75, 4);
  ASSERT_EQ(sp.t.size(), 10u);
  ASSERT_EQ(sp.speed.size(), 7u);
  EXPECT_NEAR(sp.speed.front(), 0.8, 1e-12);
  EXPECT_NEAR(sp.phase_error.back(), 0.05 * 0.9, 1e-12);
  EXPECT_DOUBLE_EQ(sp.speed_t.front(), recs[3].t);
  EXPECT_TRUE(speed_and_phase(recs, 0.75, 11).t.empty());
}
