#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cgllab/decay.hpp"
#include "cgllab/error.hpp"
#include "cgllab/scenarios.hpp"
#include "support.hpp"

using namespace cgl;
using cgl::test::rel;

namespace {

Field profile(const Grid& g, int k, double width = 0.7) {
  InitialDataSpec s;
  s.kind = InitialKind::SpectralProfile;
  s.k = k;
  s.width = width;
  return build_initial_data(g, s);
}

Trajectory heat_trajectory(const Field& u0, double t1, double t2, int n) {
  Trajectory t;
  for (int i = 0; i < n; ++i) t.times.push_back(t1 + (t2 - t1) * i / (n - 1));
  t.h1 = linear_heat_run(u0, 1.0, t.times);
  return t;
}

}  // namespace

TEST(DecayIndicator, PlaneWaveOutsideBallIsZero) {
  const Grid g = make_grid(3, 32, 2.0 * std::numbers::pi);
  EXPECT_EQ(decay_indicator(test::plane_wave(g, 0, 5), 1.0, 3.0), 0.0);
}

TEST(DecayIndicator, GaussianScaling) {
  const Grid g = make_grid(3, 64, 60.0);
  const Field u0 = profile(g, 0);
  const double unit = g.wavenumber_unit();
  double lo = 1e300, hi = 0.0;
  std::vector<double> rhos, p2;
  for (double rho = 2.0 * unit; rho <= 8.0 * unit * (1 + 1e-12); rho *= std::sqrt(2.0)) {
    const double p = decay_indicator(u0, 1.0, rho);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    rhos.push_back(rho);
    p2.push_back(decay_indicator(u0, 2.0, rho));
  }
  EXPECT_LT(hi / lo, 2.0);
  // r = 2 sits above r* = 1: the indicator grows like rho^{-2} as rho shrinks.
  const double slope = std::log(p2.front() / p2.back()) / std::log(rhos.front() / rhos.back());
  EXPECT_NEAR(slope, -2.0, 0.3);
  EXPECT_GT(p2.front(), p2.back());
}

TEST(DecayIndicator, Preconditions) {
  const Grid g = make_grid(3, 16, 10.0);
  const Field u0 = test::random_smooth_field(g, 1);
  try {
    decay_indicator(u0, 1.0, 0.5 * g.wavenumber_unit());
    FAIL() << "expected ResolutionError";
  } catch (const ResolutionError& e) {
    EXPECT_NE(std::string(e.what()).find("unresolved ball"), std::string::npos);
  }
  EXPECT_THROW(decay_indicator(u0, -1.5, 1.0), InvalidArgument);
}

TEST(DecayCharacter, RecoversConstructedExponent) {
  const Grid g = make_grid(3, 64, 60.0);
  const double unit = g.wavenumber_unit();
  for (int k : {0, 1, 2}) {
    const DecayCharacterEstimate e = decay_character(profile(g, k), unit, 6.0 * unit);
    EXPECT_EQ(e.boundary, DecayBoundary::Interior);
    EXPECT_NEAR(e.r_star, k + 1.0, k == 0 ? 0.1 : 0.15) << k;
    EXPECT_NEAR(e.slope, 2.0 * e.r_star + 3.0, 1e-12);
    EXPECT_GE(e.points, 10u);
    EXPECT_GT(e.fit_r2, 0.99);
    EXPECT_GT(e.P_r, 0.0);
    EXPECT_TRUE(std::isfinite(e.P_r));
  }
}

TEST(DecayCharacter, PlaneWaveIsPlusInfinity) {
  const Grid g = make_grid(3, 32, 2.0 * std::numbers::pi);
  const DecayCharacterEstimate e = decay_character(test::plane_wave(g, 1, 9), 1.0, 4.0);
  EXPECT_EQ(e.boundary, DecayBoundary::PlusInfinity);
  EXPECT_TRUE(std::isinf(e.r_star) && e.r_star > 0.0);
}

TEST(DecayCharacter, Errors) {
  const Grid g = make_grid(3, 16, 10.0);
  Field c(g);
  for (auto& v : c.values()) v = 2.0;
  EXPECT_THROW(decay_character(c, 1.0, 3.0), InvalidArgument);
  const Field f = test::random_smooth_field(g, 2);
  EXPECT_THROW(decay_character(f, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(decay_character(f, 0.1 * g.wavenumber_unit(), 1.0), ResolutionError);
}

TEST(PredictedGamma, Branches) {
  const RatePrediction a = predicted_gamma(1.0);
  EXPECT_EQ(a.gamma, 0.5);
  EXPECT_EQ(a.regime, RateRegime::Saturated);
  const RatePrediction b = predicted_gamma(-1.5);
  EXPECT_EQ(b.gamma, 0.25);
  EXPECT_EQ(b.regime, RateRegime::SlowSpectral);
  try {
    predicted_gamma(-2.0);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("outside theorem hypothesis"), std::string::npos);
  }
}

TEST(PredictedGamma, ContinuousWithKinkAtMinusOne) {
  EXPECT_EQ(predicted_gamma(-1.0).gamma, 0.5);
  EXPECT_EQ(predicted_gamma(-1.0).regime, RateRegime::Saturated);
  EXPECT_NEAR(predicted_gamma(-1.0 - 1e-9).gamma, 0.5, 1e-9);
  const double left = (predicted_gamma(-1.1).gamma - predicted_gamma(-1.2).gamma) / 0.1;
  const double right = (predicted_gamma(-0.8).gamma - predicted_gamma(-0.9).gamma) / 0.1;
  EXPECT_NEAR(left, 0.5, 1e-12);
  EXPECT_NEAR(right, 0.0, 1e-12);
}

TEST(DecayFit, HeatFlowOfGaussian) {
  // ||u||_{H^1-dot}^2 ~ (1 + t)^{-(d/2 + 1)} for r* = 1, so the norm decays at 1.25.
  const Grid g = make_grid(3, 64, 64.0);
  const DecayFit f = fit_decay_exponent(heat_trajectory(profile(g, 0), 10.0, 100.0, 40), 10.0, 100.0);
  EXPECT_NEAR(f.gamma_hat, 1.25, 0.1);
  EXPECT_EQ(f.samples, 40u);
}

TEST(DecayFit, ConstantNormHasNoDecay) {
  Trajectory t;
  for (int i = 0; i < 20; ++i) {
    t.times.push_back(i);
    t.h1.push_back(3.4);
  }
  EXPECT_NEAR(fit_decay_exponent(t, 0.0, 19.0).gamma_hat, 0.0, 0.02);
}

TEST(DecayFit, Preconditions) {
  Trajectory t;
  for (int i = 0; i < 9; ++i) {
    t.times.push_back(i);
    t.h1.push_back(1.0);
  }
  EXPECT_THROW(fit_decay_exponent(t, 0.0, 10.0), InvalidArgument);
  t.times.push_back(9);
  t.h1.push_back(0.0);
  EXPECT_THROW(fit_decay_exponent(t, 0.0, 10.0), InvalidArgument);
  EXPECT_THROW(fit_decay_exponent(t, 5.0, 5.0), InvalidArgument);
}

TEST(DecayFit, DefaultWindow) {
  EXPECT_EQ(default_fit_window(60.0), (std::pair{10.0, 90.0}));
  EXPECT_EQ(default_fit_window(80.0), (std::pair{10.0, 100.0}));
}

TEST(FourierSplit, ExactPartition) {
  const Grid g = make_grid(3, 16, 9.0);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> radius(0.0, 1.2 * std::sqrt(3.0) * 8.0 * g.wavenumber_unit());
  for (int trial = 0; trial < 20; ++trial) {
    const Field f = test::random_field(g, 100 + trial);
    const double h = hdot1_norm(f);
    const FrequencySplit s = fourier_split(f, radius(rng));
    EXPECT_LT(rel(s.low + s.high, h * h), 1e-12);
  }
  const Field f = test::random_field(g, 7);
  const double h = hdot1_norm(f);
  const FrequencySplit zero = fourier_split(f, 0.0);
  EXPECT_EQ(zero.low, 0.0);
  EXPECT_LT(rel(zero.high, h * h), 1e-12);
  const FrequencySplit all = fourier_split(f, 1e9);
  EXPECT_EQ(all.high, 0.0);
  EXPECT_LT(rel(all.low, h * h), 1e-12);
  EXPECT_THROW(fourier_split(f, -1.0), InvalidArgument);
}

TEST(FourierSplit, MonotoneInRadius) {
  const Grid g = make_grid(3, 16, 9.0);
  const SpectralField s = to_spectral(test::random_field(g, 3));
  FrequencySplit prev = fourier_split(s, 0.0);
  for (double rho = 0.1; rho < 10.0; rho += 0.1) {
    const FrequencySplit cur = fourier_split(s, rho);
    EXPECT_GE(cur.low, prev.low);
    EXPECT_LE(cur.high, prev.high);
    prev = cur;
  }
}

TEST(SplittingRadius, ValuesAtTimeZero) {
  EXPECT_EQ(splitting_radius(0.0, SplittingFunction::log_cubed(), 3.0, 3), std::exp(-14.0 / 15.0));
  EXPECT_EQ(splitting_radius(0.0, SplittingFunction::power(2.0), 2.0, 4), 1.0);
  // Away from t = 0 the closed form still holds to rounding.
  EXPECT_NEAR(splitting_radius(5.0, SplittingFunction::power(1.5), 0.5, 3), std::pow(3.0 / 6.0, 14.0 / 15.0), 1e-15);
}

TEST(SplittingRadius, DecaysToZero) {
  for (auto g : {SplittingFunction::log_cubed(), SplittingFunction::power(1.5)}) {
    double prev = splitting_radius(1.0, g, 1.0, 3);
    for (double t = 2.0; t < 1e6; t *= 2.0) {
      const double r = splitting_radius(t, g, 1.0, 3);
      EXPECT_LT(r, prev);
      prev = r;
    }
    EXPECT_LT(prev, 1e-3);
  }
}

TEST(SplittingRadius, Preconditions) {
  EXPECT_THROW(splitting_radius(-1.0, SplittingFunction::log_cubed(), 1.0, 3), InvalidArgument);
  EXPECT_THROW(splitting_radius(0.0, SplittingFunction::log_cubed(), 0.0, 3), InvalidArgument);
  EXPECT_THROW(splitting_radius(0.0, SplittingFunction::power(0.0), 1.0, 3), InvalidArgument);
  EXPECT_THROW(splitting_radius(0.0, SplittingFunction::log_cubed(), 1.0, 5), InvalidArgument);
}
