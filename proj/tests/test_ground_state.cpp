#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cgllab/error.hpp"
#include "cgllab/ground_state.hpp"
#include "support.hpp"

using namespace cgl;
using cgl::test::rel;

namespace {

// Sharp Sobolev constant in closed form (Aubin-Talenti):
// C_d^2 = (1 / (pi d (d-2))) (Gamma(d) / Gamma(d/2))^{2/d}.
double talenti(int d) {
  const double c2 = std::pow(std::tgamma(d) / std::tgamma(0.5 * d), 2.0 / d) / (std::numbers::pi * d * (d - 2));
  return std::sqrt(c2);
}

// Gradient energy of W lost to the box, from the far field
// |grad W_lambda|^2 ~ (d-2)^2 (d(d-2))^{d-2} lambda^{d-2} r^{-2(d-1)} integrated
// outside the ball with the box's volume.
double tail_gradient_energy(int d, double lambda, double box) {
  const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  const double r_eq = std::pow(std::pow(box, d) * d / area, 1.0 / d);
  const double coef = (d - 2.0) * (d - 2.0) * std::pow(d * (d - 2.0), d - 2.0) * std::pow(lambda, d - 2.0);
  return area * coef * std::pow(r_eq, 2.0 - d) / (d - 2.0);
}

}  // namespace

TEST(ReferenceConstants, MatchClosedForms) {
  for (int d : {3, 4}) {
    const ReferenceConstants rc = reference_constants(d);
    const double cd = talenti(d);
    EXPECT_LT(rel(rc.sobolev_Cd, cd), 1e-9) << d;
    EXPECT_LT(rel(rc.gradW_l2_sq, std::pow(cd, -d)), 1e-9) << d;
    EXPECT_LT(rel(rc.energy_W, rc.gradW_l2_sq / d), 1e-6);
    EXPECT_LT(rel(rc.gradW_l2_sq, std::pow(rc.W_crit_norm, critical_exponent(d))), 1e-6);
    EXPECT_LE(rc.provenance.achieved_error, 1e-9);
  }
  EXPECT_NEAR(reference_constants(3).sobolev_Cd, 0.42726, 1e-5);
  EXPECT_THROW(reference_constants(5), InvalidArgument);
}

TEST(GroundState, ProfileValues) {
  EXPECT_DOUBLE_EQ(ground_state_profile(0.0, 3), 1.0);
  EXPECT_DOUBLE_EQ(ground_state_profile(std::sqrt(8.0), 4), 0.5);
  EXPECT_NEAR(ground_state_profile(ground_state_half_radius(3), 3), 0.5, 1e-15);
}

TEST(GroundState, SampledValues) {
  const Grid g3 = make_grid(3, 64, 60.0);
  const Field w3 = make_W(g3);
  const std::size_t n = 64, c = n / 2;
  EXPECT_DOUBLE_EQ(w3[(c * n + c) * n + c].real(), 1.0);

  // Unit spacing puts the lattice point (2, 2, 0, 0) at distance sqrt(8).
  const Grid g4 = make_grid(4, 32, 32.0);
  const Field w4 = make_W(g4);
  const std::size_t m = 32, o = m / 2;
  EXPECT_NEAR(w4[(((o + 2) * m + (o + 2)) * m + o) * m + o].real(), 0.5, 1e-15);
}

TEST(GroundState, RejectsUnresolvedAndMisplaced) {
  const Grid g = make_grid(3, 16, 60.0);  // spacing 3.75: core of W spans < 4 cells
  EXPECT_THROW(make_W(g), ResolutionError);
  const Grid ok = make_grid(3, 32, 30.0);
  GroundStateParams p;
  p.lambda = -1.0;
  EXPECT_THROW(make_W(ok, p), InvalidArgument);
  p.lambda = 1.0;
  p.x0 = {40.0, 0.0, 0.0, 0.0};
  EXPECT_THROW(make_W(ok, p), InvalidArgument);
}

TEST(GroundState, CriticalNormMatchesOracle) {
  const Grid g3 = make_grid(3, 64, 60.0);
  EXPECT_LT(rel(lp_norm(make_W(g3), 6.0), reference_constants(3).W_crit_norm), 1e-2);
  const Grid g4 = make_grid(4, 32, 40.0);
  EXPECT_LT(rel(lp_norm(make_W(g4), 4.0), reference_constants(4).W_crit_norm), 1e-2);
}

// W decays like |x|^{-(d-2)}, so the box misses a slice of the gradient energy
// that shrinks only like 1/L in d = 3. With that slice restored the grid value
// matches the oracle, and the scaling invariance of the H^1-dot norm holds.
TEST(GroundState, GradientEnergyUpToBoxTail) {
  const double oracle = reference_constants(3).gradW_l2_sq;
  const Grid g = make_grid(3, 64, 60.0);
  for (double lambda : {1.0, 2.0}) {
    GroundStateParams p;
    p.lambda = lambda;
    const double h1 = hdot1_norm(make_W(g, p));
    const double tail = tail_gradient_energy(3, lambda, 60.0);
    EXPECT_LT(rel(h1 * h1 + tail, oracle), 1e-2) << lambda;
    EXPECT_GT(tail / oracle, 0.05) << "tail is not negligible on this box";
  }
  const Grid g4 = make_grid(4, 32, 40.0);
  const double h4 = hdot1_norm(make_W(g4));
  EXPECT_LT(rel(h4 * h4 + tail_gradient_energy(4, 1.0, 40.0), reference_constants(4).gradW_l2_sq), 1e-2);
}

TEST(GroundState, TranslationByWholeCells) {
  const Grid g = make_grid(3, 32, 30.0);
  const Field w = make_W(g);
  GroundStateParams p;
  p.x0 = {3 * g.spacing(), -2 * g.spacing(), 5 * g.spacing(), 0.0};
  const Field s = make_W(g, p);
  EXPECT_LT(rel(hdot1_norm(s), hdot1_norm(w)), 1e-13);
  EXPECT_LT(rel(energy(s), energy(w)), 1e-12);
  EXPECT_LT(rel(lp_norm(s, 6.0), lp_norm(w, 6.0)), 1e-13);
  EXPECT_LT(rel(sobolev_ratio(s), sobolev_ratio(w)), 1e-12);
}

TEST(Residual, DistinguishesStationaryData) {
  const Grid g = make_grid(3, 64, 60.0);
  const Field w = make_W(g);
  const double rw = stationary_residual(w);
  Field half = w;
  half *= 0.5;
  EXPECT_GE(stationary_residual(half), 0.1);
  EXPECT_GE(stationary_residual(test::plane_wave(g, 0, 3)), 0.5);
  // The floor comes from the kink of the minimal-image W at the box faces.
  EXPECT_LT(rw, 0.15);
  EXPECT_LT(rw, 0.25 * stationary_residual(half));
  EXPECT_THROW(stationary_residual(Field(g)), NumericalError);
}

TEST(Energy, Values) {
  const Grid g = make_grid(3, 64, 60.0);
  EXPECT_EQ(energy(Field(g)), 0.0);
  const Field w = make_W(g);
  Field big = w;
  big *= 1.2;
  EXPECT_LT(energy(big), energy(w));
  // Against the oracle: c^2/2 A - c^6/6 A with A = ||grad W||^2.
  const double a = reference_constants(3).gradW_l2_sq;
  EXPECT_LT(0.72 * a - std::pow(1.2, 6) / 6.0 * a, a / 3.0);
}

TEST(Sobolev, GroundStateMaximizesRatio) {
  const Grid g = make_grid(3, 32, 30.0);
  const double rw = sobolev_ratio(make_W(g));
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Field f = test::random_smooth_field(g, seed);
    EXPECT_LT(sobolev_ratio(f), rw - 1e-3) << seed;
  }
  EXPECT_THROW(sobolev_ratio(Field(g)), NumericalError);
}

TEST(Sobolev, RatioNearSharpConstant) {
  // The truncated tail lowers the gradient norm more than the critical norm,
  // so the box ratio sits a few percent above C_3.
  const Grid g = make_grid(3, 64, 60.0);
  const double r = sobolev_ratio(make_W(g));
  EXPECT_LT(rel(r, talenti(3)), 0.06);
}

TEST(Constants, Json) {
  const auto j = to_json(reference_constants(4));
  EXPECT_EQ(j.at("d").get<int>(), 4);
  EXPECT_TRUE(j.contains("provenance"));
}
