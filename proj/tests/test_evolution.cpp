#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cgllab/error.hpp"
#include "cgllab/evolution.hpp"
#include "cgllab/ground_state.hpp"
#include "support.hpp"

using namespace cgl;
using cgl::test::rel;

namespace {

// Cheaper stand-in for the default d = 3 box with the same resolution of W.
Grid small_box() { return make_grid(3, 32, 30.0); }

Field gaussian(const Grid& g, double width, double amp) {
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    double r2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) r2 += std::pow(g.coordinate(idx[static_cast<std::size_t>(a)]), 2);
    f[i] = amp * std::exp(-r2 / (2.0 * width * width));
  }
  return f;
}

Field scaled(Field f, double c) {
  f *= c;
  return f;
}

}  // namespace

TEST(Step, ZeroIsFixed) {
  const Grid g = small_box();
  const Field u = step(Field(g), default_flow_params(3), 0.1);
  EXPECT_EQ(l2_norm(u), 0.0);
}

TEST(Step, LinearPropagatorIsExactOnEigenmodes) {
  const Grid g = make_grid(3, 8, 2.0 * std::numbers::pi);
  const Field w = test::plane_wave(g, 0, 1);
  FlowParams p = default_flow_params(3, {1.0, 2.0});
  p.nonlinearity_on = false;
  const double dt = 0.37;
  const Field u = step(w, p, dt);
  const cplx factor = std::exp(-p.z * dt);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(u[i] - factor * w[i]), 1e-13);
}

TEST(Step, GroundStateMovesOnlyByResidual) {
  const Grid g = make_grid(3, 64, 60.0);
  const Field w = make_W(g);
  const double dt = 1e-3;
  const Field u = step(w, default_flow_params(3), dt);
  EXPECT_LT(hdot1_norm(u - w) / hdot1_norm(w), 10.0 * stationary_residual(w) * dt);
}

TEST(Step, RejectsBadInput) {
  const Grid g = small_box();
  EXPECT_THROW(step(Field(g), default_flow_params(3), 0.0), InvalidArgument);
  EXPECT_THROW(step(Field(g), default_flow_params(3, {0.0, 1.0}), 0.1), InvalidArgument);
  Field bad(g);
  bad[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(step(bad, default_flow_params(3), 0.1), NumericalError);
}

TEST(StepControl, Validation) {
  StepControl c;
  EXPECT_NO_THROW(validate(c));
  c.dt_min = 1.0;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.blowup_h1_factor = 5.0;
  EXPECT_THROW(validate(c), InvalidArgument);
  c = {};
  c.dt_out_growth = 0.5;
  EXPECT_THROW(validate(c), InvalidArgument);
}

TEST(Run, SubThresholdDataDissipates) {
  const Grid g = small_box();
  StepControl c;
  c.t_max = 20.0;
  c.dt_out = 0.5;
  const Trajectory t = run(scaled(make_W(g), 0.5), default_flow_params(3), c);
  EXPECT_TRUE(t.verdict == Verdict::ReachedHorizon || t.verdict == Verdict::Dissipated);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t.h1[i], t.h1[i - 1]);
  EXPECT_TRUE(lyapunov_monitor(t).monotone);
  // Gradient-flow structure: energy non-increasing up to 10 tol per unit time.
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_LE(t.energy[i], t.energy[i - 1] + 10.0 * c.tol * (t.times[i] - t.times[i - 1]));
  }
  EXPECT_LT(dissipation_residual(t), 1e-3);
}

TEST(Run, AboveKineticThresholdBlowsUp) {
  const Grid g = small_box();
  StepControl c;
  c.t_max = 10.0;
  const Trajectory t = run(scaled(make_W(g), 1.2), default_flow_params(3), c);
  EXPECT_EQ(t.verdict, Verdict::BlowUp);
  EXPECT_GT(t.last_reliable_time, 0.0);
  EXPECT_LT(t.last_reliable_time, c.t_max);
  EXPECT_FALSE(lyapunov_monitor(t).monotone);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GT(t.times[i], t.times[i - 1]);
}

TEST(Run, ZeroDataIsTriviallyMonotone) {
  const Grid g = small_box();
  StepControl c;
  c.t_max = 1.0;
  const Trajectory t = run(Field(g), default_flow_params(3), c);
  EXPECT_EQ(t.verdict, Verdict::ReachedHorizon);
  EXPECT_TRUE(lyapunov_monitor(t).monotone);
}

TEST(Run, SmallDataIsLyapunovMonotone) {
  const Grid g = small_box();
  const Field w = make_W(g);
  const Field u0 = scaled(w, 0.01);
  StepControl c;
  c.t_max = 5.0;
  const Trajectory t = run(u0, default_flow_params(3, {1.0, 1.0}), c);
  const LyapunovReport rep = lyapunov_monitor(t);
  EXPECT_TRUE(rep.monotone);
  EXPECT_LT(rep.max_uptick, 1e-6);
}

TEST(Run, GeometricSamplingLandsOnSchedule) {
  const Grid g = make_grid(3, 16, 15.0);
  StepControl c;
  c.t_max = 3.0;
  c.dt_out = 0.1;
  c.dt_out_growth = 1.5;
  FlowParams p = default_flow_params(3);
  p.nonlinearity_on = false;
  const Trajectory t = run(gaussian(g, 2.0, 1.0), p, c);
  double expect = 0.0, interval = 0.1;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    EXPECT_NEAR(t.times[i], expect, 1e-12);
    expect += interval;
    interval *= 1.5;
  }
  EXPECT_DOUBLE_EQ(t.times.back(), 3.0);
}

TEST(Linear, MatchesExactSemigroup) {
  const Grid g = make_grid(3, 32, 20.0);
  const Field u0 = gaussian(g, 1.5, 1.0);
  FlowParams p = default_flow_params(3, {0.7, 0.3});
  p.nonlinearity_on = false;
  StepControl c;
  c.t_max = 4.0;
  c.dt_out = 0.25;
  const Trajectory t = run(u0, p, c);
  const std::vector<double> exact = linear_heat_run(u0, p.z.real(), t.times);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_LT(rel(t.h1[i], exact[i]), 1e-10) << t.times[i];
  EXPECT_LT(dissipation_residual(t), 1e-6);
}

TEST(Linear, HeatRunBasics) {
  const Grid g = make_grid(3, 8, 2.0 * std::numbers::pi);
  const Field w = test::plane_wave(g, 1, 1);
  const std::vector<double> ts{0.0, 0.5, 2.0};
  const auto h = linear_heat_run(w, 0.8, ts);
  EXPECT_EQ(h[0], hdot1_norm(w));
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_LT(rel(h[i], h[0] * std::exp(-0.8 * ts[i])), 1e-13);
  EXPECT_THROW(linear_heat_run(w, 0.0, ts), InvalidArgument);
}

TEST(Linear, GaussianSlopeFollowsDecayCharacter) {
  // e^{-|x|^2}: nonzero Fourier transform at the origin, so r* = 1 and the
  // squared norm decays like (1 + t)^{-(d/2 + 1)}.
  const Grid g = make_grid(3, 64, 64.0);
  const Field u0 = gaussian(g, std::sqrt(0.5), 1.0);
  std::vector<double> ts;
  for (double t = 10.0; t <= 100.0; t += 5.0) ts.push_back(t);
  const auto h = linear_heat_run(u0, 1.0, ts);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log1p(ts[i]), y = 2.0 * std::log(h[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -2.5, 0.15);
}

TEST(Integrator, FourthOrderOnResolvedRun) {
  const Grid g = make_grid(3, 16, 16.0);
  const Field u0 = gaussian(g, 2.0, 0.8);
  const FlowParams p = default_flow_params(3, {1.0, 0.5});
  const double T = 0.4;
  auto integrate = [&](int steps) {
    Field u = u0;
    for (int i = 0; i < steps; ++i) u = step(u, p, T / steps);
    return u;
  };
  const Field ref = integrate(256);
  const double e1 = l2_norm(integrate(4) - ref);
  const double e2 = l2_norm(integrate(8) - ref);
  const double e3 = l2_norm(integrate(16) - ref);
  EXPECT_GE(std::log2(e1 / e2), 3.5);
  EXPECT_GE(std::log2(e2 / e3), 3.5);
}

TEST(Integrator, GaugeCovariance) {
  const Grid g = make_grid(3, 16, 16.0);
  const Field u0 = gaussian(g, 2.0, 1.0);
  Field rotated = u0;
  rotated *= std::polar(1.0, 0.9);
  StepControl c;
  c.t_max = 1.0;
  const FlowParams p = default_flow_params(3, {1.0, 1.0});
  const Trajectory a = run(u0, p, c), b = run(rotated, p, c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT(rel(b.h1[i], a.h1[i]), 1e-11);
    EXPECT_LT(std::abs(b.energy[i] - a.energy[i]), 1e-11 * (1.0 + std::abs(a.energy[i])));
  }
  const Field& fa = a.snapshots.back().u;
  Field fb = b.snapshots.back().u;
  fb *= std::polar(1.0, -0.9);
  EXPECT_LT(l2_norm(fb - fa) / l2_norm(fa), 1e-11);
}

TEST(Integrator, RefinementConsistency) {
  const FlowParams p = default_flow_params(3);
  StepControl c;
  c.t_max = 1.0;
  c.tol = 1e-6;
  const Grid coarse = make_grid(3, 16, 16.0), fine = make_grid(3, 32, 16.0);
  const Trajectory a = run(gaussian(coarse, 2.0, 1.0), p, c);
  c.tol /= 16.0;
  const Trajectory b = run(gaussian(fine, 2.0, 1.0), p, c);
  EXPECT_LT(rel(a.h1.back(), b.h1.back()), 1e-2);
}

TEST(Resume, ContinuesBitForBit) {
  const Grid g = make_grid(3, 16, 16.0);
  const Field u0 = gaussian(g, 2.0, 0.8);
  const FlowParams p = default_flow_params(3, {1.0, 0.4});
  StepControl c;
  c.t_max = 2.0;
  c.dt_out = 0.25;
  std::optional<RunState> saved;
  RunObserver obs;
  obs.on_sample = [&](const RunState& s) {
    if (s.sample_index == 3) saved = s;
  };
  const Trajectory full = run(u0, p, c, obs);
  ASSERT_TRUE(saved);
  const Trajectory tail = resume(*saved, p, c);
  const std::size_t off = full.size() - tail.size();
  ASSERT_EQ(full.times[off], saved->t);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    EXPECT_EQ(tail.times[i], full.times[off + i]);
    EXPECT_EQ(tail.h1[i], full.h1[off + i]);
    EXPECT_EQ(tail.energy[i], full.energy[off + i]);
  }
}

TEST(Verdict, StringRoundTrip) {
  for (auto v : {Verdict::Running, Verdict::ReachedHorizon, Verdict::Dissipated, Verdict::BlowUp,
                 Verdict::StepUnderflow}) {
    EXPECT_EQ(verdict_from_string(to_string(v)), v);
  }
  EXPECT_THROW(verdict_from_string("Exploded"), InvalidArgument);
}
