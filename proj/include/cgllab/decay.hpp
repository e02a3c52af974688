#pragma once
// Decay character of |grad| u0, predicted decay exponents, decay-rate fits and
// the frequency splitting used to turn dissipation into algebraic decay.

#include <cstddef>

#include "cgllab/evolution.hpp"
#include "cgllab/grid.hpp"

namespace cgl {

/// rho^{-2r-d} times the lattice approximation of the integral of
/// |xi|^2 |F u0(xi)|^2 over 0 < |xi| <= rho, where F is the continuum Fourier
/// transform. Throws ResolutionError when rho < 2 pi / L.
double decay_indicator(const Field& u0, double r, double rho);

enum class DecayBoundary {
  Interior,
  /// P_r = 0 throughout the window (no low-frequency mass): r* = +inf.
  PlusInfinity,
  /// P_r = inf throughout the window: r* = -d/2.
  MinusHalfDim,
};

struct DecayCharacterEstimate {
  double r_star = 0.0;
  DecayBoundary boundary = DecayBoundary::Interior;
  double rho_min = 0.0;
  double rho_max = 0.0;
  /// Slope of log S(rho) against log rho; equals 2 r* + d.
  double slope = 0.0;
  double fit_r2 = 0.0;
  /// Decay indicator at r*, from the fitted intercept.
  double P_r = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log S(rho) over lattice shells in [rho_min, rho_max].
/// S is a step function of rho; each shell contributes the cumulative sum
/// through it, placed at the midpoint to the next shell.
DecayCharacterEstimate decay_character(const Field& u0, double rho_min, double rho_max);

enum class RateRegime { SlowSpectral, Saturated };

struct RatePrediction {
  double r_star = 0.0;
  double gamma = 0.0;
  RateRegime regime = RateRegime::Saturated;
};

/// gamma = min(1 + r*/2, 1/2); requires r* > -2.
RatePrediction predicted_gamma(double r_star);

struct DecayFit {
  double gamma_hat = 0.0;
  /// Standard error of the fitted slope.
  double confidence = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
  double t1 = 0.0;
  double t2 = 0.0;
};

/// Fits log ||u||_{H^1-dot} = c - gamma log(1 + t) over samples in [t1, t2].
DecayFit fit_decay_exponent(const Trajectory& traj, double t1, double t2);

/// Fit window for algebraic decay on a box of side L: [10, min(100, L^2/40)].
std::pair<double, double> default_fit_window(double box_length);

struct FrequencySplit {
  double low = 0.0;   // sum over |xi| <= rho of |xi|^2 |c|^2 dx^d
  double high = 0.0;  // sum over |xi| > rho
};

FrequencySplit fourier_split(const SpectralField& s, double rho);
FrequencySplit fourier_split(const Field& u, double rho);

struct SplittingFunction {
  enum class Kind { LogCubed, Power };
  Kind kind = Kind::LogCubed;
  double alpha = 1.0;  // exponent for Kind::Power

  static SplittingFunction log_cubed() { return {Kind::LogCubed, 1.0}; }
  static SplittingFunction power(double a) { return {Kind::Power, a}; }
};

/// rho(t) = (g'(t) / (C0 g(t)))^{2(d+4)/(d(3d-4))} with g = ln(e+t)^3 or (1+t)^alpha.
double splitting_radius(double t, SplittingFunction g, double c0, int dim);

}  // namespace cgl
