#include "cgllab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "cgllab/error.hpp"

namespace cgl {

namespace {

// dx^d (2 pi)^d converts the unitary lattice sum into the continuum integral.
double continuum_weight(const Grid& g) {
  return g.cell_volume() * std::pow(2.0 * std::numbers::pi, g.dim());
}

// Per-shell sums of |xi|^2 |c|^2 indexed by |m|^2.
std::vector<double> shell_sums(const SpectralField& s) {
  const Grid& g = s.grid();
  const auto shell = g.shell();
  const auto k2 = g.k_squared();
  const auto c = s.coeffs();
  std::vector<double> sums(static_cast<std::size_t>(g.max_shell()) + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) sums[static_cast<std::size_t>(shell[i])] += k2[i] * std::norm(c[i]);
  return sums;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_stderr = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

// Spectral mass below this fraction of the total is transform roundoff.
constexpr double kRoundoffFloor = 1e-24;

}  // namespace

double decay_indicator(const Field& u0, double r, double rho) {
  const Grid& g = u0.grid();
  const int d = g.dim();
  if (!(r > -0.5 * d)) throw InvalidArgument("decay indicator requires r > -d/2");
  const double unit = g.wavenumber_unit();
  if (!(rho >= unit * (1.0 - 1e-12))) {
    std::ostringstream os;
    os << "unresolved ball: radius " << rho << " is below the lattice spacing " << unit;
    throw ResolutionError(os.str());
  }
  const SpectralField s = to_spectral(u0);
  const auto k2 = g.k_squared();
  const auto c = s.coeffs();
  const double rho2 = rho * rho * (1.0 + 1e-12);
  double acc = 0.0, total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = k2[i] * std::norm(c[i]);
    total += w;
    if (k2[i] > 0.0 && k2[i] <= rho2) acc += w;
  }
  if (acc <= kRoundoffFloor * total) return 0.0;
  return std::pow(rho, -2.0 * r - d) * acc * continuum_weight(g);
}

DecayCharacterEstimate decay_character(const Field& u0, double rho_min, double rho_max) {
  const Grid& g = u0.grid();
  const int d = g.dim();
  if (!(rho_min > 0.0) || !(rho_max > rho_min)) throw InvalidArgument("decay character: empty window");
  const double unit = g.wavenumber_unit();
  if (rho_min < unit * (1.0 - 1e-12)) {
    throw ResolutionError("decay character: window starts below the lattice spacing");
  }
  const SpectralField s = to_spectral(u0);
  const std::vector<double> sums = shell_sums(s);

  double away = 0.0;
  for (std::size_t k = 1; k < sums.size(); ++k) away += sums[k];
  if (!(away > 0.0)) throw InvalidArgument("decay character: no spectral mass away from the zero mode");

  // Occupied shells (|m|^2 values the lattice realizes). Every shell index
  // that carries a lattice point has a nonzero k^2; emptiness is a lattice
  // property, not a data property, so use the shell map.
  std::vector<char> occupied(sums.size(), 0);
  for (auto sh : g.shell()) occupied[static_cast<std::size_t>(sh)] = 1;

  const double weight = continuum_weight(g);
  std::vector<double> xs, ys;
  double cumulative = 0.0;
  bool any_zero = false;
  std::size_t prev = 0;
  bool have_prev = false;
  const double lo2 = rho_min * rho_min / (unit * unit) * (1.0 - 1e-12);
  const double hi2 = rho_max * rho_max / (unit * unit) * (1.0 + 1e-12);
  for (std::size_t k = 1; k < sums.size(); ++k) {
    if (!occupied[k]) continue;
    if (have_prev) {
      const auto p = static_cast<double>(prev);
      if (p >= lo2 && p <= hi2) {
        const double rho_mid = 0.5 * unit * (std::sqrt(p) + std::sqrt(static_cast<double>(k)));
        if (cumulative > kRoundoffFloor * away) {
          xs.push_back(std::log(rho_mid));
          ys.push_back(std::log(cumulative * weight));
        } else {
          any_zero = true;
        }
      }
      if (p > hi2) break;
    }
    cumulative += sums[k];
    prev = k;
    have_prev = true;
  }

  DecayCharacterEstimate est;
  est.rho_min = rho_min;
  est.rho_max = rho_max;
  est.points = xs.size();
  if (xs.empty() && any_zero) {
    est.boundary = DecayBoundary::PlusInfinity;
    est.r_star = std::numeric_limits<double>::infinity();
    est.slope = std::numeric_limits<double>::infinity();
    est.P_r = 0.0;
    return est;
  }
  if (xs.size() < 3) throw InvalidArgument("decay character: window holds fewer than 3 lattice shells");

  const LineFit fit = least_squares(xs, ys);
  est.slope = fit.slope;
  est.fit_r2 = fit.r2;
  est.r_star = 0.5 * (fit.slope - d);
  est.P_r = std::exp(fit.intercept);
  if (fit.r2 < 0.9 || any_zero) {
    if (est.r_star >= 0.0 || any_zero) {
      est.boundary = DecayBoundary::PlusInfinity;
      est.r_star = std::numeric_limits<double>::infinity();
      est.P_r = 0.0;
    } else {
      est.boundary = DecayBoundary::MinusHalfDim;
      est.r_star = -0.5 * d;
      est.P_r = std::numeric_limits<double>::infinity();
    }
  }
  return est;
}

RatePrediction predicted_gamma(double r_star) {
  if (!(r_star > -2.0)) {
    std::ostringstream os;
    os << "decay character " << r_star << " is outside theorem hypothesis r* > -2";
    throw InvalidArgument(os.str());
  }
  RatePrediction p;
  p.r_star = r_star;
  p.gamma = std::min(1.0 + 0.5 * r_star, 0.5);
  p.regime = (2.0 + r_star < 1.0) ? RateRegime::SlowSpectral : RateRegime::Saturated;
  return p;
}

DecayFit fit_decay_exponent(const Trajectory& traj, double t1, double t2) {
  if (!(t2 > t1)) throw InvalidArgument("decay fit: empty time window");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t < t1 || t > t2) continue;
    if (!(traj.h1[i] > 0.0)) throw InvalidArgument("decay fit: non-positive norm in window");
    xs.push_back(std::log1p(t));
    ys.push_back(std::log(traj.h1[i]));
  }
  if (xs.size() < 10) {
    std::ostringstream os;
    os << "decay fit: insufficient samples in [" << t1 << ", " << t2 << "] (" << xs.size() << " < 10)";
    throw InvalidArgument(os.str());
  }
  const LineFit fit = least_squares(xs, ys);
  return {-fit.slope, fit.slope_stderr, fit.r2, xs.size(), t1, t2};
}

std::pair<double, double> default_fit_window(double box_length) {
  return {10.0, std::min(100.0, box_length * box_length / 40.0)};
}

FrequencySplit fourier_split(const SpectralField& s, double rho) {
  if (!(rho >= 0.0)) throw InvalidArgument("splitting radius must be non-negative");
  const auto k2 = s.grid().k_squared();
  const auto c = s.coeffs();
  const double rho2 = rho * rho;
  double low = 0.0, high = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = k2[i] * std::norm(c[i]);
    if (k2[i] <= rho2) low += w;
    else high += w;
  }
  const double vol = s.grid().cell_volume();
  return {low * vol, high * vol};
}

FrequencySplit fourier_split(const Field& u, double rho) { return fourier_split(to_spectral(u), rho); }

double splitting_radius(double t, SplittingFunction g, double c0, int dim) {
  if (dim != 3 && dim != 4) throw InvalidArgument("dimension must be 3 or 4");
  if (!(t >= 0.0)) throw InvalidArgument("splitting radius needs t >= 0");
  if (!(c0 > 0.0)) throw InvalidArgument("splitting radius needs C0 > 0");
  const double exponent = 2.0 * (dim + 4) / (dim * (3.0 * dim - 4.0));
  // Work with log(g'/g) so the t = 0 values cancel exactly.
  double log_ratio = 0.0;
  switch (g.kind) {
    case SplittingFunction::Kind::LogCubed: {
      const double s = std::numbers::e + t;
      log_ratio = std::log(3.0) - std::log(s) - std::log(std::log(s));
      break;
    }
    case SplittingFunction::Kind::Power:
      if (!(g.alpha > 0.0)) throw InvalidArgument("power splitting needs alpha > 0");
      log_ratio = std::log(g.alpha) - std::log1p(t);
      break;
  }
  return std::exp(exponent * (log_ratio - std::log(c0)));
}

}  // namespace cgl
