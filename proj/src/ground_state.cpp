#include "cgllab/ground_state.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cgllab/error.hpp"

namespace cgl {

namespace {

void require_dim(int dim) {
  if (dim != 3 && dim != 4) {
    throw InvalidArgument("dimension must be 3 or 4, got " + std::to_string(dim));
  }
}

double sphere_area(int dim) {
  // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

// |f|^{4/(d-2)} f with the exponent evaluated as a polynomial in |f|^2.
inline cplx power_nonlinearity(cplx v, int dim) noexcept {
  const double a2 = std::norm(v);
  return dim == 3 ? (a2 * a2) * v : a2 * v;
}

}  // namespace

double ground_state_profile(double r, int dim) noexcept {
  const double a = dim * (dim - 2.0);
  return std::pow(1.0 + r * r / a, -0.5 * (dim - 2));
}

double ground_state_half_radius(int dim) noexcept {
  const double a = dim * (dim - 2.0);
  return std::sqrt(a * (std::pow(2.0, 2.0 / (dim - 2)) - 1.0));
}

Field make_W(const Grid& grid, const GroundStateParams& params) {
  const int d = grid.dim();
  const double len = grid.length();
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) {
    throw InvalidArgument("ground state scale must be positive");
  }
  for (int a = 0; a < d; ++a) {
    const double c = params.x0[static_cast<std::size_t>(a)];
    if (!(c >= -0.5 * len && c <= 0.5 * len)) {
      throw InvalidArgument("ground state center lies outside the box");
    }
  }
  const double fwhm = 2.0 * params.lambda * ground_state_half_radius(d);
  if (fwhm < 4.0 * grid.spacing()) {
    std::ostringstream os;
    os << "ground state with scale " << params.lambda << " is unresolved: core width " << fwhm
       << " is below 4 cells (" << 4.0 * grid.spacing() << ")";
    throw ResolutionError(os.str());
  }

  const double amp = std::pow(params.lambda, -0.5 * (d - 2));
  Field f(grid);
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const auto idx = grid.unravel(flat);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double dx = grid.coordinate(idx[static_cast<std::size_t>(a)]) - params.x0[static_cast<std::size_t>(a)];
      dx -= len * std::round(dx / len);
      r2 += dx * dx;
    }
    f[flat] = amp * ground_state_profile(std::sqrt(r2) / params.lambda, d);
  }
  return f;
}

double stationary_residual(const Field& f) {
  const int d = f.grid().dim();
  const SpectralField s = to_spectral(f);
  const double h1 = hdot1_norm(s);
  if (!(h1 > 0.0)) throw NumericalError("undefined residual: field has zero H^1-dot norm");
  SpectralField lap = s;
  const auto k2 = f.grid().k_squared();
  auto c = lap.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -k2[i];
  Field r = to_physical(lap);
  for (std::size_t i = 0; i < r.grid().size(); ++i) r[i] += power_nonlinearity(f[i], d);
  return l2_norm(r) / h1;
}

double energy(const Field& f) {
  const int d = f.grid().dim();
  const double h1 = hdot1_norm(f);
  return 0.5 * h1 * h1 - (d - 2.0) / (2.0 * d) * lp_integral(f, critical_exponent(d));
}

double sobolev_ratio(const Field& f) {
  const double h1 = hdot1_norm(f);
  if (!(h1 > 0.0)) throw NumericalError("Sobolev ratio undefined for a field with zero H^1-dot norm");
  return lp_norm(f, critical_exponent(f.grid().dim())) / h1;
}

ReferenceConstants reference_constants(int dim) {
  require_dim(dim);
  using boost::math::quadrature::gauss_kronrod;
  const double d = dim;
  const double a = d * (d - 2.0);
  const double cutoff = 200.0;
  const double tol = 1e-13;

  // r^{d-1} |W'(r)|^2 and r^{d-1} W(r)^{2d/(d-2)}
  auto grad_integrand = [=](double r) {
    return (d - 2.0) * (d - 2.0) / (a * a) * std::pow(r, d + 1.0) * std::pow(1.0 + r * r / a, -d);
  };
  auto crit_integrand = [=](double r) { return std::pow(r, d - 1.0) * std::pow(1.0 + r * r / a, -d); };

  double err_grad = 0.0;
  double err_crit = 0.0;
  double grad = 0.0;
  double crit = 0.0;
  // Split at the core so the adaptive rule sees one scale per piece.
  for (auto [lo, hi] : {std::pair{0.0, 10.0}, std::pair{10.0, cutoff}}) {
    double e = 0.0;
    grad += gauss_kronrod<double, 61>::integrate(grad_integrand, lo, hi, 20, tol, &e);
    err_grad += e;
    crit += gauss_kronrod<double, 61>::integrate(crit_integrand, lo, hi, 20, tol, &e);
    err_crit += e;
  }

  // Expansion of (1 + r^2/a)^{-d} in powers of a/r^2, integrated over [R, inf).
  const double R = cutoff;
  grad += (d - 2.0) * (d - 2.0) * std::pow(a, d - 2.0) *
          (std::pow(R, 2.0 - d) / (d - 2.0) - a * std::pow(R, -d) +
           0.5 * d * (d + 1.0) * a * a * std::pow(R, -d - 2.0) / (d + 2.0));
  crit += std::pow(a, d) * (std::pow(R, -d) / d - d * a * std::pow(R, -d - 2.0) / (d + 2.0));

  const double achieved = std::max(err_grad / grad, err_crit / crit);
  if (!(achieved < 1e-9)) {
    std::ostringstream os;
    os << "radial quadrature did not converge: achieved relative error " << achieved;
    throw NumericalError(os.str());
  }

  const double area = sphere_area(dim);
  ReferenceConstants out;
  out.dim = dim;
  out.gradW_l2_sq = area * grad;
  const double crit_integral = area * crit;
  out.W_crit_norm = std::pow(crit_integral, 1.0 / critical_exponent(dim));
  out.energy_W = 0.5 * out.gradW_l2_sq - (d - 2.0) / (2.0 * d) * crit_integral;
  out.sobolev_Cd = out.W_crit_norm / std::sqrt(out.gradW_l2_sq);
  out.provenance = {"adaptive Gauss-Kronrod (61 point) on [0, R] plus three-term asymptotic tail",
                    cutoff, tol, achieved};
  return out;
}

nlohmann::json to_json(const ReferenceConstants& refs) {
  return {
      {"d", refs.dim},
      {"gradW_l2_sq", refs.gradW_l2_sq},
      {"W_crit_norm", refs.W_crit_norm},
      {"energy_W", refs.energy_W},
      {"sobolev_Cd", refs.sobolev_Cd},
      {"provenance",
       {{"method", refs.provenance.method},
        {"cutoff_radius", refs.provenance.cutoff_radius},
        {"requested_tolerance", refs.provenance.requested_tolerance},
        {"achieved_relative_error", refs.provenance.achieved_error}}},
  };
}

}  // namespace cgl
