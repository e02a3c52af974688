#pragma once
// The ground state W(x) = (1 + |x|^2 / (d(d-2)))^(-(d-2)/2), its scaled and
// translated copies on a periodic grid, the variational functionals, and a
// radial-quadrature oracle for the constants attached to W.

#include <array>
#include <string>

#include <json.hpp>

#include "cgllab/grid.hpp"

namespace cgl {

/// 2d/(d-2): the energy-critical Lebesgue exponent.
constexpr double critical_exponent(int dim) noexcept { return 2.0 * dim / (dim - 2); }
/// 4/(d-2): power of |u| in the nonlinearity.
constexpr int nonlinearity_power(int dim) noexcept { return dim == 3 ? 4 : 2; }

/// Radial profile W(r) at unit scale.
double ground_state_profile(double r, int dim) noexcept;
/// Radius where W drops to one half at unit scale.
double ground_state_half_radius(int dim) noexcept;

struct GroundStateParams {
  double lambda = 1.0;
  /// Translation center; the box spans [-L/2, L/2) on each axis.
  std::array<double, 4> x0{0.0, 0.0, 0.0, 0.0};
};

/// lambda^{-(d-2)/2} W((x - x0)/lambda), sampled with minimal-image
/// displacements. Throws ResolutionError when the core of W (full width at
/// half maximum) spans fewer than four cells.
Field make_W(const Grid& grid, const GroundStateParams& params = {});

/// ||Delta f + |f|^{4/(d-2)} f||_{L^2} / ||f||_{H^1-dot}.
double stationary_residual(const Field& f);

/// E(f) = 1/2 ||f||^2_{H^1-dot} - (d-2)/(2d) ||f||^{2d/(d-2)}_{L^{2d/(d-2)}}
double energy(const Field& f);

/// ||f||_{L^{2d/(d-2)}} / ||f||_{H^1-dot}; maximized by W.
double sobolev_ratio(const Field& f);

struct QuadratureProvenance {
  std::string method;
  double cutoff_radius = 0.0;
  double requested_tolerance = 0.0;
  double achieved_error = 0.0;
};

struct ReferenceConstants {
  int dim = 0;
  double gradW_l2_sq = 0.0;   // ||grad W||^2_{L^2}
  double W_crit_norm = 0.0;   // ||W||_{L^{2d/(d-2)}}
  double energy_W = 0.0;      // E(W)
  double sobolev_Cd = 0.0;    // sharp Sobolev constant
  QuadratureProvenance provenance;
};

/// Full-space constants of W by adaptive 1-D radial quadrature with an
/// asymptotic tail beyond the cutoff. Independent of the grid code path.
ReferenceConstants reference_constants(int dim);

nlohmann::json to_json(const ReferenceConstants& refs);

}  // namespace cgl
