#pragma once
// Periodic box discretization of R^d (d = 3, 4), unitary FFTs, spectral
// operators and grid quadrature.
//
// Layout: row-major over axes, x_j = -L/2 + j*dx, so index N/2 on every axis
// is the origin. Spectral coefficients use the FFTW ordering; axis index j
// carries the centered integer frequency m = j for j < N/2 and j - N for
// j >= N/2, i.e. m in {-N/2, ..., N/2 - 1}.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cgl {

using cplx = std::complex<double>;

namespace detail {
struct GridData;
}

class Grid {
 public:
  /// Validates d in {3,4}, N a power of two >= 8, L > 0.
  static Grid make(int dim, int points_per_axis, double length);

  int dim() const noexcept;
  int points_per_axis() const noexcept;
  double length() const noexcept;
  std::size_t size() const noexcept;

  double spacing() const noexcept { return length() / points_per_axis(); }
  double cell_volume() const noexcept;
  /// Smallest nonzero |xi| on the lattice, 2*pi/L.
  double wavenumber_unit() const noexcept;

  /// Centered integer frequency carried by axis index j.
  int frequency_index(int j) const noexcept {
    const int n = points_per_axis();
    return j < n / 2 ? j : j - n;
  }
  double coordinate(int j) const noexcept { return -0.5 * length() + j * spacing(); }

  std::array<int, 4> unravel(std::size_t flat) const noexcept;

  /// |xi|^2 per lattice point.
  std::span<const double> k_squared() const noexcept;
  /// Integer |m|^2 per lattice point; |xi|^2 = shell * (2 pi / L)^2.
  std::span<const std::int32_t> shell() const noexcept;
  int max_shell() const noexcept;
  /// 1 where every |m_j| < N/3 (two-thirds rule), else 0.
  std::span<const std::uint8_t> dealias_mask() const noexcept;

  /// Unitary forward transform (in and out must not alias).
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

  bool operator==(const Grid& other) const noexcept;

 private:
  explicit Grid(std::shared_ptr<const detail::GridData> data) : data_(std::move(data)) {}
  std::shared_ptr<const detail::GridData> data_;
};

inline Grid make_grid(int dim, int points_per_axis, double length) {
  return Grid::make(dim, points_per_axis, length);
}

class Field {
 public:
  explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}
  Field(Grid grid, std::vector<cplx> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  std::span<cplx> values() noexcept { return values_; }
  cplx operator[](std::size_t i) const noexcept { return values_[i]; }
  cplx& operator[](std::size_t i) noexcept { return values_[i]; }

  bool all_finite() const noexcept;

  Field& operator*=(cplx s) noexcept;
  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

Field operator*(cplx s, Field f);
Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);

class SpectralField {
 public:
  explicit SpectralField(Grid grid) : grid_(std::move(grid)), coeffs_(grid_.size()) {}
  SpectralField(Grid grid, std::vector<cplx> coeffs);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }
  std::span<cplx> coeffs() noexcept { return coeffs_; }

 private:
  Grid grid_;
  std::vector<cplx> coeffs_;
};

SpectralField to_spectral(const Field& f);
Field to_physical(const SpectralField& s);

/// (dx^d sum |f|^2)^(1/2); on a SpectralField the same value via Parseval.
double l2_norm(const Field& f);
double l2_norm(const SpectralField& s);
/// (dx^d sum |xi|^2 |c|^2)^(1/2). The zero mode carries no weight.
double hdot1_norm(const Field& f);
double hdot1_norm(const SpectralField& s);
/// (dx^d sum |f|^p)^(1/p); throws InvalidArgument for p < 1.
double lp_norm(const Field& f, double p);
/// dx^d sum |f|^p without the final root.
double lp_integral(const Field& f, double p);

Field laplacian(const Field& f);

/// Zeroes coefficients outside the two-thirds mask.
void apply_dealias(SpectralField& s) noexcept;

/// Spatial mean of the field; the only quantity the zero mode carries.
cplx zero_mode_mean(const SpectralField& s) noexcept;

/// Shifts by whole cells along one axis with periodic wrap.
Field translate_cells(const Field& f, int axis, int cells);

/// <f, g> = dx^d sum conj(f) g
cplx inner_product(const Field& f, const Field& g);

}  // namespace cgl
