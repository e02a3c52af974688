#include "cgllab/grid.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "cgllab/error.hpp"

namespace cgl {

namespace {

// The FFTW planner (and plan destruction) is not reentrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

namespace detail {

struct GridData {
  int dim = 0;
  int n = 0;
  double length = 0.0;
  std::size_t size = 0;
  std::vector<double> k2;
  std::vector<std::int32_t> shell;
  std::vector<std::uint8_t> mask;
  int max_shell = 0;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  GridData() = default;
  GridData(const GridData&) = delete;
  GridData& operator=(const GridData&) = delete;
  ~GridData() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

}  // namespace detail

namespace {

using GridKey = std::tuple<int, int, std::uint64_t>;

std::shared_ptr<const detail::GridData> build_grid_data(int dim, int n, double length) {
  auto data = std::make_shared<detail::GridData>();
  data->dim = dim;
  data->n = n;
  data->length = length;
  std::size_t size = 1;
  for (int a = 0; a < dim; ++a) size *= static_cast<std::size_t>(n);
  data->size = size;

  data->k2.resize(size);
  data->shell.resize(size);
  data->mask.resize(size);
  const double unit = 2.0 * std::numbers::pi / length;
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(j)] = j < n / 2 ? j : j - n;

  for (std::size_t flat = 0; flat < size; ++flat) {
    std::size_t rest = flat;
    std::int32_t s = 0;
    bool keep = true;
    for (int a = dim - 1; a >= 0; --a) {
      const int mj = m[rest % static_cast<std::size_t>(n)];
      rest /= static_cast<std::size_t>(n);
      s += mj * mj;
      keep = keep && (3 * std::abs(mj) < n);
    }
    data->shell[flat] = s;
    data->k2[flat] = unit * unit * s;
    data->mask[flat] = keep ? 1 : 0;
    data->max_shell = std::max(data->max_shell, static_cast<int>(s));
  }

  std::vector<int> dims(static_cast<std::size_t>(dim), n);
  std::lock_guard lock(planner_mutex());
  auto* a = fftw_alloc_complex(size);
  auto* b = fftw_alloc_complex(size);
  // FFTW_ESTIMATE keeps the chosen algorithm, and therefore every rounding
  // pattern, identical from run to run.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  data->fwd = fftw_plan_dft(dim, dims.data(), a, b, FFTW_FORWARD, flags);
  data->bwd = fftw_plan_dft(dim, dims.data(), a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
  if (!data->fwd || !data->bwd) throw NumericalError("FFTW failed to create a plan");
  return data;
}

}  // namespace

Grid Grid::make(int dim, int points_per_axis, double length) {
  if (dim != 3 && dim != 4) {
    throw InvalidArgument("grid dimension must be 3 or 4, got " + std::to_string(dim));
  }
  if (points_per_axis < 8 || !std::has_single_bit(static_cast<unsigned>(points_per_axis))) {
    throw InvalidArgument("points per axis must be a power of two >= 8, got " +
                          std::to_string(points_per_axis));
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    std::ostringstream os;
    os << "box length must be positive and finite, got " << length;
    throw InvalidArgument(os.str());
  }

  static std::mutex cache_mutex;
  static std::map<GridKey, std::weak_ptr<const detail::GridData>> cache;
  const GridKey key{dim, points_per_axis, std::bit_cast<std::uint64_t>(length)};
  std::lock_guard lock(cache_mutex);
  if (auto it = cache.find(key); it != cache.end()) {
    if (auto existing = it->second.lock()) return Grid(std::move(existing));
  }
  auto data = build_grid_data(dim, points_per_axis, length);
  cache[key] = data;
  return Grid(std::move(data));
}

int Grid::dim() const noexcept { return data_->dim; }
int Grid::points_per_axis() const noexcept { return data_->n; }
double Grid::length() const noexcept { return data_->length; }
std::size_t Grid::size() const noexcept { return data_->size; }
double Grid::cell_volume() const noexcept { return std::pow(spacing(), dim()); }
double Grid::wavenumber_unit() const noexcept { return 2.0 * std::numbers::pi / length(); }
std::span<const double> Grid::k_squared() const noexcept { return data_->k2; }
std::span<const std::int32_t> Grid::shell() const noexcept { return data_->shell; }
int Grid::max_shell() const noexcept { return data_->max_shell; }
std::span<const std::uint8_t> Grid::dealias_mask() const noexcept { return data_->mask; }

std::array<int, 4> Grid::unravel(std::size_t flat) const noexcept {
  std::array<int, 4> idx{0, 0, 0, 0};
  const auto n = static_cast<std::size_t>(points_per_axis());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

namespace {

void execute(fftw_plan plan, std::size_t size, std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != size || out.size() != size) {
    throw InvalidArgument("transform buffer does not match grid size");
  }
  if (in.data() == out.data()) throw InvalidArgument("transform buffers must not alias");
  // fftw_complex is layout-compatible with std::complex<double>.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(plan, src, dst);
  const double scale = 1.0 / std::sqrt(static_cast<double>(size));
  for (auto& v : out) v *= scale;
}

}  // namespace

void Grid::forward(std::span<const cplx> in, std::span<cplx> out) const {
  execute(data_->fwd, data_->size, in, out);
}

void Grid::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  execute(data_->bwd, data_->size, in, out);
}

bool Grid::operator==(const Grid& other) const noexcept {
  return data_ == other.data_ ||
         (dim() == other.dim() && points_per_axis() == other.points_per_axis() &&
          length() == other.length());
}

// ---------------------------------------------------------------------------

Field::Field(Grid grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InvalidArgument("field length does not match grid");
}

bool Field::all_finite() const noexcept {
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

Field& Field::operator*=(cplx s) noexcept {
  for (auto& v : values_) v *= s;
  return *this;
}

Field& Field::operator+=(const Field& other) {
  if (!(grid_ == other.grid_)) throw InvalidArgument("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (!(grid_ == other.grid_)) throw InvalidArgument("grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field operator*(cplx s, Field f) { return f *= s; }
Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }

SpectralField::SpectralField(Grid grid, std::vector<cplx> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.size()) throw InvalidArgument("spectral field length does not match grid");
}

SpectralField to_spectral(const Field& f) {
  SpectralField s(f.grid());
  f.grid().forward(f.values(), s.coeffs());
  return s;
}

Field to_physical(const SpectralField& s) {
  Field f(s.grid());
  s.grid().inverse(s.coeffs(), f.values());
  return f;
}

double l2_norm(const Field& f) {
  double acc = 0.0;
  for (const auto& v : f.values()) acc += std::norm(v);
  return std::sqrt(acc * f.grid().cell_volume());
}

double l2_norm(const SpectralField& s) {
  double acc = 0.0;
  for (const auto& c : s.coeffs()) acc += std::norm(c);
  return std::sqrt(acc * s.grid().cell_volume());
}

double hdot1_norm(const SpectralField& s) {
  const auto k2 = s.grid().k_squared();
  const auto c = s.coeffs();
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) acc += k2[i] * std::norm(c[i]);
  return std::sqrt(acc * s.grid().cell_volume());
}

double hdot1_norm(const Field& f) { return hdot1_norm(to_spectral(f)); }

double lp_integral(const Field& f, double p) {
  if (!(p >= 1.0)) {
    std::ostringstream os;
    os << "Lebesgue exponent must be >= 1, got " << p;
    throw InvalidArgument(os.str());
  }
  double acc = 0.0;
  const double half = 0.5 * p;
  const bool even_integer = std::floor(half) == half && half <= 8.0;
  if (even_integer) {
    const int e = static_cast<int>(half);
    for (const auto& v : f.values()) {
      const double a2 = std::norm(v);
      double term = 1.0;
      for (int k = 0; k < e; ++k) term *= a2;
      acc += term;
    }
  } else {
    for (const auto& v : f.values()) acc += std::pow(std::abs(v), p);
  }
  return acc * f.grid().cell_volume();
}

double lp_norm(const Field& f, double p) { return std::pow(lp_integral(f, p), 1.0 / p); }

Field laplacian(const Field& f) {
  SpectralField s = to_spectral(f);
  const auto k2 = f.grid().k_squared();
  auto c = s.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -k2[i];
  return to_physical(s);
}

void apply_dealias(SpectralField& s) noexcept {
  const auto mask = s.grid().dealias_mask();
  auto c = s.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!mask[i]) c[i] = 0.0;
  }
}

cplx zero_mode_mean(const SpectralField& s) noexcept {
  return s.coeffs()[0] / std::sqrt(static_cast<double>(s.grid().size()));
}

Field translate_cells(const Field& f, int axis, int cells) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("axis out of range");
  const int n = g.points_per_axis();
  const int shift = ((cells % n) + n) % n;
  std::size_t stride = 1;
  for (int a = g.dim() - 1; a > axis; --a) stride *= static_cast<std::size_t>(n);
  Field out(g);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const auto idx = g.unravel(flat);
    const int j = idx[static_cast<std::size_t>(axis)];
    const int jn = (j + shift) % n;
    const auto delta = static_cast<std::ptrdiff_t>(jn - j) * static_cast<std::ptrdiff_t>(stride);
    out[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) + delta)] = f[flat];
  }
  return out;
}

cplx inner_product(const Field& f, const Field& g) {
  if (!(f.grid() == g.grid())) throw InvalidArgument("grid mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < f.grid().size(); ++i) acc += std::conj(f[i]) * g[i];
  return acc * f.grid().cell_volume();
}

}  // namespace cgl
