#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "cgllab/grid.hpp"

namespace cgl::test {

inline Field random_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Field f(g);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  return f;
}

/// Sum of a few random Gaussians: smooth on the grid.
inline Field random_smooth_field(const Grid& g, std::uint64_t seed, int bumps = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.2 * g.length(), 0.2 * g.length());
  std::uniform_real_distribution<double> width(2.0 * g.spacing(), 4.0 * g.spacing());
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  Field f(g);
  for (int b = 0; b < bumps; ++b) {
    double c[4] = {pos(rng), pos(rng), pos(rng), pos(rng)};
    const double w = width(rng);
    const double a = amp(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto idx = g.unravel(i);
      double r2 = 0.0;
      for (int ax = 0; ax < g.dim(); ++ax) {
        const double dx = g.coordinate(idx[static_cast<std::size_t>(ax)]) - c[ax];
        r2 += dx * dx;
      }
      f[i] += a * std::exp(-r2 / (2.0 * w * w));
    }
  }
  return f;
}

/// exp(i 2 pi m x_axis / L)
inline Field plane_wave(const Grid& g, int axis, int m) {
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(g.unravel(i)[static_cast<std::size_t>(axis)]);
    f[i] = std::polar(1.0, 2.0 * M_PI * m * x / g.length());
  }
  return f;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// Fresh scratch directory under the build tree's temp location.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cgllab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace cgl::test
