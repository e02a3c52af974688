#pragma once
// Declarative run configuration: a strict JSON schema with documented defaults.
// Every physical precondition is checked at parse time and reported with the
// key path that violates it.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cgllab/evolution.hpp"
#include "cgllab/scenarios.hpp"

namespace cgl {

enum class Mode { Nonlinear, LinearHeat, SuiteDichotomy, SuiteTrichotomy, AnalyzeDecay };

std::string_view to_string(Mode m) noexcept;

struct OutputConfig {
  std::string directory = "out";
  /// Write a resumable checkpoint every this many samples (0: never).
  int checkpoint_every = 0;

  bool operator==(const OutputConfig&) const = default;
};

struct SuiteConfig {
  std::vector<double> c_values{0.5, 0.8, 1.1, 1.2};
  double stationary_horizon = 10.0;
  unsigned threads = 0;
  double c_below = 0.95;
  double c_above = 1.05;
  double bump_width = 1.5;
  double bump_distance = 6.0;

  bool operator==(const SuiteConfig&) const = default;
};

struct DecayConfig {
  /// Regression window for r*; 0 selects [1, 8] lattice units.
  double rho_min = 0.0;
  double rho_max = 0.0;
  /// Rate-fit window; {0, 0} selects [10, min(100, L^2/40)].
  std::array<double, 2> t_fit{0.0, 0.0};

  bool operator==(const DecayConfig&) const = default;
};

struct RunConfig {
  int dimension = 3;
  int points_per_axis = 64;
  double box_length = 60.0;
  InitialDataSpec initial_data;
  /// Carries z, the nonlinearity switch and dealiasing.
  FlowParams flow;
  StepControl step;
  OutputConfig output;
  std::uint64_t seed = 1;
  Mode mode = Mode::Nonlinear;
  SuiteConfig suite;
  DecayConfig decay;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError with the offending key path.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Normalized form with every default filled in; parse_config of its dump
/// reproduces the same RunConfig.
nlohmann::json to_json(const RunConfig& cfg);

Grid make_grid(const RunConfig& cfg);
SuiteOptions suite_options(const RunConfig& cfg);

}  // namespace cgl
