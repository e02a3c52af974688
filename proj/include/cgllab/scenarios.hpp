#pragma once
// Initial data spanning the threshold surface E = E(W), classification of runs
// into the dissipation / stationary / blow-up trichotomy, and the suites that
// sweep it.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgllab/decay.hpp"
#include "cgllab/evolution.hpp"
#include "cgllab/grid.hpp"

namespace cgl {

enum class InitialKind { ScaledW, RescaledW, Gaussian, SpectralProfile, WPlusBump };

std::string_view to_string(InitialKind k) noexcept;
InitialKind initial_kind_from_string(std::string_view s);

/// Recipe for initial data. Only the fields relevant to `kind` are read:
///   ScaledW          c * W
///   RescaledW        lambda^{-(d-2)/2} W(x / lambda)
///   Gaussian         amplitude * exp(-|x|^2 / (2 width^2))
///   SpectralProfile  Fourier coefficients proportional to |width xi|^k exp(-width^2 |xi|^2 / 2),
///                    normalized to agree with Gaussian(width, amplitude) at k = 0
///   WPlusBump        c * W + eps * exp(-|x - offset|^2 / (2 bump_width^2))
struct InitialDataSpec {
  InitialKind kind = InitialKind::ScaledW;
  double c = 1.0;
  double lambda = 1.0;
  double width = 1.0;
  double amplitude = 1.0;
  int k = 0;
  double eps = 0.0;
  double bump_width = 1.5;
  std::array<double, 4> offset{0.0, 0.0, 0.0, 0.0};

  bool operator==(const InitialDataSpec&) const = default;
};

Field build_initial_data(const Grid& grid, const InitialDataSpec& spec);

nlohmann::json to_json(const InitialDataSpec& spec);

/// Closed forms for c W: E(cW)/E(W) = (d c^2 - (d-2) c^{2d/(d-2)}) / 2 and
/// ||cW||_{H^1-dot} / ||W||_{H^1-dot} = c.
double scaled_w_energy_ratio(double c, int dim);

/// Threshold quantities of W measured on a specific grid with the energy the
/// discrete flow dissipates. Classification compares against these rather
/// than the full-space constants because the box truncates the tail of W.
struct ThresholdReference {
  double h1_W = 0.0;
  double energy_W = 0.0;
  double residual_W = 0.0;
};

ThresholdReference threshold_reference(const Grid& grid, const FlowParams& params);

enum class Label { Dissipated, StationaryPersist, BlowUp, Undecided };

std::string_view to_string(Label l) noexcept;

struct Evidence {
  double initial_h1 = 0.0;
  double final_h1 = 0.0;
  double final_time = 0.0;
  /// BlowUp only.
  std::optional<double> blowup_time;
  /// Dissipated only, when the fit window holds enough samples.
  std::optional<DecayFit> decay_fit;
  /// max_t | ||u||_{H^1-dot} / ||W||_{H^1-dot} - 1 |
  double max_h1_deviation = 0.0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  double dissipation_residual = 0.0;
  std::uint64_t steps_accepted = 0;
  std::uint64_t steps_rejected = 0;
  Verdict run_verdict = Verdict::Running;
};

struct ClassificationReport {
  std::string id;
  nlohmann::json params;
  double energy_ratio = 0.0;
  double kinetic_ratio = 0.0;
  Label verdict = Label::Undecided;
  /// Always set for Undecided; otherwise a short justification.
  std::string reason;
  Evidence evidence;
};

nlohmann::json to_json(const ClassificationReport& r);

/// Maps a finished trajectory to a trichotomy label. StationaryPersist needs the
/// H^1-dot norm within 5% of ||W|| at every sample and a final stationary
/// residual below twice the initial one; Dissipated from a horizon stop needs the
/// norm to have fallen below 1% of its start while still decreasing.
ClassificationReport classify_run(const Trajectory& traj, const ThresholdReference& refs);

struct SuiteOptions {
  int points_per_axis = 0;   // 0: dimension default
  double box_length = 0.0;   // 0: dimension default
  StepControl step = default_suite_step();
  /// Horizon for case A; W can only be followed for a finite time.
  double stationary_horizon = 10.0;
  std::uint64_t seed = 1;
  /// Worker pool size; 0 reads CGLLAB_THREADS, falling back to hardware concurrency.
  unsigned threads = 0;
  /// WPlusBump construction for cases B and C.
  double c_below = 0.95;
  double c_above = 1.05;
  double bump_width = 1.5;
  double bump_distance = 6.0;

  static StepControl default_suite_step();
};

/// N = 64, L = 60 for d = 3; N = 32, L = 40 for d = 4.
Grid default_grid(int dim);
Grid suite_grid(int dim, const SuiteOptions& opts);

unsigned worker_count(unsigned requested);

std::vector<ClassificationReport> dichotomy_suite(int dim, cplx z, const std::vector<double>& c_values,
                                                  const SuiteOptions& opts = {});

struct ThresholdPlacement {
  InitialDataSpec spec;
  double energy_ratio = 0.0;
  double kinetic_ratio = 0.0;
  int iterations = 0;
};

/// Secant (Illinois) search over the bump amplitude of c W + eps * bump for
/// flow energy within 1e-3 of the grid threshold energy. Throws NumericalError
/// after 50 evaluations, or when the kinetic ratio lands within 1e-2 of 1 or on
/// the wrong side.
ThresholdPlacement place_on_threshold(const Grid& grid, const FlowParams& params, double c, double bump_width,
                                      const std::array<double, 4>& offset, bool above);

/// Case A = W, case B below and case C above the kinetic threshold.
std::vector<ClassificationReport> trichotomy_suite(int dim, cplx z, const SuiteOptions& opts = {});

}  // namespace cgl
