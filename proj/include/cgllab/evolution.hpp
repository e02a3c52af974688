#pragma once
// Time integration of u_t = z Delta u + z |u|^{4/(d-2)} u on the periodic box.
//
// The integrator is the fourth-order exponential time differencing scheme of
// Cox and Matthews: the diffusion multiplier exp(-z h |xi|^2) is applied
// exactly in frequency space, the power nonlinearity is evaluated pointwise.
// Step size is controlled by step doubling.

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cgllab/grid.hpp"

namespace cgl {

struct FlowParams {
  cplx z{1.0, 0.0};
  bool nonlinearity_on = true;
  /// Two-thirds truncation before and after forming the nonlinearity.
  bool dealias = true;

  bool operator==(const FlowParams&) const = default;
};

/// Defaults for a dimension: dealiasing on for the quintic d = 3 case only.
FlowParams default_flow_params(int dim, cplx z = 1.0);
void validate(const FlowParams& params);

struct StepControl {
  double dt_init = 1e-3;
  double dt_min = 1e-14;
  double dt_max = 10.0;
  double safety = 0.9;
  double tol = 1e-8;
  double t_max = 10.0;
  double blowup_h1_factor = 1e3;
  /// Stop as Dissipated once the H^1-dot norm falls below this fraction of its start.
  double dissipated_h1_fraction = 1e-6;
  /// First sampling interval; interval k has length dt_out * dt_out_growth^k.
  double dt_out = 0.1;
  double dt_out_growth = 1.0;
  /// Keep every n-th sample as a snapshot (0: first and last only).
  int snapshot_every = 0;

  bool operator==(const StepControl&) const = default;
};

void validate(const StepControl& ctrl);

enum class Verdict { Running, ReachedHorizon, Dissipated, BlowUp, StepUnderflow };

std::string_view to_string(Verdict v) noexcept;
Verdict verdict_from_string(std::string_view s);
/// Integer code used in the trajectory CSV (Running = 0, ...).
int verdict_code(Verdict v) noexcept;

struct Snapshot {
  double t;
  Field u;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> h1;
  std::vector<double> l2;
  std::vector<double> crit;
  std::vector<double> energy;
  /// Energy dissipation rate Re z ||Delta u + N(u)||^2 = (Re z / |z|^2) ||u_t||^2.
  std::vector<double> diss;
  std::vector<double> zero_mode;
  /// Energy dissipated since the first sample: Simpson's rule over every
  /// accepted step, so it resolves the rate between samples.
  std::vector<double> dissipated;
  Verdict verdict = Verdict::Running;
  /// Last time at which every recorded quantity was trustworthy.
  double last_reliable_time = 0.0;
  std::vector<Snapshot> snapshots;
  std::uint64_t steps_accepted = 0;
  std::uint64_t steps_rejected = 0;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
};

/// Everything needed to continue a run bit-for-bit.
struct RunState {
  SpectralField v;
  double t = 0.0;
  double dt = 0.0;
  std::uint64_t sample_index = 0;
  double next_sample_time = 0.0;
  double h1_initial = 0.0;
};

struct RunObserver {
  /// Called after every recorded sample (including the first).
  std::function<void(const RunState&)> on_sample;
};

/// Fourth-order exponential integrator acting on unitary spectral coefficients.
/// Holds scratch memory: use one instance per thread.
class ExponentialIntegrator {
 public:
  ExponentialIntegrator(Grid grid, FlowParams params);
  ~ExponentialIntegrator();
  ExponentialIntegrator(ExponentialIntegrator&&) noexcept;
  ExponentialIntegrator& operator=(ExponentialIntegrator&&) noexcept;

  const Grid& grid() const noexcept;
  const FlowParams& params() const noexcept;

  /// z P F[ g(F^{-1} P v) ] with g(u) = |u|^{4/(d-2)} u; zero when the
  /// nonlinearity is off.
  void nonlinear_term(std::span<const cplx> v, std::span<cplx> out);

  /// One step of size h from v into out. `nv`, if given, must hold
  /// nonlinear_term(v).
  void advance(std::span<const cplx> v, double h, std::span<cplx> out,
               std::span<const cplx> nv = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single step in physical space. Throws NumericalError on a non-finite result.
Field step(const Field& u, const FlowParams& params, double dt);

/// Energy functional the (possibly dealiased) discrete flow dissipates; with the
/// nonlinearity off it is 1/2 ||u||^2_{H^1-dot}.
double flow_energy(const Field& u, const FlowParams& params);

Trajectory run(const Field& u0, const FlowParams& params, const StepControl& ctrl,
               const RunObserver& observer = {});

/// Continues from a saved state; the first sample recorded is the state itself.
Trajectory resume(const RunState& state, const FlowParams& params, const StepControl& ctrl,
                  const RunObserver& observer = {});

/// ||exp(t alpha Delta) u0||_{H^1-dot} at each time, from the exact multiplier.
std::vector<double> linear_heat_run(const Field& u0, double alpha, std::span<const double> times);

/// Max over sample intervals of |dE + dissipated energy| / (|E| + 1); falls back
/// to the trapezoid rule on `diss` when `dissipated` is absent.
double dissipation_residual(const Trajectory& traj);

struct LyapunovReport {
  bool monotone = true;
  /// Largest relative increase of the H^1-dot norm between consecutive samples.
  double max_uptick = 0.0;
};

/// Increases below 1e-12 relative count as round-off and keep `monotone` set.
LyapunovReport lyapunov_monitor(const Trajectory& traj);

}  // namespace cgl
