#include "cgllab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cgllab/error.hpp"
#include "cgllab/ground_state.hpp"

namespace cgl {

FlowParams default_flow_params(int dim, cplx z) {
  FlowParams p;
  p.z = z;
  p.dealias = (dim == 3);
  return p;
}

void validate(const FlowParams& params) {
  if (!(params.z.real() > 0.0) || !std::isfinite(params.z.imag())) {
    throw InvalidArgument("flow coefficient must satisfy Re z > 0");
  }
}

void validate(const StepControl& c) {
  auto fail = [](const std::string& what) { throw InvalidArgument("step control: " + what); };
  if (!(c.dt_min > 0.0)) fail("dt_min must be positive");
  if (!(c.dt_min <= c.dt_init && c.dt_init <= c.dt_max)) fail("need 0 < dt_min <= dt_init <= dt_max");
  if (!(c.safety > 0.0 && c.safety <= 1.0)) fail("safety must lie in (0, 1]");
  if (!(c.tol > 0.0)) fail("tol must be positive");
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) fail("t_max must be positive and finite");
  if (!(c.blowup_h1_factor >= 10.0)) fail("blowup_h1_factor must be >= 10");
  if (!(c.dissipated_h1_fraction >= 0.0 && c.dissipated_h1_fraction < 1.0)) fail("dissipated_h1_fraction must lie in [0, 1)");
  if (!(c.dt_out > 0.0)) fail("dt_out must be positive");
  if (!(c.dt_out_growth >= 1.0)) fail("dt_out_growth must be >= 1");
  if (c.snapshot_every < 0) fail("snapshot_every must be >= 0");
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Running: return "Running";
    case Verdict::ReachedHorizon: return "ReachedHorizon";
    case Verdict::Dissipated: return "Dissipated";
    case Verdict::BlowUp: return "BlowUp";
    case Verdict::StepUnderflow: return "StepUnderflow";
  }
  return "Running";
}

Verdict verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::Running, Verdict::ReachedHorizon, Verdict::Dissipated, Verdict::BlowUp,
                 Verdict::StepUnderflow}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown verdict '" + std::string(s) + "'");
}

int verdict_code(Verdict v) noexcept { return static_cast<int>(v); }

// ---------------------------------------------------------------------------

namespace {

// phi_1, phi_2, phi_3 of x; series near the origin, closed form elsewhere.
struct Phi {
  cplx p1, p2, p3;
};

Phi phi_functions(cplx x) {
  if (std::abs(x) < 1.0) {
    // phi_k(x) = sum_n x^n / (n + k)!
    cplx p1 = 0.0, p2 = 0.0, p3 = 0.0;
    cplx xn = 1.0;
    double f1 = 1.0, f2 = 2.0, f3 = 6.0;  // (n+1)!, (n+2)!, (n+3)!
    for (int n = 0; n < 24; ++n) {
      p1 += xn / f1;
      p2 += xn / f2;
      p3 += xn / f3;
      xn *= x;
      f1 *= n + 2;
      f2 *= n + 3;
      f3 *= n + 4;
    }
    return {p1, p2, p3};
  }
  const cplx e = std::exp(x);
  const cplx p1 = (e - 1.0) / x;
  const cplx p2 = (e - 1.0 - x) / (x * x);
  const cplx p3 = (e - 1.0 - x - 0.5 * x * x) / (x * x * x);
  return {p1, p2, p3};
}

// Per-shell coefficients of one step of size h.
struct StepTable {
  double h = -1.0;
  std::vector<cplx> e, e2, q, f1, f2, f3;
};

void fill_table(StepTable& tab, double h, cplx z, const Grid& grid) {
  const auto shells = static_cast<std::size_t>(grid.max_shell()) + 1;
  const double unit2 = grid.wavenumber_unit() * grid.wavenumber_unit();
  tab.h = h;
  tab.e.resize(shells);
  tab.e2.resize(shells);
  tab.q.resize(shells);
  tab.f1.resize(shells);
  tab.f2.resize(shells);
  tab.f3.resize(shells);
  for (std::size_t s = 0; s < shells; ++s) {
    const cplx x = -z * h * unit2 * static_cast<double>(s);
    const Phi full = phi_functions(x);
    const Phi half = phi_functions(0.5 * x);
    tab.e[s] = std::exp(x);
    tab.e2[s] = std::exp(0.5 * x);
    tab.q[s] = 0.5 * h * half.p1;
    tab.f1[s] = h * (full.p1 - 3.0 * full.p2 + 4.0 * full.p3);
    tab.f2[s] = h * (full.p2 - 2.0 * full.p3);
    tab.f3[s] = h * (4.0 * full.p3 - full.p2);
  }
}

inline cplx power_nonlinearity(cplx v, int dim) noexcept {
  const double a2 = std::norm(v);
  return dim == 3 ? (a2 * a2) * v : a2 * v;
}

}  // namespace

struct ExponentialIntegrator::Impl {
  Grid grid;
  FlowParams params;
  std::vector<StepTable> tables;  // small most-recently-used cache
  std::vector<cplx> phys, tmp, nv, na, nb, nc, a, b, c;

  Impl(Grid g, FlowParams p) : grid(std::move(g)), params(p) {
    const auto n = grid.size();
    for (auto* buf : {&phys, &tmp, &nv, &na, &nb, &nc, &a, &b, &c}) buf->resize(n);
  }

  const StepTable& table(double h) {
    for (auto& t : tables) {
      if (t.h == h) return t;
    }
    if (tables.size() < 3) tables.emplace_back();
    else std::rotate(tables.begin(), tables.begin() + 1, tables.end());
    fill_table(tables.back(), h, params.z, grid);
    return tables.back();
  }

  void nonlinear(std::span<const cplx> v, std::span<cplx> out) {
    const auto n = grid.size();
    if (!params.nonlinearity_on) {
      std::fill(out.begin(), out.end(), cplx{0.0});
      return;
    }
    const int d = grid.dim();
    const auto mask = grid.dealias_mask();
    if (params.dealias) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = mask[i] ? v[i] : cplx{0.0};
      grid.inverse(tmp, phys);
    } else {
      grid.inverse(v, phys);
    }
    for (std::size_t i = 0; i < n; ++i) phys[i] = power_nonlinearity(phys[i], d);
    grid.forward(phys, out);
    const cplx z = params.z;
    if (params.dealias) {
      for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? z * out[i] : cplx{0.0};
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] *= z;
    }
  }

  void advance(std::span<const cplx> v, double h, std::span<cplx> out, std::span<const cplx> given_nv) {
    const auto n = grid.size();
    const auto shell = grid.shell();
    const StepTable& t = table(h);
    if (!params.nonlinearity_on) {
      for (std::size_t i = 0; i < n; ++i) out[i] = t.e[static_cast<std::size_t>(shell[i])] * v[i];
      return;
    }
    std::span<const cplx> nv0 = given_nv;
    if (nv0.empty()) {
      nonlinear(v, nv);
      nv0 = nv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(shell[i]);
      a[i] = t.e2[s] * v[i] + t.q[s] * nv0[i];
    }
    nonlinear(a, na);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(shell[i]);
      b[i] = t.e2[s] * v[i] + t.q[s] * na[i];
    }
    nonlinear(b, nb);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(shell[i]);
      c[i] = t.e2[s] * a[i] + t.q[s] * (2.0 * nb[i] - nv0[i]);
    }
    nonlinear(c, nc);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(shell[i]);
      out[i] = t.e[s] * v[i] + t.f1[s] * nv0[i] + 2.0 * t.f2[s] * (na[i] + nb[i]) + t.f3[s] * nc[i];
    }
  }
};

ExponentialIntegrator::ExponentialIntegrator(Grid grid, FlowParams params) {
  validate(params);
  impl_ = std::make_unique<Impl>(std::move(grid), params);
}
ExponentialIntegrator::~ExponentialIntegrator() = default;
ExponentialIntegrator::ExponentialIntegrator(ExponentialIntegrator&&) noexcept = default;
ExponentialIntegrator& ExponentialIntegrator::operator=(ExponentialIntegrator&&) noexcept = default;

const Grid& ExponentialIntegrator::grid() const noexcept { return impl_->grid; }
const FlowParams& ExponentialIntegrator::params() const noexcept { return impl_->params; }

void ExponentialIntegrator::nonlinear_term(std::span<const cplx> v, std::span<cplx> out) {
  impl_->nonlinear(v, out);
}

void ExponentialIntegrator::advance(std::span<const cplx> v, double h, std::span<cplx> out,
                                    std::span<const cplx> nv) {
  if (!(h > 0.0)) throw InvalidArgument("step size must be positive");
  impl_->advance(v, h, out, nv);
}

namespace {

bool finite(std::span<const cplx> v) noexcept {
  for (const auto& x : v) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  }
  return true;
}

}  // namespace

Field step(const Field& u, const FlowParams& params, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("step size must be positive");
  if (!u.all_finite()) throw NumericalError("step called on a non-finite field");
  ExponentialIntegrator integ(u.grid(), params);
  const SpectralField v = to_spectral(u);
  SpectralField out(u.grid());
  integ.advance(v.coeffs(), dt, out.coeffs());
  if (!finite(out.coeffs())) throw NumericalError("numerical blow-up: step produced non-finite values");
  return to_physical(out);
}

// ---------------------------------------------------------------------------

namespace {

struct Diagnostics {
  double h1, l2, crit, energy, diss, zero_mode;
};

// All sample quantities from the spectral state. Uses the integrator scratch
// through nonlinear_term, so it must not run concurrently with a step.
Diagnostics diagnose(const SpectralField& v, ExponentialIntegrator& integ) {
  const Grid& g = v.grid();
  const FlowParams& p = integ.params();
  const int d = g.dim();
  const double vol = g.cell_volume();
  const auto k2 = g.k_squared();
  const auto c = v.coeffs();

  Diagnostics out{};
  out.h1 = hdot1_norm(v);
  out.l2 = l2_norm(v);
  out.zero_mode = std::abs(zero_mode_mean(v));
  const Field u = to_physical(v);
  const double pcrit = critical_exponent(d);
  out.crit = lp_norm(u, pcrit);

  if (!p.nonlinearity_on) {
    out.energy = 0.5 * out.h1 * out.h1;
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += k2[i] * k2[i] * std::norm(c[i]);
    out.diss = p.z.real() * acc * vol;
    return out;
  }

  double potential = 0.0;
  if (p.dealias) {
    SpectralField pv = v;
    apply_dealias(pv);
    potential = lp_integral(to_physical(pv), pcrit);
  } else {
    potential = lp_integral(u, pcrit);
  }
  out.energy = 0.5 * out.h1 * out.h1 - (d - 2.0) / (2.0 * d) * potential;

  // Gradient of the flow energy is -(Delta u + P g(P u)) = -(u_t / z).
  std::vector<cplx> nl(c.size());
  integ.nonlinear_term(c, nl);
  const cplx zinv = 1.0 / p.z;
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) acc += std::norm(-k2[i] * c[i] + zinv * nl[i]);
  out.diss = p.z.real() * acc * vol;
  return out;
}

double weighted_norm_sq(std::span<const cplx> v, std::span<const double> k2) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += (1.0 + k2[i]) * std::norm(v[i]);
  return acc;
}

double weighted_diff_sq(std::span<const cplx> a, std::span<const cplx> b, std::span<const double> k2) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (1.0 + k2[i]) * std::norm(a[i] - b[i]);
  return acc;
}

class Runner {
 public:
  Runner(const FlowParams& params, const StepControl& ctrl, const RunObserver& obs, Grid grid)
      : ctrl_(ctrl), obs_(obs), integ_(std::move(grid), params) {}

  Trajectory go(RunState st) {
    const Grid& g = integ_.grid();
    const auto k2 = g.k_squared();
    const std::size_t n = g.size();
    std::vector<cplx> nv(n), full(n), half(n), fine(n), nhalf(n), nfine(n);

    record(st);
    double h = std::clamp(st.dt, ctrl_.dt_min, ctrl_.dt_max);
    integ_.nonlinear_term(st.v.coeffs(), nv);
    double d0 = dissipation_rate(st.v.coeffs(), nv);
    double h1_prev_time = st.t;
    traj_.last_reliable_time = st.t;

    while (true) {
      if (st.t >= ctrl_.t_max) {
        finish(st, Verdict::ReachedHorizon);
        break;
      }
      const double target = std::min(st.next_sample_time, ctrl_.t_max);
      const double room = target - st.t;
      const bool clipped = room <= h;
      const double h_try = clipped ? room : h;

      auto v = st.v.coeffs();
      integ_.advance(v, h_try, full, nv);
      integ_.advance(v, 0.5 * h_try, half, nv);
      integ_.advance(half, 0.5 * h_try, fine);

      if (!finite(fine) || !finite(full)) {
        if (h_try <= ctrl_.dt_min) {
          traj_.last_reliable_time = st.t;
          finish(st, Verdict::BlowUp);
          break;
        }
        ++traj_.steps_rejected;
        h = std::max(ctrl_.dt_min, 0.25 * h_try);
        continue;
      }

      const double scale = weighted_norm_sq(fine, k2);
      const double err = scale > 0.0 ? std::sqrt(weighted_diff_sq(fine, full, k2) / scale) : 0.0;
      const double factor = err > 0.0 ? ctrl_.safety * std::pow(ctrl_.tol / err, 0.2) : 4.0;

      if (err > ctrl_.tol) {
        if (h_try <= ctrl_.dt_min) {
          finish(st, Verdict::StepUnderflow);
          break;
        }
        ++traj_.steps_rejected;
        h = std::max(ctrl_.dt_min, h_try * std::clamp(factor, 0.2, 1.0));
        continue;
      }

      // Simpson's rule for the energy dissipated over the step, from the
      // midpoint state step doubling already produced. Its gap to the
      // trapezoid rule bounds the quadrature error; keep it within the budget
      // so the recorded energy balance stays closed.
      integ_.nonlinear_term(half, nhalf);
      integ_.nonlinear_term(fine, nfine);
      const double dh = dissipation_rate(half, nhalf);
      const double d1 = dissipation_rate(fine, nfine);
      const double simpson = h_try / 6.0 * (d0 + 4.0 * dh + d1);
      const double quad_err = std::abs(simpson - 0.5 * h_try * (d0 + d1));
      const double quad_budget = kQuadratureBudget * std::abs(simpson);
      double q_factor = 4.0;
      if (std::isfinite(quad_err) && quad_err > 0.0) {
        q_factor = ctrl_.safety * std::cbrt(quad_budget / quad_err);
        if (quad_err > quad_budget && h_try > ctrl_.dt_min) {
          ++traj_.steps_rejected;
          h = std::max(ctrl_.dt_min, h_try * std::clamp(q_factor, 0.2, 1.0));
          continue;
        }
      }

      ++traj_.steps_accepted;
      std::copy(fine.begin(), fine.end(), v.begin());
      std::swap(nv, nfine);
      d0 = d1;
      dissipated_ += simpson;
      st.t = clipped ? target : st.t + h_try;
      const double h_new =
          std::clamp(h_try * std::clamp(std::min(factor, q_factor), 0.2, 4.0), ctrl_.dt_min, ctrl_.dt_max);
      h = clipped ? std::max(h, h_new) : h_new;
      st.dt = h;

      const double h1 = hdot1_norm(st.v);
      if (!(h1 <= ctrl_.blowup_h1_factor * st.h1_initial) && st.h1_initial > 0.0) {
        traj_.last_reliable_time = h1_prev_time;
        finish(st, Verdict::BlowUp);
        break;
      }
      h1_prev_time = st.t;
      traj_.last_reliable_time = st.t;
      if (st.h1_initial > 0.0 && h1 < ctrl_.dissipated_h1_fraction * st.h1_initial) {
        finish(st, Verdict::Dissipated);
        break;
      }
      if (clipped && target == st.next_sample_time) {
        ++st.sample_index;
        st.next_sample_time =
            st.t + ctrl_.dt_out * std::pow(ctrl_.dt_out_growth, static_cast<double>(st.sample_index));
        record(st);
      }
    }
    return std::move(traj_);
  }

 private:
  void record(const RunState& st) {
    const Diagnostics dg = diagnose(st.v, integ_);
    traj_.times.push_back(st.t);
    traj_.h1.push_back(dg.h1);
    traj_.l2.push_back(dg.l2);
    traj_.crit.push_back(dg.crit);
    traj_.energy.push_back(dg.energy);
    traj_.diss.push_back(dg.diss);
    traj_.zero_mode.push_back(dg.zero_mode);
    traj_.dissipated.push_back(dissipated_);
    const auto k = traj_.times.size() - 1;
    const bool keep = k == 0 || (ctrl_.snapshot_every > 0 && k % static_cast<std::size_t>(ctrl_.snapshot_every) == 0);
    if (keep) traj_.snapshots.push_back({st.t, to_physical(st.v)});
    if (obs_.on_sample) obs_.on_sample(st);
  }

  // Appends a closing sample unless the current time was just recorded.
  void finish(const RunState& st, Verdict v) {
    traj_.verdict = v;
    const bool already = !traj_.times.empty() && traj_.times.back() == st.t;
    if (!already) record(st);
    if (traj_.snapshots.empty() || traj_.snapshots.back().t != st.t) {
      traj_.snapshots.push_back({st.t, to_physical(st.v)});
    }
  }

  // Re z ||Delta u + P g(P u)||^2 from coefficients and their nonlinear term.
  double dissipation_rate(std::span<const cplx> v, std::span<const cplx> nl) const {
    const auto k2 = integ_.grid().k_squared();
    const cplx zinv = 1.0 / integ_.params().z;
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += std::norm(-k2[i] * v[i] + zinv * nl[i]);
    return integ_.params().z.real() * acc * integ_.grid().cell_volume();
  }

  // Trapezoid-Simpson gap allowed per step, relative to the energy it dissipates.
  static constexpr double kQuadratureBudget = 5e-3;

  StepControl ctrl_;
  const RunObserver& obs_;
  ExponentialIntegrator integ_;
  Trajectory traj_;
  double dissipated_ = 0.0;
};

}  // namespace

Trajectory resume(const RunState& state, const FlowParams& params, const StepControl& ctrl,
                  const RunObserver& observer) {
  validate(params);
  validate(ctrl);
  if (!finite(state.v.coeffs())) throw InvalidArgument("initial state is not finite");
  Runner runner(params, ctrl, observer, state.v.grid());
  return runner.go(state);
}

Trajectory run(const Field& u0, const FlowParams& params, const StepControl& ctrl,
               const RunObserver& observer) {
  validate(ctrl);
  RunState st{to_spectral(u0)};
  st.t = 0.0;
  st.dt = ctrl.dt_init;
  st.sample_index = 0;
  st.next_sample_time = ctrl.dt_out;
  st.h1_initial = hdot1_norm(st.v);
  return resume(st, params, ctrl, observer);
}

double flow_energy(const Field& u, const FlowParams& params) {
  const int d = u.grid().dim();
  const SpectralField v = to_spectral(u);
  const double h1 = hdot1_norm(v);
  if (!params.nonlinearity_on) return 0.5 * h1 * h1;
  double potential = 0.0;
  if (params.dealias) {
    SpectralField pv = v;
    apply_dealias(pv);
    potential = lp_integral(to_physical(pv), critical_exponent(d));
  } else {
    potential = lp_integral(u, critical_exponent(d));
  }
  return 0.5 * h1 * h1 - (d - 2.0) / (2.0 * d) * potential;
}

std::vector<double> linear_heat_run(const Field& u0, double alpha, std::span<const double> times) {
  if (!(alpha > 0.0)) throw InvalidArgument("heat coefficient alpha must be positive");
  const SpectralField v = to_spectral(u0);
  const auto k2 = u0.grid().k_squared();
  const auto c = v.coeffs();
  const double vol = u0.grid().cell_volume();
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0)) throw InvalidArgument("sample times must be non-negative");
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += k2[i] * std::norm(c[i]) * std::exp(-2.0 * alpha * t * k2[i]);
    out.push_back(std::sqrt(acc * vol));
  }
  return out;
}

double dissipation_residual(const Trajectory& traj) {
  if (traj.size() < 3) throw InvalidArgument("dissipation residual needs at least 3 samples");
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    const double lhs = traj.energy[i + 1] - traj.energy[i];
    const double rhs = traj.dissipated.size() == traj.size() ? traj.dissipated[i + 1] - traj.dissipated[i]
                                                             : 0.5 * (traj.diss[i] + traj.diss[i + 1]) * dt;
    const double r = std::abs(lhs + rhs) / (std::abs(traj.energy[i]) + 1.0);
    if (std::isfinite(r)) worst = std::max(worst, r);
    else return r;
  }
  return worst;
}

LyapunovReport lyapunov_monitor(const Trajectory& traj) {
  LyapunovReport rep;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double a = traj.h1[i];
    const double b = traj.h1[i + 1];
    if (a > 0.0) {
      rep.max_uptick = std::max(rep.max_uptick, (b - a) / a);
    } else if (b > 0.0) {
      rep.max_uptick = std::numeric_limits<double>::infinity();
    }
  }
  rep.monotone = rep.max_uptick <= 1e-12;
  return rep;
}

}  // namespace cgl
