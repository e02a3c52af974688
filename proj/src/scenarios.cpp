#include "cgllab/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "cgllab/error.hpp"
#include "cgllab/ground_state.hpp"

namespace cgl {

namespace {

double min_image_r2(const Grid& g, std::size_t flat, const std::array<double, 4>& x0) {
  const auto idx = g.unravel(flat);
  const double len = g.length();
  double r2 = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    double dx = g.coordinate(idx[ua]) - x0[ua];
    dx -= len * std::round(dx / len);
    r2 += dx * dx;
  }
  return r2;
}

Field gaussian(const Grid& g, double width, double amplitude, const std::array<double, 4>& x0) {
  if (!(width > 0.0)) throw InvalidArgument("Gaussian width must be positive");
  if (width < g.spacing()) {
    std::ostringstream os;
    os << "Gaussian width " << width << " is below the grid spacing " << g.spacing();
    throw ResolutionError(os.str());
  }
  Field f(g);
  const double inv = 1.0 / (2.0 * width * width);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = amplitude * std::exp(-min_image_r2(g, i, x0) * inv);
  return f;
}

Field spectral_profile(const Grid& g, int k, double width, double amplitude) {
  if (k < 0) throw InvalidArgument("spectral profile power must be non-negative");
  if (!(width > 0.0)) throw InvalidArgument("spectral profile width must be positive");
  const int n = g.points_per_axis();
  const auto k2 = g.k_squared();
  SpectralField s(g);
  auto c = s.coeffs();
  double norm0 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    const double gauss = std::exp(-0.5 * width * width * k2[i]);
    norm0 += gauss;
    bool nyquist = false;
    int parity = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const int m = g.frequency_index(idx[static_cast<std::size_t>(a)]);
      nyquist = nyquist || (2 * m == -n);
      parity += m;
    }
    // Drop the unpaired Nyquist modes so the field is real; the sign shifts the
    // center from the first lattice point to the origin.
    if (nyquist) continue;
    const double mag = k == 0 ? gauss : std::pow(width * width * k2[i], 0.5 * k) * gauss;
    c[i] = (parity % 2 == 0 ? 1.0 : -1.0) * mag;
  }
  const double scale = amplitude * std::sqrt(static_cast<double>(g.size())) / norm0;
  for (auto& x : c) x *= scale;
  Field u = to_physical(s);
  for (auto& x : u.values()) x = x.real();
  return u;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string z_tag(cplx z) { return "z" + fmt(z.real()) + (z.imag() < 0 ? "" : "+") + fmt(z.imag()) + "i"; }

void run_parallel(std::vector<std::function<void()>>& tasks, unsigned threads) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ClassificationReport run_and_classify(const std::string& id, const nlohmann::json& params, const Field& u0,
                                      const FlowParams& flow, const StepControl& step,
                                      const ThresholdReference& refs) {
  const Trajectory traj = run(u0, flow, step);
  ClassificationReport rep = classify_run(traj, refs);
  rep.id = id;
  rep.params = params;
  return rep;
}

}  // namespace

std::string_view to_string(InitialKind k) noexcept {
  switch (k) {
    case InitialKind::ScaledW: return "ScaledW";
    case InitialKind::RescaledW: return "RescaledW";
    case InitialKind::Gaussian: return "Gaussian";
    case InitialKind::SpectralProfile: return "SpectralProfile";
    case InitialKind::WPlusBump: return "WPlusBump";
  }
  return "ScaledW";
}

InitialKind initial_kind_from_string(std::string_view s) {
  for (auto k : {InitialKind::ScaledW, InitialKind::RescaledW, InitialKind::Gaussian, InitialKind::SpectralProfile,
                 InitialKind::WPlusBump}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown initial data kind '" + std::string(s) + "'");
}

Field build_initial_data(const Grid& grid, const InitialDataSpec& spec) {
  switch (spec.kind) {
    case InitialKind::ScaledW: {
      if (!(spec.c > 0.0)) throw InvalidArgument("ScaledW requires c > 0");
      Field w = make_W(grid);
      w *= spec.c;
      return w;
    }
    case InitialKind::RescaledW: {
      GroundStateParams p;
      p.lambda = spec.lambda;
      return make_W(grid, p);
    }
    case InitialKind::Gaussian:
      return gaussian(grid, spec.width, spec.amplitude, {});
    case InitialKind::SpectralProfile:
      return spectral_profile(grid, spec.k, spec.width, spec.amplitude);
    case InitialKind::WPlusBump: {
      if (!(spec.c > 0.0)) throw InvalidArgument("WPlusBump requires c > 0");
      Field w = make_W(grid);
      w *= spec.c;
      return w + gaussian(grid, spec.bump_width, spec.eps, spec.offset);
    }
  }
  throw InvalidArgument("unknown initial data kind");
}

nlohmann::json to_json(const InitialDataSpec& s) {
  nlohmann::json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case InitialKind::ScaledW: j["c"] = s.c; break;
    case InitialKind::RescaledW: j["lambda"] = s.lambda; break;
    case InitialKind::Gaussian:
      j["width"] = s.width;
      j["amplitude"] = s.amplitude;
      break;
    case InitialKind::SpectralProfile:
      j["k"] = s.k;
      j["width"] = s.width;
      j["amplitude"] = s.amplitude;
      break;
    case InitialKind::WPlusBump:
      j["c"] = s.c;
      j["eps"] = s.eps;
      j["bump_width"] = s.bump_width;
      j["offset"] = s.offset;
      break;
  }
  return j;
}

double scaled_w_energy_ratio(double c, int dim) {
  if (dim != 3 && dim != 4) throw InvalidArgument("dimension must be 3 or 4");
  return 0.5 * (dim * c * c - (dim - 2) * std::pow(c, critical_exponent(dim)));
}

ThresholdReference threshold_reference(const Grid& grid, const FlowParams& params) {
  const Field w = make_W(grid);
  return {hdot1_norm(w), flow_energy(w, params), stationary_residual(w)};
}

std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::Dissipated: return "Dissipated";
    case Label::StationaryPersist: return "StationaryPersist";
    case Label::BlowUp: return "BlowUp";
    case Label::Undecided: return "Undecided";
  }
  return "Undecided";
}

nlohmann::json to_json(const ClassificationReport& r) {
  const Evidence& e = r.evidence;
  nlohmann::json ev{{"initial_h1", e.initial_h1},
                    {"final_h1", e.final_h1},
                    {"final_time", e.final_time},
                    {"max_h1_deviation", e.max_h1_deviation},
                    {"initial_residual", e.initial_residual},
                    {"final_residual", e.final_residual},
                    {"dissipation_residual", e.dissipation_residual},
                    {"steps_accepted", e.steps_accepted},
                    {"steps_rejected", e.steps_rejected},
                    {"run_verdict", std::string(to_string(e.run_verdict))}};
  if (e.blowup_time) ev["blowup_time"] = *e.blowup_time;
  if (e.decay_fit) {
    ev["decay_fit"] = {{"gamma_hat", e.decay_fit->gamma_hat},
                       {"confidence", e.decay_fit->confidence},
                       {"r2", e.decay_fit->r2},
                       {"samples", e.decay_fit->samples},
                       {"window", {e.decay_fit->t1, e.decay_fit->t2}}};
  }
  return {{"id", r.id},
          {"params", r.params},
          {"energy_ratio", r.energy_ratio},
          {"kinetic_ratio", r.kinetic_ratio},
          {"verdict", std::string(to_string(r.verdict))},
          {"reason", r.reason},
          {"evidence", ev}};
}

ClassificationReport classify_run(const Trajectory& traj, const ThresholdReference& refs) {
  ClassificationReport rep;
  if (traj.empty()) {
    rep.reason = "run incomplete: no samples";
    return rep;
  }
  Evidence& ev = rep.evidence;
  ev.run_verdict = traj.verdict;
  ev.initial_h1 = traj.h1.front();
  ev.final_h1 = traj.h1.back();
  ev.final_time = traj.times.back();
  ev.steps_accepted = traj.steps_accepted;
  ev.steps_rejected = traj.steps_rejected;
  rep.energy_ratio = traj.energy.front() / refs.energy_W;
  rep.kinetic_ratio = ev.initial_h1 / refs.h1_W;
  for (double h : traj.h1) ev.max_h1_deviation = std::max(ev.max_h1_deviation, std::abs(h / refs.h1_W - 1.0));
  ev.dissipation_residual =
      traj.size() >= 3 ? dissipation_residual(traj) : std::numeric_limits<double>::quiet_NaN();

  auto residual_of = [](const Snapshot& s) {
    try {
      return s.u.all_finite() ? stationary_residual(s.u) : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  if (!traj.snapshots.empty()) {
    ev.initial_residual = residual_of(traj.snapshots.front());
    ev.final_residual = residual_of(traj.snapshots.back());
  }

  auto attach_fit = [&] {
    if (traj.snapshots.empty()) return;
    const auto [t1, t2] = default_fit_window(traj.snapshots.front().u.grid().length());
    try {
      ev.decay_fit = fit_decay_exponent(traj, t1, t2);
    } catch (const InvalidArgument&) {
      // Too few samples in the window (e.g. a fast exponential collapse).
    }
  };

  const double drop = ev.initial_h1 > 0.0 ? ev.final_h1 / ev.initial_h1 : 0.0;
  std::ostringstream why;
  switch (traj.verdict) {
    case Verdict::BlowUp:
      rep.verdict = Label::BlowUp;
      ev.blowup_time = traj.last_reliable_time;
      why << "H1 norm diverged; last reliable time " << traj.last_reliable_time;
      break;
    case Verdict::Dissipated:
      rep.verdict = Label::Dissipated;
      attach_fit();
      why << "H1 norm fell to " << drop << " of its initial value by t = " << ev.final_time;
      break;
    case Verdict::ReachedHorizon: {
      // Late-window trend over the last quarter of samples.
      const std::size_t n = traj.size();
      const std::size_t from = n - std::max<std::size_t>(2, n / 4);
      bool decreasing = n >= 2;
      for (std::size_t i = from + 1; i < n; ++i) decreasing = decreasing && traj.h1[i] <= traj.h1[i - 1];
      if (ev.max_h1_deviation <= 0.05 && ev.final_residual <= 2.0 * ev.initial_residual) {
        rep.verdict = Label::StationaryPersist;
        why << "H1 norm within " << ev.max_h1_deviation << " of ||W|| through t = " << ev.final_time;
      } else if (drop < 1e-2 && decreasing) {
        rep.verdict = Label::Dissipated;
        attach_fit();
        why << "H1 norm fell to " << drop << " of its initial value by t = " << ev.final_time;
      } else {
        rep.verdict = Label::Undecided;
        why << "horizon reached without trend: H1 ratio to initial " << drop << ", max deviation from ||W|| "
            << ev.max_h1_deviation << ", residual " << ev.initial_residual << " -> " << ev.final_residual;
      }
      break;
    }
    case Verdict::StepUnderflow:
      rep.verdict = Label::Undecided;
      why << "resolution loss: step size underflow at t = " << ev.final_time;
      break;
    case Verdict::Running:
      rep.verdict = Label::Undecided;
      why << "run incomplete";
      break;
  }
  rep.reason = why.str();
  return rep;
}

StepControl SuiteOptions::default_suite_step() {
  StepControl s;
  s.t_max = 1000.0;
  s.tol = 1e-7;
  s.dt_out = 0.05;
  s.dt_out_growth = 1.05;
  s.dissipated_h1_fraction = 1e-3;
  return s;
}

Grid default_grid(int dim) {
  if (dim == 3) return make_grid(3, 64, 60.0);
  if (dim == 4) return make_grid(4, 32, 40.0);
  throw InvalidArgument("dimension must be 3 or 4, got " + std::to_string(dim));
}

Grid suite_grid(int dim, const SuiteOptions& opts) {
  const Grid def = default_grid(dim);
  const int n = opts.points_per_axis > 0 ? opts.points_per_axis : def.points_per_axis();
  const double len = opts.box_length > 0.0 ? opts.box_length : def.length();
  return make_grid(dim, n, len);
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CGLLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ClassificationReport> dichotomy_suite(int dim, cplx z, const std::vector<double>& c_values,
                                                  const SuiteOptions& opts) {
  const FlowParams flow = default_flow_params(dim, z);
  validate(flow);
  validate(opts.step);
  for (double c : c_values) {
    if (!(c > 0.0)) throw InvalidArgument("dichotomy suite: scale factors must be positive");
    if (c == 1.0) throw InvalidArgument("dichotomy suite: c = 1 is the threshold, not below it");
  }
  const Grid grid = suite_grid(dim, opts);
  const ThresholdReference refs = threshold_reference(grid, flow);

  std::vector<ClassificationReport> out(c_values.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    tasks.emplace_back([&, i] {
      InitialDataSpec spec;
      spec.kind = InitialKind::ScaledW;
      spec.c = c_values[i];
      std::ostringstream id;
      id << "dichotomy-d" << dim << "-" << z_tag(z) << "-c" << std::fixed << std::setprecision(3) << spec.c;
      nlohmann::json params{{"initial_data", to_json(spec)}, {"z", {z.real(), z.imag()}}};
      out[i] = run_and_classify(id.str(), params, build_initial_data(grid, spec), flow, opts.step, refs);
    });
  }
  run_parallel(tasks, worker_count(opts.threads));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

ThresholdPlacement place_on_threshold(const Grid& grid, const FlowParams& params, double c, double bump_width,
                                      const std::array<double, 4>& offset, bool above) {
  const Field w = make_W(grid);
  const Field bump = gaussian(grid, bump_width, 1.0, offset);
  const double h1_W = hdot1_norm(w);
  const double e_W = flow_energy(w, params);

  int evals = 0;
  constexpr int kMaxEvals = 50;
  auto field_at = [&](double eps) {
    Field u = w;
    u *= c;
    for (std::size_t i = 0; i < u.values().size(); ++i) u[i] += eps * bump[i];
    return u;
  };
  auto f = [&](double eps) {
    if (++evals > kMaxEvals) {
      throw NumericalError("threshold search did not reach the energy shell within 50 evaluations");
    }
    return flow_energy(field_at(eps), params) / e_W - 1.0;
  };

  // March along the bump sign that pushes the kinetic norm to the requested
  // side until the energy shell is bracketed. On the box W need not maximize
  // the energy along the ray, so cW can start on either side of the shell.
  double a = 0.0;
  double fa = f(a);
  if (fa == 0.0) fa = -std::numeric_limits<double>::min();
  const double probe = 1e-3;
  const double rise = hdot1_norm(field_at(probe)) - hdot1_norm(field_at(-probe));
  const double sign = (rise >= 0.0) == above ? 1.0 : -1.0;
  double b = 0.05 * sign;
  double fb = f(b);
  while (fb * fa > 0.0) {
    a = b;
    fa = fb;
    b *= 2.0;
    fb = f(b);
  }

  // Illinois false position; aim well inside the 1e-3 shell.
  constexpr double kAim = 1e-4;
  double eps = b;
  double fe = fb;
  int side = 0;
  while (std::abs(fe) > kAim) {
    eps = (a * fb - b * fa) / (fb - fa);
    fe = f(eps);
    if (fe * fb > 0.0) {
      b = eps;
      fb = fe;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = eps;
      fa = fe;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }

  ThresholdPlacement out;
  out.spec.kind = InitialKind::WPlusBump;
  out.spec.c = c;
  out.spec.eps = eps;
  out.spec.bump_width = bump_width;
  out.spec.offset = offset;
  out.energy_ratio = fe + 1.0;
  out.kinetic_ratio = hdot1_norm(field_at(eps)) / h1_W;
  out.iterations = evals;
  const bool ok = above ? out.kinetic_ratio >= 1.0 + 1e-2 : out.kinetic_ratio <= 1.0 - 1e-2;
  if (!ok) {
    std::ostringstream os;
    os << "threshold search: kinetic ratio " << out.kinetic_ratio << " is not " << (above ? "above" : "below")
       << " 1 by 1e-2 (c = " << c << ")";
    throw NumericalError(os.str());
  }
  return out;
}

std::vector<ClassificationReport> trichotomy_suite(int dim, cplx z, const SuiteOptions& opts) {
  const FlowParams flow = default_flow_params(dim, z);
  validate(flow);
  validate(opts.step);
  const Grid grid = suite_grid(dim, opts);
  const ThresholdReference refs = threshold_reference(grid, flow);

  std::mt19937_64 rng(opts.seed);
  auto random_offset = [&] {
    std::normal_distribution<double> normal;
    std::array<double, 4> v{};
    double norm = 0.0;
    for (int a = 0; a < dim; ++a) {
      v[static_cast<std::size_t>(a)] = normal(rng);
      norm += v[static_cast<std::size_t>(a)] * v[static_cast<std::size_t>(a)];
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x *= opts.bump_distance / norm;
    return v;
  };

  const auto below = place_on_threshold(grid, flow, opts.c_below, opts.bump_width, random_offset(), false);
  const auto above = place_on_threshold(grid, flow, opts.c_above, opts.bump_width, random_offset(), true);

  InitialDataSpec a_spec;
  a_spec.kind = InitialKind::ScaledW;
  a_spec.c = 1.0;
  StepControl a_step = opts.step;
  a_step.t_max = opts.stationary_horizon;

  struct Case {
    std::string name;
    InitialDataSpec spec;
    StepControl step;
    int iterations;
  };
  const std::vector<Case> cases{{"A", a_spec, a_step, 0},
                                {"B", below.spec, opts.step, below.iterations},
                                {"C", above.spec, opts.step, above.iterations}};

  std::vector<ClassificationReport> out(cases.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    tasks.emplace_back([&, i] {
      const Case& cs = cases[i];
      const std::string id = "trichotomy-d" + std::to_string(dim) + "-" + z_tag(z) + "-case" + cs.name;
      nlohmann::json params{{"case", cs.name},
                            {"initial_data", to_json(cs.spec)},
                            {"z", {z.real(), z.imag()}},
                            {"search_evaluations", cs.iterations},
                            {"seed", opts.seed},
                            {"t_max", cs.step.t_max}};
      out[i] = run_and_classify(id, params, build_initial_data(grid, cs.spec), flow, cs.step, refs);
    });
  }
  run_parallel(tasks, worker_count(opts.threads));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return out;
}

}  // namespace cgl
