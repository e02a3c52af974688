#include "cgllab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cgllab/error.hpp"

namespace cgl {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

// Walks one JSON object, rejecting keys it was not told about.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw ConfigError(join(path_, k), "unknown key");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  const json& require(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(path(key), "required key is missing");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return number(key);
  }
  double number(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "must be finite");
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  Node child(const std::string& key) const { return Node(j_.at(key), path(key)); }

 private:
  const json& j_;
  std::string path_;
};

Mode mode_from_string(const std::string& s) {
  for (auto m : {Mode::Nonlinear, Mode::LinearHeat, Mode::SuiteDichotomy, Mode::SuiteTrichotomy, Mode::AnalyzeDecay}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("mode", "unknown mode '" + s +
                                "' (expected nonlinear, linear_heat, suite:dichotomy, suite:trichotomy or analyze:decay)");
}

bool is_suite(Mode m) { return m == Mode::SuiteDichotomy || m == Mode::SuiteTrichotomy; }

std::array<double, 4> parse_offset(const Node& n, const std::string& key, int dim) {
  std::array<double, 4> out{};
  if (!n.has(key)) return out;
  const json& v = n.require(key);
  if (!v.is_array()) throw ConfigError(n.path(key), "expected an array of coordinates");
  if (v.size() != static_cast<std::size_t>(dim) && v.size() != 4) {
    throw ConfigError(n.path(key), "expected " + std::to_string(dim) + " coordinates");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(n.path(key) + "[" + std::to_string(i) + "]", "expected a number");
    out[i] = v[i].get<double>();
  }
  return out;
}

InitialDataSpec parse_initial(const Node& n, int dim) {
  InitialDataSpec s;
  const json& kind = n.require("kind");
  if (!kind.is_string()) throw ConfigError(n.path("kind"), "expected a string");
  try {
    s.kind = initial_kind_from_string(kind.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError(n.path("kind"), e.what());
  }
  auto positive = [&](const std::string& key, double fallback) {
    const double x = n.number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(n.path(key), "must be positive");
    return x;
  };
  switch (s.kind) {
    case InitialKind::ScaledW:
      n.allow_only({"kind", "c"});
      s.c = positive("c", 1.0);
      break;
    case InitialKind::RescaledW:
      n.allow_only({"kind", "lambda"});
      s.lambda = positive("lambda", 1.0);
      break;
    case InitialKind::Gaussian:
      n.allow_only({"kind", "width", "amplitude"});
      s.width = positive("width", 1.0);
      s.amplitude = n.number("amplitude", 1.0);
      break;
    case InitialKind::SpectralProfile: {
      n.allow_only({"kind", "k", "width", "amplitude"});
      const auto k = n.integer("k", 0);
      if (k < 0 || k > 8) throw ConfigError(n.path("k"), "must lie in [0, 8]");
      s.k = static_cast<int>(k);
      s.width = positive("width", 1.0);
      s.amplitude = n.number("amplitude", 1.0);
      break;
    }
    case InitialKind::WPlusBump:
      n.allow_only({"kind", "c", "eps", "bump_width", "offset"});
      s.c = positive("c", 1.0);
      s.eps = n.number("eps", 0.0);
      s.bump_width = positive("bump_width", 1.5);
      s.offset = parse_offset(n, "offset", dim);
      break;
  }
  return s;
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Nonlinear: return "nonlinear";
    case Mode::LinearHeat: return "linear_heat";
    case Mode::SuiteDichotomy: return "suite:dichotomy";
    case Mode::SuiteTrichotomy: return "suite:trichotomy";
    case Mode::AnalyzeDecay: return "analyze:decay";
  }
  return "nonlinear";
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  const Node root(doc, "");
  root.allow_only({"dimension", "z_re", "z_im", "grid", "initial_data", "nonlinearity", "dealias", "step", "output",
                   "seed", "mode", "suite", "decay"});

  RunConfig cfg;
  cfg.mode = mode_from_string(root.string("mode", "nonlinear"));

  if (!root.require("dimension").is_number_integer()) throw ConfigError("dimension", "expected an integer");
  const auto dim = root.integer("dimension", 0);
  if (dim != 3 && dim != 4) throw ConfigError("dimension", "must be 3 or 4");
  cfg.dimension = static_cast<int>(dim);

  const double z_re = root.number("z_re");
  if (!(z_re > 0.0)) throw ConfigError("z_re", "violates Re z > 0");
  cfg.flow = default_flow_params(cfg.dimension, cplx{z_re, root.number("z_im", 0.0)});

  const Grid def = default_grid(cfg.dimension);
  cfg.points_per_axis = def.points_per_axis();
  cfg.box_length = def.length();
  if (root.has("grid")) {
    const Node g = root.child("grid");
    g.allow_only({"N", "L"});
    const auto n = g.integer("N", cfg.points_per_axis);
    if (n < 8 || n > 4096 || (n & (n - 1)) != 0) throw ConfigError("grid.N", "must be a power of two >= 8");
    cfg.points_per_axis = static_cast<int>(n);
    cfg.box_length = g.number("L", cfg.box_length);
    if (!(cfg.box_length > 0.0)) throw ConfigError("grid.L", "must be positive");
  }

  if (is_suite(cfg.mode)) {
    if (root.has("initial_data")) cfg.initial_data = parse_initial(root.child("initial_data"), cfg.dimension);
  } else {
    root.require("initial_data");
    cfg.initial_data = parse_initial(root.child("initial_data"), cfg.dimension);
  }

  const bool linear = cfg.mode == Mode::LinearHeat;
  cfg.flow.nonlinearity_on = root.boolean("nonlinearity", !linear);
  if (linear && cfg.flow.nonlinearity_on) throw ConfigError("nonlinearity", "linear_heat mode requires false");
  cfg.flow.dealias = root.boolean("dealias", cfg.flow.dealias);

  cfg.step = is_suite(cfg.mode) ? SuiteOptions::default_suite_step() : StepControl{};
  if (root.has("step")) {
    const Node s = root.child("step");
    s.allow_only({"dt_init", "dt_min", "dt_max", "safety", "tol", "t_max", "blowup_h1_factor",
                  "dissipated_h1_fraction"});
    cfg.step.dt_init = s.number("dt_init", cfg.step.dt_init);
    cfg.step.dt_min = s.number("dt_min", cfg.step.dt_min);
    cfg.step.dt_max = s.number("dt_max", cfg.step.dt_max);
    cfg.step.safety = s.number("safety", cfg.step.safety);
    cfg.step.tol = s.number("tol", cfg.step.tol);
    cfg.step.t_max = s.number("t_max", cfg.step.t_max);
    cfg.step.blowup_h1_factor = s.number("blowup_h1_factor", cfg.step.blowup_h1_factor);
    cfg.step.dissipated_h1_fraction = s.number("dissipated_h1_fraction", cfg.step.dissipated_h1_fraction);
  }
  if (root.has("output")) {
    const Node o = root.child("output");
    o.allow_only({"directory", "dt_out", "dt_out_growth", "snapshot_every", "checkpoint_every"});
    cfg.output.directory = o.string("directory", cfg.output.directory);
    if (cfg.output.directory.empty()) throw ConfigError("output.directory", "must not be empty");
    cfg.step.dt_out = o.number("dt_out", cfg.step.dt_out);
    cfg.step.dt_out_growth = o.number("dt_out_growth", cfg.step.dt_out_growth);
    const auto snap = o.integer("snapshot_every", cfg.step.snapshot_every);
    if (snap < 0 || snap > 1'000'000) throw ConfigError("output.snapshot_every", "must lie in [0, 1000000]");
    cfg.step.snapshot_every = static_cast<int>(snap);
    const auto ck = o.integer("checkpoint_every", cfg.output.checkpoint_every);
    if (ck < 0 || ck > 1'000'000) throw ConfigError("output.checkpoint_every", "must lie in [0, 1000000]");
    cfg.output.checkpoint_every = static_cast<int>(ck);
  }
  try {
    validate(cfg.step);
  } catch (const InvalidArgument& e) {
    throw ConfigError("step", e.what());
  }

  const auto seed = root.integer("seed", 1);
  if (seed < 0) throw ConfigError("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (root.has("suite")) {
    const Node s = root.child("suite");
    s.allow_only({"c_values", "stationary_horizon", "threads", "c_below", "c_above", "bump_width", "bump_distance"});
    if (s.has("c_values")) {
      const json& v = s.require("c_values");
      if (!v.is_array() || v.empty()) throw ConfigError("suite.c_values", "expected a non-empty array");
      cfg.suite.c_values.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = "suite.c_values[" + std::to_string(i) + "]";
        if (!v[i].is_number()) throw ConfigError(p, "expected a number");
        const double c = v[i].get<double>();
        if (!(c > 0.0)) throw ConfigError(p, "must be positive");
        if (c == 1.0) throw ConfigError(p, "c = 1 is the threshold itself; the dichotomy needs c != 1");
        cfg.suite.c_values.push_back(c);
      }
    }
    cfg.suite.stationary_horizon = s.number("stationary_horizon", cfg.suite.stationary_horizon);
    if (!(cfg.suite.stationary_horizon > 0.0)) throw ConfigError("suite.stationary_horizon", "must be positive");
    const auto th = s.integer("threads", 0);
    if (th < 0 || th > 1024) throw ConfigError("suite.threads", "must lie in [0, 1024]");
    cfg.suite.threads = static_cast<unsigned>(th);
    cfg.suite.c_below = s.number("c_below", cfg.suite.c_below);
    if (!(cfg.suite.c_below > 0.0 && cfg.suite.c_below < 1.0)) throw ConfigError("suite.c_below", "must lie in (0, 1)");
    cfg.suite.c_above = s.number("c_above", cfg.suite.c_above);
    if (!(cfg.suite.c_above > 1.0)) throw ConfigError("suite.c_above", "must exceed 1");
    cfg.suite.bump_width = s.number("bump_width", cfg.suite.bump_width);
    if (!(cfg.suite.bump_width > 0.0)) throw ConfigError("suite.bump_width", "must be positive");
    cfg.suite.bump_distance = s.number("bump_distance", cfg.suite.bump_distance);
    if (!(cfg.suite.bump_distance >= 0.0)) throw ConfigError("suite.bump_distance", "must be non-negative");
  }

  if (root.has("decay")) {
    const Node d = root.child("decay");
    d.allow_only({"rho_min", "rho_max", "t_fit"});
    cfg.decay.rho_min = d.number("rho_min", 0.0);
    cfg.decay.rho_max = d.number("rho_max", 0.0);
    if (cfg.decay.rho_min < 0.0) throw ConfigError("decay.rho_min", "must be non-negative");
    if (cfg.decay.rho_max != 0.0 && !(cfg.decay.rho_max > cfg.decay.rho_min)) {
      throw ConfigError("decay.rho_max", "must exceed decay.rho_min");
    }
    if (d.has("t_fit")) {
      const json& v = d.require("t_fit");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError("decay.t_fit", "expected [t1, t2]");
      }
      cfg.decay.t_fit = {v[0].get<double>(), v[1].get<double>()};
      // [0, 0] is the normalized spelling of "use the default window".
      const bool unset = cfg.decay.t_fit[0] == 0.0 && cfg.decay.t_fit[1] == 0.0;
      if (!unset && !(cfg.decay.t_fit[0] >= 0.0 && cfg.decay.t_fit[1] > cfg.decay.t_fit[0])) {
        throw ConfigError("decay.t_fit", "need 0 <= t1 < t2");
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

json to_json(const RunConfig& cfg) {
  json j{{"dimension", cfg.dimension},
         {"z_re", cfg.flow.z.real()},
         {"z_im", cfg.flow.z.imag()},
         {"grid", {{"N", cfg.points_per_axis}, {"L", cfg.box_length}}},
         {"nonlinearity", cfg.flow.nonlinearity_on},
         {"dealias", cfg.flow.dealias},
         {"step",
          {{"dt_init", cfg.step.dt_init},
           {"dt_min", cfg.step.dt_min},
           {"dt_max", cfg.step.dt_max},
           {"safety", cfg.step.safety},
           {"tol", cfg.step.tol},
           {"t_max", cfg.step.t_max},
           {"blowup_h1_factor", cfg.step.blowup_h1_factor},
           {"dissipated_h1_fraction", cfg.step.dissipated_h1_fraction}}},
         {"output",
          {{"directory", cfg.output.directory},
           {"dt_out", cfg.step.dt_out},
           {"dt_out_growth", cfg.step.dt_out_growth},
           {"snapshot_every", cfg.step.snapshot_every},
           {"checkpoint_every", cfg.output.checkpoint_every}}},
         {"seed", cfg.seed},
         {"mode", std::string(to_string(cfg.mode))},
         {"suite",
          {{"c_values", cfg.suite.c_values},
           {"stationary_horizon", cfg.suite.stationary_horizon},
           {"threads", cfg.suite.threads},
           {"c_below", cfg.suite.c_below},
           {"c_above", cfg.suite.c_above},
           {"bump_width", cfg.suite.bump_width},
           {"bump_distance", cfg.suite.bump_distance}}},
         {"decay", {{"rho_min", cfg.decay.rho_min}, {"rho_max", cfg.decay.rho_max}, {"t_fit", cfg.decay.t_fit}}}};
  json init = to_json(cfg.initial_data);
  if (cfg.initial_data.kind == InitialKind::WPlusBump) {
    init["offset"] = std::vector<double>(cfg.initial_data.offset.begin(),
                                         cfg.initial_data.offset.begin() + cfg.dimension);
  }
  j["initial_data"] = init;
  return j;
}

Grid make_grid(const RunConfig& cfg) { return make_grid(cfg.dimension, cfg.points_per_axis, cfg.box_length); }

SuiteOptions suite_options(const RunConfig& cfg) {
  SuiteOptions o;
  o.points_per_axis = cfg.points_per_axis;
  o.box_length = cfg.box_length;
  o.step = cfg.step;
  o.stationary_horizon = cfg.suite.stationary_horizon;
  o.seed = cfg.seed;
  o.threads = cfg.suite.threads;
  o.c_below = cfg.suite.c_below;
  o.c_above = cfg.suite.c_above;
  o.bump_width = cfg.suite.bump_width;
  o.bump_distance = cfg.suite.bump_distance;
  return o;
}

}  // namespace cgl
