#include "cgllab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "cgllab/artifacts.hpp"
#include "cgllab/checkpoint.hpp"
#include "cgllab/config.hpp"
#include "cgllab/decay.hpp"
#include "cgllab/error.hpp"
#include "cgllab/ground_state.hpp"
#include "cgllab/scenarios.hpp"

namespace cgl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Saves a resumable checkpoint every `every` samples through the run's writer.
RunObserver checkpoint_observer(ArtifactWriter& writer, const RunConfig& cfg, int every) {
  RunObserver obs;
  if (every <= 0) return obs;
  auto count = std::make_shared<std::uint64_t>(0);
  obs.on_sample = [&writer, cfg, every, count](const RunState& st) {
    if ((*count)++ % static_cast<std::uint64_t>(every) != 0 || *count == 1) return;
    Checkpoint ck{st, cfg.flow, cfg.step, to_json(cfg)};
    save_checkpoint(writer.directory() / "checkpoint.ckpt", ck);
    writer.record("checkpoint.ckpt", "checkpoint");
    writer.record("checkpoint.ckpt.json", "checkpoint_sidecar");
  };
  return obs;
}

std::optional<ClassificationReport> try_classify(const Trajectory& traj, const Grid& grid, const FlowParams& flow) {
  if (!flow.nonlinearity_on) return std::nullopt;
  try {
    return classify_run(traj, threshold_reference(grid, flow));
  } catch (const ResolutionError&) {
    return std::nullopt;  // grid too coarse for W; no threshold to compare with
  }
}

int finish_run(ArtifactWriter& writer, const Trajectory& traj, const FlowParams& flow, const StepControl& step,
               const Grid& grid, std::ostream& out) {
  writer.write_trajectory(traj, flow, step);
  if (auto rep = try_classify(traj, grid, flow)) {
    rep->id = "run";
    writer.write_json("classification.json", to_json(*rep), "report");
  }
  writer.set_verdict(std::string(to_string(traj.verdict)));
  writer.finalize();
  out << "verdict " << to_string(traj.verdict) << " at t = " << traj.times.back() << " (" << traj.size()
      << " samples) -> " << writer.directory().string() << '\n';
  return traj.verdict == Verdict::StepUnderflow ? kExitNumerical : kExitOk;
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  const Grid grid = make_grid(cfg);
  const Field u0 = build_initial_data(grid, cfg.initial_data);
  ArtifactWriter writer(cfg.output.directory, to_json(cfg));
  writer.set_reference_constants(to_json(reference_constants(cfg.dimension)));
  const Trajectory traj = run(u0, cfg.flow, cfg.step, checkpoint_observer(writer, cfg, cfg.output.checkpoint_every));
  return finish_run(writer, traj, cfg.flow, cfg.step, grid, out);
}

int cmd_suite(const RunConfig& cfg, std::ostream& out) {
  const SuiteOptions opts = suite_options(cfg);
  std::vector<ClassificationReport> reports;
  if (cfg.mode == Mode::SuiteDichotomy) {
    reports = dichotomy_suite(cfg.dimension, cfg.flow.z, cfg.suite.c_values, opts);
  } else if (cfg.mode == Mode::SuiteTrichotomy) {
    reports = trichotomy_suite(cfg.dimension, cfg.flow.z, opts);
  } else {
    throw ConfigError("mode", "the suite command needs mode suite:dichotomy or suite:trichotomy");
  }
  ArtifactWriter writer(cfg.output.directory, to_json(cfg));
  writer.set_reference_constants(to_json(reference_constants(cfg.dimension)));
  std::vector<json> lines;
  for (const auto& r : reports) lines.push_back(to_json(r));
  writer.write_jsonl("reports.jsonl", lines, "suite_reports");
  writer.write_text("summary.csv", suite_summary_csv(reports), "suite_summary");
  writer.finalize();
  for (const auto& r : reports) out << r.id << ' ' << to_string(r.verdict) << " : " << r.reason << '\n';
  return kExitOk;
}

int cmd_analyze_decay(RunConfig cfg, std::ostream& out) {
  const Grid grid = make_grid(cfg);
  const Field u0 = build_initial_data(grid, cfg.initial_data);
  const double unit = grid.wavenumber_unit();
  const double rho_min = cfg.decay.rho_min > 0.0 ? cfg.decay.rho_min : unit;
  const double rho_max = cfg.decay.rho_max > 0.0 ? cfg.decay.rho_max : 8.0 * unit;
  const auto [t1, t2] =
      cfg.decay.t_fit[1] > 0.0 ? std::pair{cfg.decay.t_fit[0], cfg.decay.t_fit[1]} : default_fit_window(grid.length());

  const DecayCharacterEstimate est = decay_character(u0, rho_min, rho_max);
  json report{{"r_star", est.r_star},
              {"boundary", est.boundary == DecayBoundary::Interior       ? "interior"
                           : est.boundary == DecayBoundary::PlusInfinity ? "+inf"
                                                                         : "-d/2"},
              {"fit_window", {rho_min, rho_max}},
              {"slope", est.slope},
              {"fit_r2", est.fit_r2},
              {"P_r", est.P_r},
              {"shells", est.points},
              {"t_fit", {t1, t2}}};
  if (std::isinf(est.r_star) && est.r_star > 0.0) {
    report["gamma_predicted"] = 0.5;
    report["regime"] = "Saturated";
  } else if (est.r_star > -2.0) {
    const RatePrediction pred = predicted_gamma(est.r_star);
    report["gamma_predicted"] = pred.gamma;
    report["regime"] = pred.regime == RateRegime::SlowSpectral ? "SlowSpectral" : "Saturated";
  } else {
    report["gamma_predicted"] = nullptr;
    report["regime"] = "outside theorem hypothesis r* > -2";
  }

  cfg.step.t_max = std::max(cfg.step.t_max, t2);
  ArtifactWriter writer(cfg.output.directory, to_json(cfg));
  writer.set_reference_constants(to_json(reference_constants(cfg.dimension)));
  const Trajectory traj = run(u0, cfg.flow, cfg.step);
  try {
    const DecayFit fit = fit_decay_exponent(traj, t1, t2);
    report["gamma_hat"] = fit.gamma_hat;
    report["gamma_confidence"] = fit.confidence;
    report["gamma_fit_r2"] = fit.r2;
    report["gamma_fit_samples"] = fit.samples;
  } catch (const InvalidArgument& e) {
    report["gamma_hat"] = nullptr;
    report["gamma_fit_error"] = e.what();
  }
  report["run_verdict"] = std::string(to_string(traj.verdict));
  writer.write_json("decay_report.json", report, "decay_report");
  out << report.dump(2) << '\n';
  return finish_run(writer, traj, cfg.flow, cfg.step, grid, out);
}

int cmd_resume(const std::string& path, std::optional<double> t_max, std::optional<std::string> out_dir,
               std::ostream& out) {
  if (!fs::exists(path)) throw ConfigError("", "checkpoint '" + path + "' does not exist");
  Checkpoint ck = load_checkpoint(path);
  if (t_max) ck.step.t_max = *t_max;
  validate(ck.step);
  const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(path).parent_path() / "resumed";
  json cfg{{"resumed_from", fs::path(path).filename().string()},
           {"checkpoint_time", ck.state.t},
           {"flow", to_json(ck.flow)},
           {"step", to_json(ck.step)},
           {"original_config", ck.config}};
  ArtifactWriter writer(dir, cfg);
  writer.set_reference_constants(to_json(reference_constants(ck.state.v.grid().dim())));
  const Trajectory traj = resume(ck.state, ck.flow, ck.step);
  return finish_run(writer, traj, ck.flow, ck.step, ck.state.v.grid(), out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-spectral simulator for the energy-critical complex Ginzburg-Landau equation", "cgllab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string config_path;
  std::string out_override;
  auto* run_cmd = app.add_subcommand("run", "Run the scenario described by a JSON config");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_option("--out", out_override, "Override output.directory");

  auto* suite_cmd = app.add_subcommand("suite", "Run a dichotomy or trichotomy suite");
  suite_cmd->add_option("config", config_path, "Config file")->required();
  suite_cmd->add_option("--out", out_override, "Override output.directory");

  auto* analyze_cmd = app.add_subcommand("analyze", "Analysis tools");
  analyze_cmd->require_subcommand(1);
  auto* decay_cmd = analyze_cmd->add_subcommand("decay", "Decay character, predicted and fitted decay rate");
  decay_cmd->add_option("config", config_path, "Config file")->required();
  decay_cmd->add_option("--out", out_override, "Override output.directory");

  std::string ckpt_path;
  std::optional<double> t_max;
  std::optional<std::string> resume_out;
  auto* resume_cmd = app.add_subcommand("resume", "Continue a run from a checkpoint");
  resume_cmd->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();
  resume_cmd->add_option("--t-max", t_max, "New horizon");
  resume_cmd->add_option("--out", resume_out, "Output directory (default: <checkpoint dir>/resumed)");

  int dim = 0;
  auto* const_cmd = app.add_subcommand("constants", "Print full-space constants of W as JSON");
  const_cmd->add_option("d", dim, "Dimension (3 or 4)")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto load = [&] {
      RunConfig cfg = load_config(config_path);
      if (!out_override.empty()) cfg.output.directory = out_override;
      return cfg;
    };
    if (*run_cmd) {
      const RunConfig cfg = load();
      if (cfg.mode == Mode::SuiteDichotomy || cfg.mode == Mode::SuiteTrichotomy) return cmd_suite(cfg, out);
      if (cfg.mode == Mode::AnalyzeDecay) return cmd_analyze_decay(cfg, out);
      return cmd_run(cfg, out);
    }
    if (*suite_cmd) return cmd_suite(load(), out);
    if (*decay_cmd) return cmd_analyze_decay(load(), out);
    if (*resume_cmd) return cmd_resume(ckpt_path, t_max, resume_out, out);
    if (*const_cmd) {
      if (dim != 3 && dim != 4) throw ConfigError("d", "dimension must be 3 or 4");
      out << to_json(reference_constants(dim)).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResolutionError& e) {
    err << "resolution error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace cgl
