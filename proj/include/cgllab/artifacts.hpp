#pragma once
// Files a run leaves behind. One ArtifactWriter owns one output directory and
// is the only writer into it; its manifest lists every file exactly once.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgllab/evolution.hpp"
#include "cgllab/ground_state.hpp"
#include "cgllab/scenarios.hpp"

namespace cgl {

struct ArtifactEntry {
  std::string path;  // relative to the run directory
  std::string kind;  // trajectory, snapshot, checkpoint, config, report, ...
};

/// CSV with header t,h1,l2,crit,energy,diss,verdict_flag and 17 significant
/// digits. verdict_flag is 0 on every row but the last, which carries the
/// final verdict code. Throws IoError("no samples") on an empty trajectory.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

std::string utc_timestamp();

/// Compile-time version string of the library.
std::string code_version();

class ArtifactWriter {
 public:
  /// Creates the directory. `config` is stored verbatim (normalized dump) as
  /// config.json; the manifest hash is taken over exactly those bytes.
  ArtifactWriter(std::filesystem::path directory, const nlohmann::json& config);

  const std::filesystem::path& directory() const noexcept { return dir_; }

  /// Trajectory CSV plus one checkpoint per snapshot.
  void write_trajectory(const Trajectory& traj, const FlowParams& flow, const StepControl& step,
                        const std::string& stem = "trajectory");
  void write_json(const std::string& name, const nlohmann::json& j, const std::string& kind);
  void write_jsonl(const std::string& name, const std::vector<nlohmann::json>& lines, const std::string& kind);
  void write_text(const std::string& name, const std::string& text, const std::string& kind);
  /// Registers a file written by someone else (e.g. a checkpoint observer);
  /// repeated registration of the same path is ignored.
  void record(const std::string& name, const std::string& kind);

  void set_verdict(std::string verdict) { verdict_ = std::move(verdict); }
  void set_reference_constants(nlohmann::json refs) { refs_ = std::move(refs); }

  /// Writes manifest.json and returns its contents.
  nlohmann::json finalize();

 private:
  std::filesystem::path dir_;
  std::string config_hash_;
  std::string started_;
  std::optional<std::string> verdict_;
  nlohmann::json refs_;
  std::vector<ArtifactEntry> entries_;
};

/// Summary table row per report: scenario, params, energy_ratio, kinetic_ratio,
/// verdict and the main evidence numbers.
std::string suite_summary_csv(const std::vector<ClassificationReport>& reports);

}  // namespace cgl
