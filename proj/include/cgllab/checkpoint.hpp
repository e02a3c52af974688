#pragma once
// Binary checkpoints of a run. The state is stored as unitary spectral
// coefficients so that resuming reproduces the uninterrupted run exactly.
// Flow and step-control parameters go into a JSON sidecar next to the file.

#include <filesystem>

#include <json.hpp>

#include "cgllab/evolution.hpp"

namespace cgl {

struct Checkpoint {
  RunState state;
  FlowParams flow;
  StepControl step;
  /// Normalized run configuration, if the writer had one.
  nlohmann::json config;
};

enum class Representation : std::uint32_t { Physical = 0, Spectral = 1 };

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     Representation rep = Representation::Spectral);

/// Throws IoError on a missing, truncated or foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

nlohmann::json to_json(const FlowParams& p);
nlohmann::json to_json(const StepControl& c);
FlowParams flow_params_from_json(const nlohmann::json& j);
StepControl step_control_from_json(const nlohmann::json& j);

}  // namespace cgl
