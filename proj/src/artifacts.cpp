#include "cgllab/artifacts.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "cgllab/checkpoint.hpp"
#include "cgllab/error.hpp"

#ifndef CGLLAB_VERSION
#define CGLLAB_VERSION "unknown"
#endif

namespace cgl {

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  if (traj.empty()) throw IoError("no samples: refusing to write empty trajectory " + path.string());
  std::string out = "t,h1,l2,crit,energy,diss,verdict_flag\n";
  const std::size_t n = traj.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int flag = i + 1 == n ? verdict_code(traj.verdict) : 0;
    out += g17(traj.times[i]) + ',' + g17(traj.h1[i]) + ',' + g17(traj.l2[i]) + ',' + g17(traj.crit[i]) + ',' +
           g17(traj.energy[i]) + ',' + g17(traj.diss[i]) + ',' + std::to_string(flag) + '\n';
  }
  write_file(path, out);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string code_version() { return CGLLAB_VERSION; }

ArtifactWriter::ArtifactWriter(std::filesystem::path directory, const nlohmann::json& config)
    : dir_(std::move(directory)), started_(utc_timestamp()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  const std::string bytes = config.dump(2) + "\n";
  config_hash_ = fnv1a_hex(bytes);
  write_text("config.json", bytes, "config");
}

void ArtifactWriter::record(const std::string& name, const std::string& kind) {
  for (const auto& e : entries_) {
    if (e.path == name) return;
  }
  entries_.push_back({name, kind});
}

void ArtifactWriter::write_text(const std::string& name, const std::string& text, const std::string& kind) {
  write_file(dir_ / name, text);
  record(name, kind);
}

void ArtifactWriter::write_json(const std::string& name, const nlohmann::json& j, const std::string& kind) {
  write_text(name, j.dump(2) + "\n", kind);
}

void ArtifactWriter::write_jsonl(const std::string& name, const std::vector<nlohmann::json>& lines,
                                 const std::string& kind) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + '\n';
  write_text(name, out, kind);
}

void ArtifactWriter::write_trajectory(const Trajectory& traj, const FlowParams& flow, const StepControl& step,
                                      const std::string& stem) {
  const std::string csv = stem + ".csv";
  write_trajectory_csv(traj, dir_ / csv);
  record(csv, "trajectory");
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const Snapshot& s = traj.snapshots[i];
    char name[64];
    std::snprintf(name, sizeof name, "%s_snapshot_%04zu.ckpt", stem.c_str(), i);
    Checkpoint ck{RunState{to_spectral(s.u)}, flow, step, nlohmann::json::object()};
    ck.state.t = s.t;
    ck.state.dt = step.dt_init;
    ck.state.next_sample_time = s.t + step.dt_out;
    ck.state.h1_initial = traj.h1.empty() ? 0.0 : traj.h1.front();
    save_checkpoint(dir_ / name, ck);
    record(name, "snapshot");
    record(std::string(name) + ".json", "snapshot_sidecar");
  }
}

nlohmann::json ArtifactWriter::finalize() {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& e : entries_) arts.push_back({{"path", e.path}, {"kind", e.kind}});
  nlohmann::json m{{"config_hash", config_hash_},
                   {"config_file", "config.json"},
                   {"code_version", code_version()},
                   {"started", started_},
                   {"finished", utc_timestamp()},
                   {"artifacts", arts}};
  m["verdict"] = verdict_ ? nlohmann::json(*verdict_) : nlohmann::json(nullptr);
  m["reference_constants"] = refs_.is_null() ? nlohmann::json::object() : refs_;
  write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  return m;
}

std::string suite_summary_csv(const std::vector<ClassificationReport>& reports) {
  std::string out =
      "scenario,params,energy_ratio,kinetic_ratio,verdict,final_time,final_h1,blowup_time,gamma_hat,max_h1_deviation\n";
  for (const auto& r : reports) {
    std::string params = r.params.contains("initial_data") ? r.params["initial_data"].dump() : r.params.dump();
    // CSV-quote the JSON blob.
    std::string quoted = "\"";
    for (char c : params) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    quoted += '"';
    const Evidence& e = r.evidence;
    out += r.id + ',' + quoted + ',' + g17(r.energy_ratio) + ',' + g17(r.kinetic_ratio) + ',' +
           std::string(to_string(r.verdict)) + ',' + g17(e.final_time) + ',' + g17(e.final_h1) + ',' +
           (e.blowup_time ? g17(*e.blowup_time) : "") + ',' + (e.decay_fit ? g17(e.decay_fit->gamma_hat) : "") +
           ',' + g17(e.max_h1_deviation) + '\n';
  }
  return out;
}

}  // namespace cgl
