#include "cgllab/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cgllab/error.hpp"

namespace cgl {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'G', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

nlohmann::json to_json(const FlowParams& p) {
  return {{"z_re", p.z.real()}, {"z_im", p.z.imag()}, {"nonlinearity", p.nonlinearity_on}, {"dealias", p.dealias}};
}

nlohmann::json to_json(const StepControl& c) {
  return {{"dt_init", c.dt_init},
          {"dt_min", c.dt_min},
          {"dt_max", c.dt_max},
          {"safety", c.safety},
          {"tol", c.tol},
          {"t_max", c.t_max},
          {"blowup_h1_factor", c.blowup_h1_factor},
          {"dissipated_h1_fraction", c.dissipated_h1_fraction},
          {"dt_out", c.dt_out},
          {"dt_out_growth", c.dt_out_growth},
          {"snapshot_every", c.snapshot_every}};
}

FlowParams flow_params_from_json(const nlohmann::json& j) {
  FlowParams p;
  p.z = {j.at("z_re").get<double>(), j.at("z_im").get<double>()};
  p.nonlinearity_on = j.at("nonlinearity").get<bool>();
  p.dealias = j.at("dealias").get<bool>();
  return p;
}

StepControl step_control_from_json(const nlohmann::json& j) {
  StepControl c;
  c.dt_init = j.at("dt_init").get<double>();
  c.dt_min = j.at("dt_min").get<double>();
  c.dt_max = j.at("dt_max").get<double>();
  c.safety = j.at("safety").get<double>();
  c.tol = j.at("tol").get<double>();
  c.t_max = j.at("t_max").get<double>();
  c.blowup_h1_factor = j.at("blowup_h1_factor").get<double>();
  c.dissipated_h1_fraction = j.at("dissipated_h1_fraction").get<double>();
  c.dt_out = j.at("dt_out").get<double>();
  c.dt_out_growth = j.at("dt_out_growth").get<double>();
  c.snapshot_every = j.at("snapshot_every").get<int>();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt, Representation rep) {
  const RunState& st = ckpt.state;
  const Grid& g = st.v.grid();
  // Write to a temporary name first so a crash never leaves a torn checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + tmp.string());
    os.write(kMagic.data(), kMagic.size());
    put(os, kVersion);
    put(os, static_cast<std::uint32_t>(g.dim()));
    put(os, static_cast<std::uint32_t>(g.points_per_axis()));
    put(os, static_cast<std::uint32_t>(rep));
    put(os, g.length());
    put(os, st.t);
    put(os, st.dt);
    put(os, st.next_sample_time);
    put(os, st.h1_initial);
    put(os, static_cast<std::uint64_t>(st.sample_index));
    put(os, static_cast<std::uint64_t>(g.size()));
    if (rep == Representation::Spectral) {
      const auto c = st.v.coeffs();
      os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size_bytes()));
    } else {
      const Field u = to_physical(st.v);
      const auto c = u.values();
      os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size_bytes()));
    }
    if (!os) throw IoError("failed writing checkpoint: " + tmp.string());
  }
  {
    nlohmann::json side{{"flow", to_json(ckpt.flow)}, {"step", to_json(ckpt.step)}, {"config", ckpt.config}};
    std::ofstream os(sidecar_path(path), std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint sidecar: " + sidecar_path(path).string());
    os << side.dump(2) << '\n';
    if (!os) throw IoError("failed writing checkpoint sidecar: " + sidecar_path(path).string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot finalize checkpoint " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto dim = get<std::uint32_t>(is, path);
  const auto n = get<std::uint32_t>(is, path);
  const auto rep = get<std::uint32_t>(is, path);
  if (rep > 1) throw IoError("unknown checkpoint representation in " + path.string());
  const auto length = get<double>(is, path);

  Grid g = [&] {
    try {
      return make_grid(static_cast<int>(dim), static_cast<int>(n), length);
    } catch (const Error& e) {
      throw IoError("checkpoint " + path.string() + " has an invalid grid: " + e.what());
    }
  }();

  Checkpoint ck{RunState{SpectralField(g)}, {}, {}, nlohmann::json::object()};
  ck.state.t = get<double>(is, path);
  ck.state.dt = get<double>(is, path);
  ck.state.next_sample_time = get<double>(is, path);
  ck.state.h1_initial = get<double>(is, path);
  ck.state.sample_index = get<std::uint64_t>(is, path);
  const auto count = get<std::uint64_t>(is, path);
  if (count != g.size()) throw IoError("checkpoint size mismatch in " + path.string());

  std::vector<cplx> data(count);
  if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(cplx)))) {
    throw IoError("truncated checkpoint: " + path.string());
  }
  if (rep == static_cast<std::uint32_t>(Representation::Spectral)) {
    ck.state.v = SpectralField(g, std::move(data));
  } else {
    ck.state.v = to_spectral(Field(g, std::move(data)));
  }

  std::ifstream js(sidecar_path(path));
  if (!js) throw IoError("missing checkpoint sidecar: " + sidecar_path(path).string());
  try {
    const auto side = nlohmann::json::parse(js);
    ck.flow = flow_params_from_json(side.at("flow"));
    ck.step = step_control_from_json(side.at("step"));
    ck.config = side.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  return ck;
}

}  // namespace cgl
