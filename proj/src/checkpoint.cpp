#include "primcodec/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "primcodec/errors.hpp"

namespace primcodec
{

namespace
{

using nlohmann::json;

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kModelMagic[4] = {'P', 'C', 'K', 'P'};
constexpr char kLatentMagic[4] = {'P', 'C', 'L', 'Z'};

template <typename T>
void write_raw(std::ofstream& out, const T& value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& value)
{
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("checkpoint: truncated file");
}

json arch_to_json(const MtrnnArch& arch)
{
  return {{"layer_sizes", arch.layer_sizes},
          {"timescales", arch.timescales},
          {"latent_dim", arch.latent_dim},
          {"pb_hidden", arch.pb_hidden},
          {"pb_dim", arch.pb_dim},
          {"motor_hidden", arch.motor_hidden},
          {"sensory_hidden", arch.sensory_hidden},
          {"motor_dim", arch.motor_dim},
          {"sensory_dim", arch.sensory_dim},
          {"timesteps", arch.timesteps}};
}

MtrnnArch arch_from_json(const json& j)
{
  MtrnnArch arch;
  arch.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  arch.timescales = j.at("timescales").get<std::vector<double>>();
  arch.latent_dim = j.at("latent_dim").get<int>();
  arch.pb_hidden = j.at("pb_hidden").get<int>();
  arch.pb_dim = j.at("pb_dim").get<int>();
  arch.motor_hidden = j.at("motor_hidden").get<int>();
  arch.sensory_hidden = j.at("sensory_hidden").get<int>();
  arch.motor_dim = j.at("motor_dim").get<int>();
  arch.sensory_dim = j.at("sensory_dim").get<int>();
  arch.timesteps = j.at("timesteps").get<int>();
  return arch;
}

}  // namespace

void save_checkpoint(const MtrnnModel& model, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot write " + path);
  out.write(kModelMagic, 4);
  write_raw(out, kCheckpointVersion);
  json header = arch_to_json(model.arch());
  header["param_count"] = model.param_count();
  const std::string header_str = header.dump();
  const std::uint32_t header_len = static_cast<std::uint32_t>(header_str.size());
  write_raw(out, header_len);
  out.write(header_str.data(), header_len);
  out.write(reinterpret_cast<const char*>(model.params().data()),
            static_cast<std::streamsize>(model.param_count() * sizeof(double)));
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

MtrnnModel load_checkpoint(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError("load_checkpoint: not a model checkpoint: " + path);
  std::uint32_t version = 0;
  read_raw(in, version);
  if (version != kCheckpointVersion)
    throw IoError("load_checkpoint: unsupported version");
  std::uint32_t header_len = 0;
  read_raw(in, header_len);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw IoError("load_checkpoint: truncated header");
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw IoError(std::string("load_checkpoint: bad header: ") + e.what());
  }
  MtrnnModel model(arch_from_json(header));
  const int expected = header.at("param_count").get<int>();
  if (expected != model.param_count())
    throw IoError("load_checkpoint: parameter count mismatch");
  in.read(reinterpret_cast<char*>(model.params().data()),
          static_cast<std::streamsize>(model.param_count() * sizeof(double)));
  if (!in) throw IoError("load_checkpoint: truncated parameter blob");
  return model;
}

void save_latents(const LatentCodes& codes, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_latents: cannot write " + path);
  out.write(kLatentMagic, 4);
  write_raw(out, kCheckpointVersion);
  const std::uint64_t n = codes.Z.rows();
  const std::uint64_t q = codes.Z.cols();
  write_raw(out, n);
  write_raw(out, q);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < q; ++j) {
      const double value = codes.Z(i, j);
      out.write(reinterpret_cast<const char*>(&value), sizeof(double));
    }
  if (!out) throw IoError("save_latents: write failed for " + path);
}

LatentCodes load_latents(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_latents: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kLatentMagic, 4) != 0)
    throw IoError("load_latents: not a latent file: " + path);
  std::uint32_t version = 0;
  read_raw(in, version);
  if (version != kCheckpointVersion)
    throw IoError("load_latents: unsupported version");
  std::uint64_t n = 0, q = 0;
  read_raw(in, n);
  read_raw(in, q);
  LatentCodes codes;
  codes.Z.resize(n, q);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < q; ++j) {
      double value = 0.0;
      read_raw(in, value);
      codes.Z(i, j) = value;
    }
  return codes;
}

}  // namespace primcodec
