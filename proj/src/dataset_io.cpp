#include "primcodec/dataset_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "primcodec/errors.hpp"
#include "primcodec/json_io.hpp"

namespace primcodec
{

using nlohmann::json;

void save_dataset(const MotionDataset& dataset, const std::string& dir)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("save_dataset: cannot create directory " + dir);

  json norm = json::array();
  for (const auto& scale : dataset.normalization.joints)
    norm.push_back(
        {{"min", scale.min}, {"max", scale.max}, {"constant", scale.constant}});

  json meta = {{"T", dataset.timesteps},
               {"p", dataset.motor_dim},
               {"H", dataset.image_height},
               {"W", dataset.image_width},
               {"K", dataset.primitive_count},
               {"seed", dataset.seed},
               {"normalization_record", norm}};
  if (dataset.has_generator) {
    json prims = json::array();
    for (const auto& spec : dataset.primitives)
      prims.push_back(primitive_to_json(spec));
    meta["generator"] = {{"arm", arm_to_json(dataset.arm)},
                         {"primitives", prims}};
  }
  if (!dataset.diagnostics.empty()) meta["diagnostics"] = dataset.diagnostics;

  json samples = json::array();
  for (const auto& traj : dataset.samples) {
    json motor = json::array();
    for (int t = 0; t < traj.motor.rows(); ++t) {
      json row = json::array();
      for (int j = 0; j < traj.motor.cols(); ++j) row.push_back(traj.motor(t, j));
      motor.push_back(std::move(row));
    }
    json variation = json::array();
    for (int i = 0; i < traj.variation.size(); ++i)
      variation.push_back(traj.variation[i]);
    samples.push_back({{"primitive_id", traj.primitive_id},
                       {"variation", variation},
                       {"motor", std::move(motor)},
                       {"sensory_path", "sensory.bin"}});
  }

  const json doc = {{"meta", meta}, {"samples", samples}};
  {
    std::ofstream out(fs::path(dir) / "dataset.json");
    if (!out) throw IoError("save_dataset: cannot write dataset.json");
    out << doc.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "sensory.bin", std::ios::binary);
    if (!out) throw IoError("save_dataset: cannot write sensory.bin");
    for (const auto& traj : dataset.samples) {
      for (int t = 0; t < traj.sensory.rows(); ++t) {
        for (int px = 0; px < traj.sensory.cols(); ++px) {
          const float value = static_cast<float>(traj.sensory(t, px));
          out.write(reinterpret_cast<const char*>(&value), sizeof(float));
        }
      }
    }
  }
}

MotionDataset load_dataset(const std::string& dir)
{
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "dataset.json");
  if (!in) throw IoError("load_dataset: cannot open " + dir + "/dataset.json");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(std::string("load_dataset: invalid JSON: ") + e.what());
  }

  MotionDataset dataset;
  try {
    const json& meta = doc.at("meta");
    dataset.timesteps = meta.at("T").get<int>();
    dataset.motor_dim = meta.at("p").get<int>();
    dataset.image_height = meta.at("H").get<int>();
    dataset.image_width = meta.at("W").get<int>();
    dataset.primitive_count = meta.at("K").get<int>();
    dataset.seed = meta.at("seed").get<std::uint64_t>();
    for (const auto& j : meta.at("normalization_record")) {
      JointScale scale;
      scale.min = j.at("min").get<double>();
      scale.max = j.at("max").get<double>();
      scale.constant = j.at("constant").get<bool>();
      dataset.normalization.joints.push_back(scale);
    }
    if (meta.contains("generator")) {
      dataset.arm = arm_from_json(meta["generator"].at("arm"));
      for (const auto& pj : meta["generator"].at("primitives"))
        dataset.primitives.push_back(primitive_from_json(pj));
      dataset.has_generator = true;
    }
    if (meta.contains("diagnostics"))
      dataset.diagnostics =
          meta["diagnostics"].get<std::vector<std::string>>();

    for (const auto& js : doc.at("samples")) {
      Trajectory traj;
      traj.primitive_id = js.at("primitive_id").get<int>();
      const auto& var = js.at("variation");
      traj.variation.resize(var.size());
      for (std::size_t i = 0; i < var.size(); ++i)
        traj.variation[i] = var.at(i).get<double>();
      const auto& motor = js.at("motor");
      traj.motor.resize(motor.size(), dataset.motor_dim);
      for (std::size_t t = 0; t < motor.size(); ++t)
        for (int j = 0; j < dataset.motor_dim; ++j)
          traj.motor(t, j) = motor.at(t).at(j).get<double>();
      dataset.samples.push_back(std::move(traj));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("load_dataset: malformed dataset.json: ") +
                  e.what());
  }

  const int frame = dataset.image_height * dataset.image_width;
  std::ifstream bin(fs::path(dir) / "sensory.bin", std::ios::binary);
  if (!bin) throw IoError("load_dataset: cannot open " + dir + "/sensory.bin");
  for (auto& traj : dataset.samples) {
    traj.sensory.resize(dataset.timesteps, frame);
    for (int t = 0; t < dataset.timesteps; ++t) {
      for (int px = 0; px < frame; ++px) {
        float value = 0.0f;
        bin.read(reinterpret_cast<char*>(&value), sizeof(float));
        if (!bin) throw IoError("load_dataset: sensory.bin truncated");
        traj.sensory(t, px) = static_cast<double>(value);
      }
    }
  }
  return dataset;
}

}  // namespace primcodec
