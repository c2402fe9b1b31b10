#include "primcodec/json_io.hpp"

#include <set>

#include "primcodec/errors.hpp"

namespace primcodec
{

using nlohmann::json;

json arm_to_json(const ArmConfig& arm)
{
  json limits = json::array();
  for (const auto& [lo, hi] : arm.joint_limits) limits.push_back({lo, hi});
  return {{"link_lengths", arm.link_lengths},
          {"joint_limits", limits},
          {"timesteps", arm.timesteps},
          {"image_height", arm.image_height},
          {"image_width", arm.image_width},
          {"home_ee", {arm.home_ee.x(), arm.home_ee.y()}},
          {"min_wrist_radius", arm.min_wrist_radius}};
}

ArmConfig arm_from_json(const json& j)
{
  ArmConfig arm;
  if (j.contains("link_lengths"))
    arm.link_lengths = j["link_lengths"].get<std::vector<double>>();
  if (j.contains("joint_limits")) {
    arm.joint_limits.clear();
    for (const auto& pair : j["joint_limits"])
      arm.joint_limits.emplace_back(pair.at(0).get<double>(),
                                    pair.at(1).get<double>());
  }
  arm.timesteps = j.value("timesteps", arm.timesteps);
  arm.image_height = j.value("image_height", arm.image_height);
  arm.image_width = j.value("image_width", arm.image_width);
  if (j.contains("home_ee"))
    arm.home_ee = {j["home_ee"].at(0).get<double>(),
                   j["home_ee"].at(1).get<double>()};
  arm.min_wrist_radius = j.value("min_wrist_radius", arm.min_wrist_radius);
  return arm;
}

namespace
{

const char* kind_name(PrimitiveKind kind)
{
  switch (kind) {
    case PrimitiveKind::kTapTop: return "tap_top";
    case PrimitiveKind::kPushAway: return "push_away";
    case PrimitiveKind::kPullBack: return "pull_back";
    case PrimitiveKind::kCircleAround: return "circle_around";
  }
  return "tap_top";
}

PrimitiveKind kind_from_name(const std::string& name)
{
  if (name == "tap_top") return PrimitiveKind::kTapTop;
  if (name == "push_away") return PrimitiveKind::kPushAway;
  if (name == "pull_back") return PrimitiveKind::kPullBack;
  if (name == "circle_around") return PrimitiveKind::kCircleAround;
  throw ConfigError("unknown primitive kind '" + name + "'");
}

}  // namespace

json primitive_to_json(const PrimitiveSpec& spec)
{
  return {{"kind", kind_name(spec.kind)},
          {"name", spec.name},
          {"x_min", spec.x_min},
          {"x_max", spec.x_max},
          {"y_min", spec.y_min},
          {"y_max", spec.y_max},
          {"object_sizes", spec.object_sizes}};
}

PrimitiveSpec primitive_from_json(const json& j)
{
  PrimitiveSpec spec;
  spec.kind = kind_from_name(j.at("kind").get<std::string>());
  spec.name = j.value("name", std::string(kind_name(spec.kind)));
  spec.x_min = j.value("x_min", spec.x_min);
  spec.x_max = j.value("x_max", spec.x_max);
  spec.y_min = j.value("y_min", spec.y_min);
  spec.y_max = j.value("y_max", spec.y_max);
  if (j.contains("object_sizes"))
    spec.object_sizes = j["object_sizes"].get<std::vector<double>>();
  return spec;
}

TrainConfig train_config_from_json(const json& j)
{
  static const std::set<std::string> known = {
      "beta1", "beta2", "adam_eps", "lr_theta", "lr_latent", "epochs_train",
      "epochs_eval", "batch_size", "seed", "init_mode", "latent_dim",
      "train_fraction", "replay_fraction", "num_seeds", "weight_motor",
      "weight_sensory", "success_tolerance", "latent_r2_lo", "latent_r2_hi",
      "layer_sizes", "timescales", "pb_hidden", "pb_dim", "motor_hidden",
      "sensory_hidden", "data", "holdout", "out"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + key + "'");

  TrainConfig c;
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.lr_theta = j.value("lr_theta", c.lr_theta);
  c.lr_latent = j.value("lr_latent", c.lr_latent);
  c.epochs_train = j.value("epochs_train", c.epochs_train);
  c.epochs_eval = j.value("epochs_eval", c.epochs_eval);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  if (j.contains("init_mode"))
    c.init_mode = init_mode_from_string(j["init_mode"].get<std::string>());
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.replay_fraction = j.value("replay_fraction", c.replay_fraction);
  c.num_seeds = j.value("num_seeds", c.num_seeds);
  c.weight_motor = j.value("weight_motor", c.weight_motor);
  c.weight_sensory = j.value("weight_sensory", c.weight_sensory);
  c.success_tolerance = j.value("success_tolerance", c.success_tolerance);
  c.latent_r2_lo = j.value("latent_r2_lo", c.latent_r2_lo);
  c.latent_r2_hi = j.value("latent_r2_hi", c.latent_r2_hi);
  if (j.contains("layer_sizes"))
    c.arch.layer_sizes = j["layer_sizes"].get<std::vector<int>>();
  if (j.contains("timescales"))
    c.arch.timescales = j["timescales"].get<std::vector<double>>();
  c.arch.pb_hidden = j.value("pb_hidden", c.arch.pb_hidden);
  c.arch.pb_dim = j.value("pb_dim", c.arch.pb_dim);
  c.arch.motor_hidden = j.value("motor_hidden", c.arch.motor_hidden);
  c.arch.sensory_hidden = j.value("sensory_hidden", c.arch.sensory_hidden);
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c)
{
  return {{"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"lr_theta", c.lr_theta},
          {"lr_latent", c.lr_latent},
          {"epochs_train", c.epochs_train},
          {"epochs_eval", c.epochs_eval},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"init_mode", to_string(c.init_mode)},
          {"latent_dim", c.latent_dim},
          {"train_fraction", c.train_fraction},
          {"replay_fraction", c.replay_fraction},
          {"num_seeds", c.num_seeds},
          {"weight_motor", c.weight_motor},
          {"weight_sensory", c.weight_sensory},
          {"success_tolerance", c.success_tolerance},
          {"latent_r2_lo", c.latent_r2_lo},
          {"latent_r2_hi", c.latent_r2_hi},
          {"layer_sizes", c.arch.layer_sizes},
          {"timescales", c.arch.timescales},
          {"pb_hidden", c.arch.pb_hidden},
          {"pb_dim", c.arch.pb_dim},
          {"motor_hidden", c.arch.motor_hidden},
          {"sensory_hidden", c.arch.sensory_hidden}};
}

json cluster_report_to_json(const ClusterReport& report)
{
  json j = {{"labels", report.labels},
            {"K", report.K},
            {"tau", report.tau},
            {"r_squared", report.r_squared}};
  if (report.accuracy >= 0.0) {
    j["accuracy"] = report.accuracy;
    json conf = json::array();
    for (int r = 0; r < report.confusion.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < report.confusion.cols(); ++c)
        row.push_back(report.confusion(r, c));
      conf.push_back(std::move(row));
    }
    j["confusion"] = std::move(conf);
  }
  return j;
}

json experiment_report_to_json(const ExperimentReport& report)
{
  json success = json::object();
  for (const auto& [prim, rate] : report.success_rate)
    success[std::to_string(prim)] = rate;
  json j = {{"experiment", report.experiment},
            {"init_mode", to_string(report.init_mode)},
            {"epoch0_eval_loss", report.epoch0_eval_loss},
            {"final_train_loss", report.final_train_loss},
            {"final_eval_loss", report.final_eval_loss},
            {"success_rate", std::move(success)},
            {"latent_cluster", cluster_report_to_json(report.latent_cluster)},
            {"epoch0_cluster_accuracy", report.epoch0_cluster_accuracy},
            {"diverged", report.diverged},
            {"wall_clock_sec", report.wall_clock_sec},
            {"train_indices", report.train_indices},
            {"eval_indices", report.eval_indices}};
  if (report.holdout_primitive >= 0)
    j["holdout_primitive"] = report.holdout_primitive;
  return j;
}

}  // namespace primcodec
