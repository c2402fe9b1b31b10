#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "primcodec/checkpoint.hpp"
#include "primcodec/clustering.hpp"
#include "primcodec/dataset_io.hpp"
#include "primcodec/errors.hpp"
#include "primcodec/json_io.hpp"
#include "primcodec/manifest.hpp"
#include "primcodec/projection.hpp"
#include "primcodec/rng.hpp"
#include "primcodec/threading.hpp"
#include "primcodec/trajectory.hpp"
#include "primcodec/training.hpp"

namespace
{

using nlohmann::json;
using namespace primcodec;
namespace fs = std::filesystem;

json load_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string fmt(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_curve_csv(const std::vector<double>& curve, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e)
    out << e << "," << fmt(curve[e]) << "\n";
}

void write_curve_csv(const std::vector<double>& mean,
                     const std::vector<double>& stddev, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,loss_mean,loss_std\n";
  for (std::size_t e = 0; e < mean.size(); ++e)
    out << e << "," << fmt(mean[e]) << "," << fmt(stddev[e]) << "\n";
}

void write_sweep_csv(const std::vector<TauSweepPoint>& sweep,
                     const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "tau,r_squared\n";
  for (const auto& pt : sweep)
    out << fmt(pt.tau) << "," << fmt(pt.r_squared) << "\n";
}

void write_labels_csv(const std::vector<int>& labels, const std::string& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << i << "," << labels[i] << "\n";
}

struct Timer
{
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& out_dir)
{
  Timer timer;
  const json cfg = load_json_file(config_path);
  for (const char* key : {"samples_per_primitive", "seed"})
    if (!cfg.contains(key))
      throw ConfigError("gen config: missing required key '" +
                        std::string(key) + "'");

  ArmConfig arm = cfg.contains("arm") ? arm_from_json(cfg["arm"]) : ArmConfig{};
  std::vector<PrimitiveSpec> prims;
  if (cfg.contains("primitives")) {
    for (const auto& j : cfg["primitives"])
      prims.push_back(primitive_from_json(j));
  } else {
    prims = default_primitives();
  }
  const int spp = cfg["samples_per_primitive"].get<int>();
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();

  const MotionDataset dataset = generate_dataset(arm, prims, spp, seed);
  save_dataset(dataset, out_dir);
  for (const auto& line : dataset.diagnostics)
    std::cerr << "primcodec: gen: skipped: " << line << "\n";

  RunManifest manifest;
  manifest.command = "gen";
  manifest.config = cfg;
  manifest.input_hashes[config_path] = content_hash(config_path);
  manifest.outputs = {(fs::path(out_dir) / "dataset.json").string(),
                      (fs::path(out_dir) / "sensory.bin").string()};
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);
  std::cout << "generated " << dataset.size() << " trajectories ("
            << dataset.primitive_count << " primitives) into " << out_dir
            << "\n";
  return 0;
}

int cmd_project_stats(int k, int q, int trials, std::uint64_t seed,
                      const std::string& out_path)
{
  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  a[0] = 1.0;
  b[0] = 1.0;
  const InnerProductStats stats =
      inner_product_statistics(a, b, q, trials, seed);
  const json j = {{"k", k},
                  {"q", q},
                  {"trials", stats.trials},
                  {"seed", seed},
                  {"empirical_mean", stats.empirical_mean},
                  {"empirical_var", stats.empirical_var},
                  {"analytic_mean", stats.analytic_mean},
                  {"var_bound", stats.var_bound}};
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(j, out_path);
  }
  return 0;
}

/// Accepts either {"Z": [[...]], "labels": [...]} JSON or a latents .bin.
Eigen::MatrixXd load_latent_matrix(const std::string& path,
                                   std::vector<int>* labels)
{
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin")
    return load_latents(path).Z;
  const json j = load_json_file(path);
  if (!j.contains("Z")) throw ConfigError("latent input: missing key 'Z'");
  const auto& rows = j["Z"];
  if (rows.empty()) throw ConfigError("latent input: empty Z");
  Eigen::MatrixXd Z(rows.size(), rows.at(0).size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows.at(i).size(); ++c)
      Z(i, c) = rows.at(i).at(c).get<double>();
  if (labels != nullptr && j.contains("labels"))
    *labels = j["labels"].get<std::vector<int>>();
  return Z;
}

int cmd_cluster(const std::string& input, int K, bool affine,
                const std::string& tau_arg, std::uint64_t seed, double r2_lo,
                double r2_hi, const std::string& out_dir)
{
  Timer timer;
  std::vector<int> labels_truth;
  const Eigen::MatrixXd Z = load_latent_matrix(input, &labels_truth);

  double tau = 0.0;
  if (tau_arg != "auto") {
    try {
      tau = std::stod(tau_arg);
    } catch (...) {
      throw ConfigError("cluster: --tau must be 'auto' or a number");
    }
    if (!(tau > 0.0)) throw ConfigError("cluster: tau must be > 0");
  }

  fs::create_directories(out_dir);
  const std::vector<int>* truth = labels_truth.empty() ? nullptr : &labels_truth;
  const ClusterReport report =
      cluster_latents(Z, K, affine, tau, seed, truth, r2_lo, r2_hi);

  write_json_file(cluster_report_to_json(report),
                  (fs::path(out_dir) / "cluster_report.json").string());
  write_labels_csv(report.labels, (fs::path(out_dir) / "labels.csv").string());
  std::vector<std::string> outputs = {
      (fs::path(out_dir) / "cluster_report.json").string(),
      (fs::path(out_dir) / "labels.csv").string()};
  if (!report.sweep.empty()) {
    write_sweep_csv(report.sweep, (fs::path(out_dir) / "tau_sweep.csv").string());
    outputs.push_back((fs::path(out_dir) / "tau_sweep.csv").string());
  }

  RunManifest manifest;
  manifest.command = "cluster";
  manifest.config = {{"input", input},   {"k", K},
                     {"affine", affine}, {"tau", tau_arg},
                     {"seed", seed},     {"r2_lo", r2_lo},
                     {"r2_hi", r2_hi}};
  manifest.input_hashes[input] = content_hash(input);
  manifest.outputs = outputs;
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);

  std::cout << "tau=" << report.tau << " R2=" << report.r_squared;
  if (report.accuracy >= 0.0) std::cout << " accuracy=" << report.accuracy;
  std::cout << "\n";
  return 0;
}

TrainConfig config_from_json_and_flags(const json& base, const std::string& mode,
                                       int q, int epochs, std::uint64_t seed)
{
  TrainConfig config = train_config_from_json(base);
  if (!mode.empty()) config.init_mode = init_mode_from_string(mode);
  if (q > 0) config.latent_dim = q;
  if (epochs > 0) {
    config.epochs_train = epochs;
    config.epochs_eval = epochs;
  }
  if (seed != UINT64_MAX) config.seed = seed;
  return config;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              const std::string& config_path, const std::string& mode, int q,
              int epochs, std::uint64_t seed)
{
  Timer timer;
  const json base =
      config_path.empty() ? json::object() : load_json_file(config_path);
  TrainConfig config = config_from_json_and_flags(base, mode, q, epochs, seed);

  const MotionDataset dataset = load_dataset(data_dir);
  MtrnnArch arch = config.arch;
  arch.latent_dim = config.latent_dim;
  arch.motor_dim = dataset.motor_dim;
  arch.sensory_dim = dataset.image_height * dataset.image_width;
  arch.timesteps = dataset.timesteps;

  MtrnnModel model(arch);
  model.init_params(derive_seed(config.seed, 0x7E7AULL));
  LatentCodes codes =
      init_latent(config.init_mode, dataset, config.latent_dim, config.seed);

  std::vector<int> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  const PhaseResult phase = train_phase(model, codes, dataset, all, config,
                                        config.epochs_train, true, true);

  fs::create_directories(out_dir);
  save_checkpoint(model, (fs::path(out_dir) / "model.ckpt").string());
  save_latents(codes, (fs::path(out_dir) / "latents.bin").string());
  write_curve_csv(phase.curve,
                  (fs::path(out_dir) / "curve_train.csv").string());
  const json summary = {{"final_loss", phase.curve.back()},
                        {"epoch0_loss", phase.curve.front()},
                        {"diverged", phase.diverged},
                        {"init_mode", to_string(config.init_mode)}};
  write_json_file(summary, (fs::path(out_dir) / "train_summary.json").string());

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = train_config_to_json(config);
  manifest.input_hashes[data_dir + "/dataset.json"] =
      content_hash(data_dir + "/dataset.json");
  manifest.outputs = {(fs::path(out_dir) / "model.ckpt").string(),
                      (fs::path(out_dir) / "latents.bin").string(),
                      (fs::path(out_dir) / "curve_train.csv").string(),
                      (fs::path(out_dir) / "train_summary.json").string()};
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);

  if (phase.diverged) throw NumericError("training diverged");
  std::cout << "final loss " << phase.curve.back() << " after "
            << config.epochs_train << " epochs\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_dir, const std::string& data_dir,
             const std::string& out_dir, const std::string& config_path,
             const std::string& mode, std::uint64_t seed)
{
  Timer timer;
  const json base =
      config_path.empty() ? json::object() : load_json_file(config_path);
  TrainConfig config = config_from_json_and_flags(base, mode, 0, 0, seed);

  MtrnnModel model =
      load_checkpoint((fs::path(checkpoint_dir) / "model.ckpt").string());
  const MotionDataset dataset = load_dataset(data_dir);
  config.latent_dim = model.arch().latent_dim;

  LatentCodes codes =
      init_latent(config.init_mode, dataset, config.latent_dim, config.seed);
  std::vector<int> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  const PhaseResult phase = train_phase(model, codes, dataset, all, config,
                                        config.epochs_eval, false, true);

  fs::create_directories(out_dir);
  save_latents(codes, (fs::path(out_dir) / "latents_eval.bin").string());
  write_curve_csv(phase.curve, (fs::path(out_dir) / "curve_eval.csv").string());
  const json summary = {{"final_loss", phase.curve.back()},
                        {"epoch0_loss", phase.curve.front()},
                        {"diverged", phase.diverged},
                        {"init_mode", to_string(config.init_mode)}};
  write_json_file(summary, (fs::path(out_dir) / "eval_summary.json").string());

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = train_config_to_json(config);
  manifest.input_hashes[data_dir + "/dataset.json"] =
      content_hash(data_dir + "/dataset.json");
  manifest.input_hashes[(fs::path(checkpoint_dir) / "model.ckpt").string()] =
      content_hash((fs::path(checkpoint_dir) / "model.ckpt").string());
  manifest.outputs = {(fs::path(out_dir) / "latents_eval.bin").string(),
                      (fs::path(out_dir) / "curve_eval.csv").string(),
                      (fs::path(out_dir) / "eval_summary.json").string()};
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);

  if (phase.diverged) throw NumericError("evaluation diverged");
  std::cout << "epoch0 loss " << phase.curve.front() << ", final loss "
            << phase.curve.back() << "\n";
  return 0;
}

int cmd_experiment(const std::string& which, const std::string& config_path,
                   const std::string& out_dir)
{
  Timer timer;
  const json cfg = load_json_file(config_path);
  if (!cfg.contains("data"))
    throw ConfigError(which + " config: missing required key 'data'");
  const std::string data_dir = cfg["data"].get<std::string>();
  json cfg_clean = cfg;
  cfg_clean.erase("data");
  if (cfg_clean.contains("holdout")) cfg_clean.erase("holdout");
  const TrainConfig config = train_config_from_json(cfg_clean);
  const MotionDataset dataset = load_dataset(data_dir);

  ExperimentReport report;
  if (which == "intra") {
    report = run_intra_experiment(dataset, config);
  } else {
    if (!cfg.contains("holdout"))
      throw ConfigError("inter config: missing required key 'holdout'");
    report = run_inter_experiment(dataset, config, cfg["holdout"].get<int>());
  }

  fs::create_directories(out_dir);
  write_json_file(experiment_report_to_json(report),
                  (fs::path(out_dir) / "report.json").string());
  write_curve_csv(report.curve_train,
                  (fs::path(out_dir) / "curve_train.csv").string());
  std::vector<std::string> outputs = {
      (fs::path(out_dir) / "report.json").string(),
      (fs::path(out_dir) / "curve_train.csv").string(),
      (fs::path(out_dir) / "curve_eval.csv").string(),
      (fs::path(out_dir) / "latents_final.bin").string(),
      (fs::path(out_dir) / "labels.csv").string()};
  if (which == "inter") {
    write_curve_csv(report.curve_eval, report.curve_eval_std,
                    (fs::path(out_dir) / "curve_eval.csv").string());
    for (std::size_t s = 0; s < report.curves_eval_per_seed.size(); ++s) {
      const std::string path =
          (fs::path(out_dir) / ("curve_eval_seed" + std::to_string(s) + ".csv"))
              .string();
      write_curve_csv(report.curves_eval_per_seed[s], path);
      outputs.push_back(path);
    }
  } else {
    write_curve_csv(report.curve_eval,
                    (fs::path(out_dir) / "curve_eval.csv").string());
  }
  LatentCodes final_codes;
  final_codes.Z = report.final_latents;
  save_latents(final_codes, (fs::path(out_dir) / "latents_final.bin").string());
  write_labels_csv(report.latent_cluster.labels,
                   (fs::path(out_dir) / "labels.csv").string());
  if (!report.latent_cluster.sweep.empty()) {
    write_sweep_csv(report.latent_cluster.sweep,
                    (fs::path(out_dir) / "tau_sweep.csv").string());
    outputs.push_back((fs::path(out_dir) / "tau_sweep.csv").string());
  }

  RunManifest manifest;
  manifest.command = which;
  manifest.config = cfg;
  manifest.input_hashes[config_path] = content_hash(config_path);
  manifest.input_hashes[data_dir + "/dataset.json"] =
      content_hash(data_dir + "/dataset.json");
  manifest.outputs = outputs;
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);

  if (report.diverged) throw NumericError(which + " experiment diverged");
  std::cout << which << ": epoch0 eval " << report.epoch0_eval_loss
            << ", final eval " << report.final_eval_loss << ", cluster acc "
            << report.latent_cluster.accuracy << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir)
{
  Timer timer;
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  json summary = json::array();
  fs::create_directories(out_dir);

  std::ofstream cmp((fs::path(out_dir) / "comparison.csv").string());
  if (!cmp) throw IoError("cannot write comparison.csv");
  cmp << "run,init_mode,epoch0_eval_loss,final_train_loss,final_eval_loss,"
         "cluster_accuracy,epoch0_cluster_accuracy\n";

  for (const auto& dir : run_dirs) {
    const std::string report_path = (fs::path(dir) / "report.json").string();
    if (!fs::exists(report_path))
      throw ConfigError("report: missing " + report_path);
    const json r = load_json_file(report_path);
    summary.push_back({{"run", dir}, {"report", r}});
    cmp << dir << "," << r.value("init_mode", std::string("?")) << ","
        << fmt(r.value("epoch0_eval_loss", 0.0)) << ","
        << fmt(r.value("final_train_loss", 0.0)) << ","
        << fmt(r.value("final_eval_loss", 0.0)) << ",";
    if (r.contains("latent_cluster") &&
        r["latent_cluster"].contains("accuracy"))
      cmp << fmt(r["latent_cluster"]["accuracy"].get<double>());
    cmp << "," << fmt(r.value("epoch0_cluster_accuracy", -1.0)) << "\n";
  }
  cmp.close();

  write_json_file(summary, (fs::path(out_dir) / "summary.json").string());

  RunManifest manifest;
  manifest.command = "report";
  for (const auto& dir : run_dirs)
    manifest.input_hashes[(fs::path(dir) / "report.json").string()] =
        content_hash((fs::path(dir) / "report.json").string());
  manifest.config = {{"runs", run_dirs}};
  manifest.outputs = {(fs::path(out_dir) / "summary.json").string(),
                      (fs::path(out_dir) / "comparison.csv").string()};
  manifest.wall_clock_sec = timer.seconds();
  write_manifest(manifest, out_dir);
  std::cout << "merged " << run_dirs.size() << " runs into " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"primcodec: motion-primitive latent encoding experiments"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker cap (default: env PRIMCODEC_THREADS or hardware)");

  std::string config_path, out_dir, data_dir, checkpoint_dir, input_path;
  std::string mode, tau_arg = "auto";
  int k = 270, q = 0, trials = 100000, cluster_k = 4, epochs = 0;
  std::uint64_t seed = UINT64_MAX;
  bool affine = false;
  double r2_lo = 0.85, r2_hi = 0.95;
  std::vector<std::string> run_dirs;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "config JSON")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* stats =
      app.add_subcommand("project-stats", "Monte-Carlo projection statistics");
  stats->add_option("--k", k, "source dimension");
  stats->add_option("--q", q, "latent dimension")->required();
  stats->add_option("--trials", trials, "number of projections");
  stats->add_option("--seed", seed, "RNG seed")->required();
  stats->add_option("--out", out_dir, "output JSON (default stdout)");

  auto* train = app.add_subcommand("train", "train theta and Z on a dataset");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--config", config_path, "config JSON");
  train->add_option("--mode", mode, "latent init: zero|random|projection");
  train->add_option("--q", q, "latent dimension");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--seed", seed, "RNG seed");

  auto* eval = app.add_subcommand("eval", "re-encode a dataset, theta frozen");
  eval->add_option("--checkpoint", checkpoint_dir, "run dir with model.ckpt")
      ->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--config", config_path, "config JSON");
  eval->add_option("--mode", mode, "latent init: zero|random|projection");
  eval->add_option("--seed", seed, "RNG seed");

  auto* cluster = app.add_subcommand("cluster", "affine subspace clustering");
  cluster->add_option("--input", input_path, "Z JSON or latents .bin")
      ->required();
  cluster->add_option("--k", cluster_k, "number of clusters")->required();
  cluster->add_flag("--affine", affine, "homogeneous-coordinate lift");
  cluster->add_option("--tau", tau_arg, "'auto' or a positive value");
  cluster->add_option("--seed", seed, "RNG seed");
  cluster->add_option("--r2-lo", r2_lo, "auto-tau R^2 band lower edge");
  cluster->add_option("--r2-hi", r2_hi, "auto-tau R^2 band upper edge");
  cluster->add_option("--out", out_dir, "output directory")->required();

  auto* intra = app.add_subcommand("intra", "intra-primitive experiment");
  intra->add_option("--config", config_path, "config JSON")->required();
  intra->add_option("--out", out_dir, "output directory")->required();

  auto* inter = app.add_subcommand("inter", "inter-primitive experiment");
  inter->add_option("--config", config_path, "config JSON")->required();
  inter->add_option("--out", out_dir, "output directory")->required();

  auto* report = app.add_subcommand("report", "consolidate run outputs");
  report->add_option("--run", run_dirs, "run directory (repeatable)")
      ->required();
  report->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads > 0) set_thread_budget(threads);
    if (gen->parsed()) return cmd_gen(config_path, out_dir);
    if (stats->parsed())
      return cmd_project_stats(k, q, trials, seed == UINT64_MAX ? 1 : seed,
                               out_dir);
    if (train->parsed())
      return cmd_train(data_dir, out_dir, config_path, mode, q, epochs, seed);
    if (eval->parsed())
      return cmd_eval(checkpoint_dir, data_dir, out_dir, config_path, mode,
                      seed);
    if (cluster->parsed())
      return cmd_cluster(input_path, cluster_k, affine, tau_arg,
                         seed == UINT64_MAX ? 1 : seed, r2_lo, r2_hi, out_dir);
    if (intra->parsed()) return cmd_experiment("intra", config_path, out_dir);
    if (inter->parsed()) return cmd_experiment("inter", config_path, out_dir);
    if (report->parsed()) return cmd_report(run_dirs, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "primcodec: error: config: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "primcodec: error: numeric: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "primcodec: error: io: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "primcodec: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
