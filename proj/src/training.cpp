#include "primcodec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "primcodec/errors.hpp"
#include "primcodec/projection.hpp"
#include "primcodec/rng.hpp"

namespace primcodec
{

std::string to_string(InitMode mode)
{
  switch (mode) {
    case InitMode::kZero: return "zero";
    case InitMode::kRandom: return "random";
    case InitMode::kProjection: return "projection";
  }
  return "unknown";
}

InitMode init_mode_from_string(const std::string& name)
{
  if (name == "zero") return InitMode::kZero;
  if (name == "random") return InitMode::kRandom;
  if (name == "projection") return InitMode::kProjection;
  throw ConfigError("unknown init mode '" + name + "'");
}

void TrainConfig::validate() const
{
  if (epochs_train < 1 || epochs_eval < 1)
    throw ConfigError("config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("config: train_fraction must be in (0,1)");
  if (!(replay_fraction > 0.0 && replay_fraction <= 1.0))
    throw ConfigError("config: replay_fraction must be in (0,1]");
  if (latent_dim < 1) throw ConfigError("config: latent_dim must be >= 1");
  if (num_seeds < 1) throw ConfigError("config: num_seeds must be >= 1");
  if (!(latent_r2_lo < latent_r2_hi))
    throw ConfigError("config: invalid latent R^2 window");
}

LatentCodes init_latent(InitMode mode, const MotionDataset& dataset, int q,
                        std::uint64_t seed)
{
  if (q < 1) throw ConfigError("init_latent: q must be >= 1");
  const int n = dataset.size();
  LatentCodes codes;
  codes.Z.resize(n, q);
  switch (mode) {
    case InitMode::kZero:
      codes.Z.setZero();
      break;
    case InitMode::kRandom: {
      RandomStream stream(derive_seed(seed, 0x1A7E57ULL));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) codes.Z(i, j) = stream.gaussian();
      break;
    }
    case InitMode::kProjection: {
      const int k = dataset.timesteps * dataset.motor_dim;
      const ProjectionMatrix P = sample_projection(k, q, seed);
      for (int i = 0; i < n; ++i)
        codes.Z.row(i) =
            project(P, flatten_motor(dataset.samples[i].motor)).transpose();
      break;
    }
  }
  return codes;
}

namespace
{

struct AdamVector
{
  Eigen::VectorXd m, v;
  long step_count = 0;

  void step(Eigen::VectorXd& x, const Eigen::VectorXd& g, double lr, double b1,
            double b2, double eps)
  {
    if (m.size() == 0) {
      m = Eigen::VectorXd::Zero(x.size());
      v = Eigen::VectorXd::Zero(x.size());
    }
    ++step_count;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(b1, step_count);
    const double bc2 = 1.0 - std::pow(b2, step_count);
    x.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
};

/// Adam over rows of Z; only batch rows move, each with its own bias
/// correction counter.
struct AdamRows
{
  Eigen::MatrixXd m, v;
  Eigen::VectorXi step_count;

  void init(int n, int q)
  {
    m = Eigen::MatrixXd::Zero(n, q);
    v = Eigen::MatrixXd::Zero(n, q);
    step_count = Eigen::VectorXi::Zero(n);
  }

  void step_row(Eigen::MatrixXd& Z, int row, const Eigen::RowVectorXd& g,
                double lr, double b1, double b2, double eps)
  {
    step_count[row] += 1;
    m.row(row) = b1 * m.row(row) + (1.0 - b1) * g;
    v.row(row) = b2 * v.row(row) + (1.0 - b2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(b1, step_count[row]);
    const double bc2 = 1.0 - std::pow(b2, step_count[row]);
    Z.row(row).array() -=
        lr * (m.row(row).array() / bc1) /
        ((v.row(row).array() / bc2).sqrt() + eps);
  }
};

LossWeights resolve_weights(const TrainConfig& config, const MtrnnArch& arch)
{
  LossWeights w;
  w.motor = config.weight_motor;
  w.sensory = config.weight_sensory >= 0.0 ? config.weight_sensory
                                           : default_sensory_weight(arch);
  return w;
}

double mean_loss(const MtrnnModel& model, const LatentCodes& codes,
                 const MotionDataset& dataset, const std::vector<int>& part,
                 const LossWeights& weights)
{
  std::vector<BatchItem> items;
  items.reserve(part.size());
  for (int idx : part) items.push_back({idx, &dataset.samples[idx]});
  return model.loss(codes, items, weights) / static_cast<double>(part.size());
}

MtrnnArch arch_for_dataset(const TrainConfig& config,
                           const MotionDataset& dataset)
{
  MtrnnArch arch = config.arch;
  arch.latent_dim = config.latent_dim;
  arch.motor_dim = dataset.motor_dim;
  arch.sensory_dim = dataset.image_height * dataset.image_width;
  arch.timesteps = dataset.timesteps;
  arch.validate();
  return arch;
}

}  // namespace

PhaseResult train_phase(MtrnnModel& model, LatentCodes& codes,
                        const MotionDataset& dataset,
                        const std::vector<int>& part, const TrainConfig& config,
                        int epochs, bool train_theta, bool train_latent)
{
  if (!train_theta && !train_latent)
    throw ConfigError("train_phase: nothing to train");
  if (part.empty()) throw ConfigError("train_phase: empty dataset part");
  for (int idx : part)
    if (idx < 0 || idx >= dataset.size())
      throw ConfigError("train_phase: index out of range");

  const LossWeights weights = resolve_weights(config, model.arch());
  PhaseResult result;
  result.curve.push_back(mean_loss(model, codes, dataset, part, weights));

  AdamVector opt_theta;
  AdamRows opt_latent;
  opt_latent.init(static_cast<int>(codes.Z.rows()),
                  static_cast<int>(codes.Z.cols()));

  Eigen::VectorXd theta_snapshot = model.params();
  Eigen::MatrixXd latent_snapshot = codes.Z;

  std::vector<int> order(part);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const std::uint64_t salt = 0xE70000ULL + 4ULL * epoch +
                               (train_theta ? 2 : 0) + (train_latent ? 1 : 0);
    RandomStream stream(derive_seed(config.seed, salt));
    order = part;
    stream.shuffle(order);

    bool diverged = false;
    for (std::size_t start = 0; start < order.size() && !diverged;
         start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + config.batch_size);
      std::vector<BatchItem> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i)
        batch.push_back({order[i], &dataset.samples[order[i]]});
      BatchGradients grads;
      try {
        grads = model.gradients(codes, batch, weights);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(grads.loss)) {
        diverged = true;
        break;
      }
      if (train_theta)
        opt_theta.step(model.params(), grads.theta, config.lr_theta,
                       config.beta1, config.beta2, config.adam_eps);
      if (train_latent)
        for (std::size_t bi = 0; bi < batch.size(); ++bi)
          opt_latent.step_row(codes.Z, batch[bi].index, grads.latent.row(bi),
                              config.lr_latent, config.beta1, config.beta2,
                              config.adam_eps);
    }

    double epoch_loss = std::numeric_limits<double>::quiet_NaN();
    if (!diverged)
      epoch_loss = mean_loss(model, codes, dataset, part, weights);
    if (diverged || !std::isfinite(epoch_loss)) {
      model.params() = theta_snapshot;
      codes.Z = latent_snapshot;
      result.diverged = true;
      return result;
    }
    result.curve.push_back(epoch_loss);
    theta_snapshot = model.params();
    latent_snapshot = codes.Z;
  }
  return result;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split(
    const MotionDataset& dataset, double fraction, std::uint64_t seed)
{
  std::vector<int> first, second;
  for (int k = 0; k < dataset.primitive_count; ++k) {
    std::vector<int> ids;
    for (int i = 0; i < dataset.size(); ++i)
      if (dataset.samples[i].primitive_id == k) ids.push_back(i);
    if (ids.size() < 2)
      throw ConfigError("stratified_split: primitive " + std::to_string(k) +
                        " has fewer than 2 samples");
    RandomStream stream(derive_seed(seed, 0x5B17ULL + k));
    stream.shuffle(ids);
    std::size_t take = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(ids.size())));
    take = std::clamp<std::size_t>(take, 1, ids.size() - 1);
    first.insert(first.end(), ids.begin(), ids.begin() + take);
    second.insert(second.end(), ids.begin() + take, ids.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {first, second};
}

std::map<int, double> success_rates(const MtrnnModel& model,
                                    const LatentCodes& codes,
                                    const MotionDataset& dataset,
                                    const std::vector<int>& indices,
                                    double tolerance)
{
  std::map<int, double> rates;
  if (!dataset.has_generator) return rates;
  std::map<int, int> total, hits;
  for (int idx : indices) {
    const Trajectory& traj = dataset.samples[idx];
    const PrimitiveSpec& spec = dataset.primitives[traj.primitive_id];
    const Eigen::Vector2d target{traj.variation[0], traj.variation[1]};
    const double size = traj.variation[2];
    const ForwardResult fwd =
        model.forward(codes.Z.row(idx).transpose(), dataset.timesteps);
    const Eigen::MatrixXd raw =
        denormalize_motor(fwd.motor, dataset.normalization);
    const ScriptedPath path =
        scripted_path(spec, target, size, dataset.timesteps, dataset.arm);
    bool ok = true;
    for (int t : key_frames(spec, dataset.timesteps)) {
      const Eigen::Vector2d ee =
          forward_kinematics(dataset.arm, raw.row(t).transpose());
      if ((ee - path.positions.row(t).transpose()).norm() > tolerance) {
        ok = false;
        break;
      }
    }
    total[traj.primitive_id] += 1;
    if (ok) hits[traj.primitive_id] += 1;
  }
  for (const auto& [k, n] : total)
    rates[k] = static_cast<double>(hits[k]) / n;
  return rates;
}

ExperimentReport run_intra_experiment(const MotionDataset& dataset,
                                      const TrainConfig& config)
{
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const MtrnnArch arch = arch_for_dataset(config, dataset);

  ExperimentReport report;
  report.experiment = "intra";
  report.init_mode = config.init_mode;

  auto [train_idx, eval_idx] =
      stratified_split(dataset, config.train_fraction,
                       derive_seed(config.seed, 0x5E711ULL));
  report.train_indices = train_idx;
  report.eval_indices = eval_idx;

  MtrnnModel model(arch);
  model.init_params(derive_seed(config.seed, 0x7E7AULL));
  LatentCodes codes =
      init_latent(config.init_mode, dataset, config.latent_dim, config.seed);

  // clustering of the initial latents (structure before any training)
  std::vector<int> truth(dataset.size());
  for (int i = 0; i < dataset.size(); ++i)
    truth[i] = dataset.samples[i].primitive_id;
  try {
    const ClusterReport epoch0 = cluster_latents(
        codes.Z, dataset.primitive_count, /*affine=*/true, /*tau=*/0.0,
        derive_seed(config.seed, 0xC1A5ULL), &truth, config.latent_r2_lo,
        config.latent_r2_hi);
    report.epoch0_cluster_accuracy = epoch0.accuracy;
  } catch (const NumericError&) {
    // zero initialization has no spread to cluster
    report.epoch0_cluster_accuracy = -1.0;
  }

  const PhaseResult phase1 =
      train_phase(model, codes, dataset, train_idx, config,
                  config.epochs_train, /*theta=*/true, /*latent=*/true);
  report.curve_train = phase1.curve;
  report.final_train_loss = phase1.curve.back();
  report.diverged = phase1.diverged;

  // fresh latents for the eval rows; theta stays frozen in phase 2
  const LatentCodes fresh =
      init_latent(config.init_mode, dataset, config.latent_dim, config.seed);
  for (int idx : eval_idx) codes.Z.row(idx) = fresh.Z.row(idx);

  const PhaseResult phase2 =
      train_phase(model, codes, dataset, eval_idx, config, config.epochs_eval,
                  /*theta=*/false, /*latent=*/true);
  report.curve_eval = phase2.curve;
  report.epoch0_eval_loss = phase2.curve.front();
  report.final_eval_loss = phase2.curve.back();
  report.diverged = report.diverged || phase2.diverged;

  report.success_rate = success_rates(model, codes, dataset, eval_idx,
                                      config.success_tolerance);
  report.latent_cluster = cluster_latents(
      codes.Z, dataset.primitive_count, /*affine=*/true, /*tau=*/0.0,
      derive_seed(config.seed, 0xC1A6ULL), &truth, config.latent_r2_lo,
      config.latent_r2_hi);
  report.final_latents = codes.Z;

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

ExperimentReport run_inter_experiment(const MotionDataset& dataset,
                                      const TrainConfig& config, int holdout)
{
  config.validate();
  if (dataset.primitive_count < 2)
    throw ConfigError("run_inter_experiment: need at least 2 primitives");
  if (holdout < 0 || holdout >= dataset.primitive_count)
    throw ConfigError("run_inter_experiment: holdout primitive out of range");
  const auto t_start = std::chrono::steady_clock::now();
  const MtrnnArch arch = arch_for_dataset(config, dataset);

  ExperimentReport report;
  report.experiment = "inter";
  report.init_mode = config.init_mode;
  report.holdout_primitive = holdout;

  std::vector<int> known, heldout;
  for (int i = 0; i < dataset.size(); ++i) {
    if (dataset.samples[i].primitive_id == holdout)
      heldout.push_back(i);
    else
      known.push_back(i);
  }
  report.train_indices = known;
  report.eval_indices = heldout;

  std::vector<int> truth(dataset.size());
  for (int i = 0; i < dataset.size(); ++i)
    truth[i] = dataset.samples[i].primitive_id;

  std::vector<std::vector<double>> curves1;
  double success_sum = 0.0;
  MtrnnModel last_model(arch);
  LatentCodes last_codes;
  for (int rep = 0; rep < config.num_seeds; ++rep) {
    TrainConfig replica = config;
    replica.seed = derive_seed(config.seed, 0x1A7E4ULL + rep);

    MtrnnModel model(arch);
    model.init_params(derive_seed(replica.seed, 0x7E7AULL));
    LatentCodes codes = init_latent(replica.init_mode, dataset,
                                    replica.latent_dim, replica.seed);

    const PhaseResult phase1 =
        train_phase(model, codes, dataset, known, replica,
                    replica.epochs_train, /*theta=*/true, /*latent=*/true);
    report.diverged = report.diverged || phase1.diverged;
    curves1.push_back(phase1.curve);

    // replay subset of the known samples, then learn the new primitive with
    // everything trainable
    std::vector<int> replay(known);
    RandomStream stream(derive_seed(replica.seed, 0x4E91AFULL));
    stream.shuffle(replay);
    const std::size_t keep = std::min<std::size_t>(
        replay.size(),
        static_cast<std::size_t>(std::ceil(
            replica.replay_fraction * static_cast<double>(replay.size()))));
    replay.resize(keep);

    std::vector<int> part2 = heldout;
    part2.insert(part2.end(), replay.begin(), replay.end());
    std::sort(part2.begin(), part2.end());

    const LatentCodes fresh = init_latent(replica.init_mode, dataset,
                                          replica.latent_dim, replica.seed);
    for (int idx : heldout) codes.Z.row(idx) = fresh.Z.row(idx);

    const PhaseResult phase2 =
        train_phase(model, codes, dataset, part2, replica, replica.epochs_eval,
                    /*theta=*/true, /*latent=*/true);
    report.diverged = report.diverged || phase2.diverged;
    report.curves_eval_per_seed.push_back(phase2.curve);

    const auto rates = success_rates(model, codes, dataset, heldout,
                                     replica.success_tolerance);
    if (auto it = rates.find(holdout); it != rates.end())
      success_sum += it->second;

    if (rep == config.num_seeds - 1) {
      last_model.params() = model.params();
      last_codes = codes;
    }
  }

  // elementwise mean/std over replicas (curves share the epoch count)
  const std::size_t len = report.curves_eval_per_seed.front().size();
  report.curve_eval.assign(len, 0.0);
  report.curve_eval_std.assign(len, 0.0);
  for (const auto& c : report.curves_eval_per_seed)
    for (std::size_t e = 0; e < len; ++e) report.curve_eval[e] += c[e];
  for (std::size_t e = 0; e < len; ++e)
    report.curve_eval[e] /= config.num_seeds;
  for (const auto& c : report.curves_eval_per_seed)
    for (std::size_t e = 0; e < len; ++e)
      report.curve_eval_std[e] +=
          std::pow(c[e] - report.curve_eval[e], 2);
  for (std::size_t e = 0; e < len; ++e)
    report.curve_eval_std[e] =
        std::sqrt(report.curve_eval_std[e] / config.num_seeds);

  std::size_t len1 = curves1.front().size();
  report.curve_train.assign(len1, 0.0);
  for (const auto& c : curves1)
    for (std::size_t e = 0; e < len1; ++e) report.curve_train[e] += c[e];
  for (std::size_t e = 0; e < len1; ++e)
    report.curve_train[e] /= config.num_seeds;

  report.epoch0_eval_loss = report.curve_eval.front();
  report.final_eval_loss = report.curve_eval.back();
  report.final_train_loss = report.curve_train.back();
  report.success_rate[holdout] = success_sum / config.num_seeds;
  report.latent_cluster = cluster_latents(
      last_codes.Z, dataset.primitive_count, /*affine=*/true, /*tau=*/0.0,
      derive_seed(config.seed, 0xC1A6ULL), &truth, config.latent_r2_lo,
      config.latent_r2_hi);
  report.final_latents = last_codes.Z;

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace primcodec
