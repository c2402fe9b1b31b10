#include "primcodec/mtrnn.hpp"

#include <cmath>
#include <stdexcept>

#include "primcodec/errors.hpp"
#include "primcodec/rng.hpp"
#include "primcodec/threading.hpp"

namespace primcodec
{

namespace
{

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kTinyVariance = 1e-30;

/// Layer norm with exact unit variance (no epsilon). Constant inputs map to
/// zero before gain/bias; the backward treats that branch as flat.
struct LayerNormCache
{
  VectorXd xhat;
  double inv_sigma = 0.0;
};

VectorXd layer_norm_forward(const VectorXd& h, const VectorXd& gain,
                            const VectorXd& bias, LayerNormCache& cache)
{
  const double mu = h.mean();
  const VectorXd centered = h.array() - mu;
  const double var = centered.squaredNorm() / h.size();
  if (var < kTinyVariance) {
    cache.xhat = VectorXd::Zero(h.size());
    cache.inv_sigma = 0.0;
    return bias;
  }
  cache.inv_sigma = 1.0 / std::sqrt(var);
  cache.xhat = centered * cache.inv_sigma;
  return (gain.array() * cache.xhat.array() + bias.array()).matrix();
}

/// Returns dL/dh given dL/dout; accumulates gain/bias gradients.
VectorXd layer_norm_backward(const VectorXd& g_out, const VectorXd& gain,
                             const LayerNormCache& cache, VectorXd& g_gain,
                             VectorXd& g_bias)
{
  g_gain.array() += g_out.array() * cache.xhat.array();
  g_bias += g_out;
  if (cache.inv_sigma == 0.0) return VectorXd::Zero(g_out.size());
  const VectorXd g_xhat = (gain.array() * g_out.array()).matrix();
  const double mean_g = g_xhat.mean();
  const double mean_gx = (g_xhat.array() * cache.xhat.array()).mean();
  return cache.inv_sigma *
         (g_xhat.array() - mean_g - cache.xhat.array() * mean_gx).matrix();
}

}  // namespace

void MtrnnArch::validate() const
{
  if (layer_sizes.empty()) throw ConfigError("arch: no layers");
  if (timescales.size() != layer_sizes.size())
    throw ConfigError("arch: timescales must match layer count");
  for (int n : layer_sizes)
    if (n < 1) throw ConfigError("arch: layer sizes must be >= 1");
  for (double tau : timescales)
    if (tau < 1.0) throw ConfigError("arch: timescales must be >= 1");
  if (latent_dim < 1 || pb_hidden < 1 || pb_dim < 1 || motor_hidden < 1 ||
      sensory_hidden < 1 || motor_dim < 1 || sensory_dim < 1 || timesteps < 1)
    throw ConfigError("arch: all dimensions must be >= 1");
}

MtrnnModel::MtrnnModel(MtrnnArch arch) : arch_(std::move(arch))
{
  arch_.validate();
  using Init = ParamBlock::Init;
  int offset = 0;
  auto add = [&](const std::string& name, int rows, int cols, Init init) {
    layout_.push_back({name, offset, rows, cols, init});
    offset += rows * cols;
  };
  for (int i = 0; i < arch_.layers(); ++i) {
    const int n = arch_.layer_sizes[i];
    const int nu = arch_.context_dim(i);
    const std::string tag = std::to_string(i + 1);
    add("W" + tag, n, n, Init::kFanInGaussian);
    add("U" + tag, n, nu, Init::kFanInGaussian);
    add("A" + tag, n, n * nu, Init::kZero);
    add("b" + tag, n, 1, Init::kZero);
    add("ln_gain" + tag, n, 1, Init::kOne);
    add("ln_bias" + tag, n, 1, Init::kZero);
    add("G" + tag, n, arch_.pb_dim, Init::kFanInGaussian);
    add("c" + tag, n, 1, Init::kZero);
  }
  add("pb_w1", arch_.pb_hidden, arch_.latent_dim, Init::kFanInGaussian);
  add("pb_b1", arch_.pb_hidden, 1, Init::kZero);
  add("pb_w2", arch_.pb_dim, arch_.pb_hidden, Init::kFanInGaussian);
  add("pb_b2", arch_.pb_dim, 1, Init::kZero);
  add("motor_w1", arch_.motor_hidden, arch_.layer_sizes[0], Init::kFanInGaussian);
  add("motor_b1", arch_.motor_hidden, 1, Init::kZero);
  add("motor_w2", arch_.motor_dim, arch_.motor_hidden, Init::kFanInGaussian);
  add("motor_b2", arch_.motor_dim, 1, Init::kZero);
  add("sensory_w1", arch_.sensory_hidden, arch_.layer_sizes[0],
      Init::kFanInGaussian);
  add("sensory_b1", arch_.sensory_hidden, 1, Init::kZero);
  add("sensory_w2", arch_.sensory_dim, arch_.sensory_hidden,
      Init::kFanInGaussian);
  add("sensory_b2", arch_.sensory_dim, 1, Init::kZero);
  param_count_ = offset;
  theta_ = VectorXd::Zero(param_count_);
  for (auto& blockinfo : layout_)
    if (blockinfo.init == Init::kOne)
      theta_.segment(blockinfo.offset, blockinfo.size()).setOnes();
}

Eigen::Map<const MatrixXd> MtrnnModel::block(const std::string& name) const
{
  for (const auto& b : layout_)
    if (b.name == name)
      return {theta_.data() + b.offset, b.rows, b.cols};
  throw ConfigError("mtrnn: unknown parameter block '" + name + "'");
}

Eigen::Map<MatrixXd> MtrnnModel::block(const std::string& name)
{
  for (const auto& b : layout_)
    if (b.name == name)
      return {theta_.data() + b.offset, b.rows, b.cols};
  throw ConfigError("mtrnn: unknown parameter block '" + name + "'");
}

void MtrnnModel::init_params(std::uint64_t seed)
{
  RandomStream stream(derive_seed(seed, 0x4d54524eULL));
  for (const auto& b : layout_) {
    auto segment = theta_.segment(b.offset, b.size());
    switch (b.init) {
      case ParamBlock::Init::kZero:
        segment.setZero();
        break;
      case ParamBlock::Init::kOne:
        segment.setOnes();
        break;
      case ParamBlock::Init::kFanInGaussian: {
        const double sd = 1.0 / std::sqrt(static_cast<double>(b.cols));
        for (int i = 0; i < b.size(); ++i) segment[i] = sd * stream.gaussian();
        break;
      }
    }
  }
}

namespace
{

/// Integer offsets resolved once per call; all hot-loop access goes through
/// Eigen maps built from these.
struct LayerOffsets
{
  int W, U, A, b, gain, bias, G, c;
  int n, nu;
};

struct Offsets
{
  std::vector<LayerOffsets> layer;
  int pb_w1, pb_b1, pb_w2, pb_b2;
  int motor_w1, motor_b1, motor_w2, motor_b2;
  int sensory_w1, sensory_b1, sensory_w2, sensory_b2;
};

Offsets resolve_offsets(const MtrnnArch& arch,
                        const std::vector<ParamBlock>& layout)
{
  Offsets off;
  int idx = 0;
  auto next = [&]() { return layout[idx++].offset; };
  off.layer.resize(arch.layers());
  for (int i = 0; i < arch.layers(); ++i) {
    LayerOffsets& lo = off.layer[i];
    lo.W = next();
    lo.U = next();
    lo.A = next();
    lo.b = next();
    lo.gain = next();
    lo.bias = next();
    lo.G = next();
    lo.c = next();
    lo.n = arch.layer_sizes[i];
    lo.nu = arch.context_dim(i);
  }
  off.pb_w1 = next();
  off.pb_b1 = next();
  off.pb_w2 = next();
  off.pb_b2 = next();
  off.motor_w1 = next();
  off.motor_b1 = next();
  off.motor_w2 = next();
  off.motor_b2 = next();
  off.sensory_w1 = next();
  off.sensory_b1 = next();
  off.sensory_w2 = next();
  off.sensory_b2 = next();
  return off;
}

Map<const MatrixXd> mat(const VectorXd& theta, int offset, int rows, int cols)
{
  return {theta.data() + offset, rows, cols};
}

Map<const VectorXd> vec(const VectorXd& theta, int offset, int size)
{
  return {theta.data() + offset, size};
}

Map<MatrixXd> mat(VectorXd& theta, int offset, int rows, int cols)
{
  return {theta.data() + offset, rows, cols};
}

Map<VectorXd> vec(VectorXd& theta, int offset, int size)
{
  return {theta.data() + offset, size};
}

/// Everything the backward pass needs from one forward unroll.
struct SampleCache
{
  VectorXd pb_hidden_act;            // tanh of pb hidden layer
  VectorXd pb;                       // p(z)
  std::vector<MatrixXd> states;      // per layer: n x (T+1), col t
  std::vector<MatrixXd> xhat;        // per layer: n x (T+1)
  std::vector<VectorXd> inv_sigma;   // per layer: T+1
  MatrixXd motor_hidden_act;         // motor_hidden x T
  MatrixXd motor;                    // p x T
  MatrixXd sensory_hidden_act;       // sensory_hidden x T
  MatrixXd sensory;                  // spix x T
};

void run_forward(const MtrnnArch& arch, const Offsets& off,
                 const VectorXd& theta, const VectorXd& z, int T,
                 SampleCache& cache)
{
  const int layers = arch.layers();

  // p(z): two tanh layers
  cache.pb_hidden_act =
      (mat(theta, off.pb_w1, arch.pb_hidden, arch.latent_dim) * z +
       vec(theta, off.pb_b1, arch.pb_hidden))
          .array()
          .tanh();
  cache.pb = (mat(theta, off.pb_w2, arch.pb_dim, arch.pb_hidden) *
                  cache.pb_hidden_act +
              vec(theta, off.pb_b2, arch.pb_dim))
                 .array()
                 .tanh();

  cache.states.resize(layers);
  cache.xhat.resize(layers);
  cache.inv_sigma.resize(layers);
  for (int i = 0; i < layers; ++i) {
    cache.states[i].resize(off.layer[i].n, T + 1);
    cache.xhat[i].resize(off.layer[i].n, T + 1);
    cache.inv_sigma[i].resize(T + 1);
  }

  // initial states d_0 = LN(G p(z) + c)
  for (int i = 0; i < layers; ++i) {
    const LayerOffsets& lo = off.layer[i];
    const VectorXd pre =
        mat(theta, lo.G, lo.n, arch.pb_dim) * cache.pb + vec(theta, lo.c, lo.n);
    LayerNormCache ln;
    cache.states[i].col(0) = layer_norm_forward(
        pre, vec(theta, lo.gain, lo.n), vec(theta, lo.bias, lo.n), ln);
    cache.xhat[i].col(0) = ln.xhat;
    cache.inv_sigma[i][0] = ln.inv_sigma;
  }

  VectorXd kron, pre, h;
  for (int t = 1; t <= T; ++t) {
    for (int i = layers - 1; i >= 0; --i) {
      const LayerOffsets& lo = off.layer[i];
      const auto d_prev = cache.states[i].col(t - 1);
      Eigen::Ref<const VectorXd> u =
          i == layers - 1
              ? Eigen::Ref<const VectorXd>(cache.pb)
              : Eigen::Ref<const VectorXd>(cache.states[i + 1].col(t));
      kron.resize(lo.n * lo.nu);
      for (int l = 0; l < lo.n; ++l)
        kron.segment(l * lo.nu, lo.nu) = d_prev[l] * u;
      pre.noalias() = mat(theta, lo.W, lo.n, lo.n) * d_prev;
      pre.noalias() += mat(theta, lo.U, lo.n, lo.nu) * u;
      pre.noalias() += mat(theta, lo.A, lo.n, lo.n * lo.nu) * kron;
      pre += vec(theta, lo.b, lo.n);
      const double leak = 1.0 / arch.timescales[i];
      h = (1.0 - leak) * d_prev + leak * pre;
      LayerNormCache ln;
      cache.states[i].col(t) = layer_norm_forward(
          h, vec(theta, lo.gain, lo.n), vec(theta, lo.bias, lo.n), ln);
      cache.xhat[i].col(t) = ln.xhat;
      cache.inv_sigma[i][t] = ln.inv_sigma;
      if (!cache.states[i].col(t).allFinite())
        throw NumericError("mtrnn forward: non-finite state at step " +
                           std::to_string(t) + " layer " + std::to_string(i + 1));
    }
  }

  // output heads, batched over time: columns of D1 are d_t^{(1)}, t = 1..T
  const auto d1 = cache.states[0].rightCols(T);
  cache.motor_hidden_act =
      ((mat(theta, off.motor_w1, arch.motor_hidden, arch.layer_sizes[0]) * d1)
           .colwise() +
       vec(theta, off.motor_b1, arch.motor_hidden))
          .array()
          .tanh();
  cache.motor = ((mat(theta, off.motor_w2, arch.motor_dim, arch.motor_hidden) *
                  cache.motor_hidden_act)
                     .colwise() +
                 vec(theta, off.motor_b2, arch.motor_dim))
                    .array()
                    .tanh();
  cache.sensory_hidden_act =
      ((mat(theta, off.sensory_w1, arch.sensory_hidden, arch.layer_sizes[0]) *
        d1)
           .colwise() +
       vec(theta, off.sensory_b1, arch.sensory_hidden))
          .array()
          .tanh();
  const MatrixXd sensory_pre =
      (mat(theta, off.sensory_w2, arch.sensory_dim, arch.sensory_hidden) *
       cache.sensory_hidden_act)
          .colwise() +
      vec(theta, off.sensory_b2, arch.sensory_dim);
  cache.sensory = (1.0 / (1.0 + (-sensory_pre.array()).exp())).matrix();
}

/// Per-sample reverse pass. Adds this sample's parameter gradients into
/// g_theta and returns dL/dz.
VectorXd run_backward(const MtrnnArch& arch, const Offsets& off,
                      const VectorXd& theta, const VectorXd& z,
                      const SampleCache& cache, const Trajectory& target,
                      const LossWeights& weights, int T, VectorXd& g_theta,
                      double& loss_out)
{
  const int layers = arch.layers();

  // loss and output gradients (targets are stored time-major, heads are
  // feature x time)
  const MatrixXd motor_err = cache.motor - target.motor.transpose();
  const MatrixXd sensory_err = cache.sensory - target.sensory.transpose();
  loss_out = weights.motor * motor_err.squaredNorm() +
             weights.sensory * sensory_err.squaredNorm();

  const MatrixXd g_motor = 2.0 * weights.motor * motor_err;
  const MatrixXd g_sensory = 2.0 * weights.sensory * sensory_err;

  // motor head
  const MatrixXd g_motor_pre2 =
      (g_motor.array() * (1.0 - cache.motor.array().square())).matrix();
  mat(g_theta, off.motor_w2, arch.motor_dim, arch.motor_hidden).noalias() +=
      g_motor_pre2 * cache.motor_hidden_act.transpose();
  vec(g_theta, off.motor_b2, arch.motor_dim) += g_motor_pre2.rowwise().sum();
  const MatrixXd g_motor_hidden =
      mat(theta, off.motor_w2, arch.motor_dim, arch.motor_hidden).transpose() *
      g_motor_pre2;
  const MatrixXd g_motor_pre1 =
      (g_motor_hidden.array() * (1.0 - cache.motor_hidden_act.array().square()))
          .matrix();
  const auto d1 = cache.states[0].rightCols(T);
  mat(g_theta, off.motor_w1, arch.motor_hidden, arch.layer_sizes[0])
      .noalias() += g_motor_pre1 * d1.transpose();
  vec(g_theta, off.motor_b1, arch.motor_hidden) += g_motor_pre1.rowwise().sum();

  // sensory head
  const MatrixXd g_sensory_pre2 =
      (g_sensory.array() * cache.sensory.array() *
       (1.0 - cache.sensory.array()))
          .matrix();
  mat(g_theta, off.sensory_w2, arch.sensory_dim, arch.sensory_hidden)
      .noalias() += g_sensory_pre2 * cache.sensory_hidden_act.transpose();
  vec(g_theta, off.sensory_b2, arch.sensory_dim) +=
      g_sensory_pre2.rowwise().sum();
  const MatrixXd g_sensory_hidden =
      mat(theta, off.sensory_w2, arch.sensory_dim, arch.sensory_hidden)
          .transpose() *
      g_sensory_pre2;
  const MatrixXd g_sensory_pre1 = (g_sensory_hidden.array() *
                                   (1.0 - cache.sensory_hidden_act.array()
                                              .square()))
                                      .matrix();
  mat(g_theta, off.sensory_w1, arch.sensory_hidden, arch.layer_sizes[0])
      .noalias() += g_sensory_pre1 * d1.transpose();
  vec(g_theta, off.sensory_b1, arch.sensory_hidden) +=
      g_sensory_pre1.rowwise().sum();

  // dL/dd_t^{(1)} from both heads, for t = 1..T
  MatrixXd g_d1_heads =
      mat(theta, off.motor_w1, arch.motor_hidden, arch.layer_sizes[0])
          .transpose() *
      g_motor_pre1;
  g_d1_heads.noalias() +=
      mat(theta, off.sensory_w1, arch.sensory_hidden, arch.layer_sizes[0])
          .transpose() *
      g_sensory_pre1;

  // backward through time; g_state[i] holds dL/dd_t^{(i)} for the current t
  std::vector<VectorXd> g_state(layers);
  for (int i = 0; i < layers; ++i)
    g_state[i] = VectorXd::Zero(off.layer[i].n);
  VectorXd g_pb = VectorXd::Zero(arch.pb_dim);

  VectorXd g_h, g_bracket, kron, g_kron;
  for (int t = T; t >= 1; --t) {
    g_state[0] += g_d1_heads.col(t - 1);
    for (int i = 0; i < layers; ++i) {
      const LayerOffsets& lo = off.layer[i];
      LayerNormCache ln;
      ln.xhat = cache.xhat[i].col(t);
      ln.inv_sigma = cache.inv_sigma[i][t];
      auto g_gain = vec(g_theta, lo.gain, lo.n);
      auto g_bias = vec(g_theta, lo.bias, lo.n);
      VectorXd g_gain_local = VectorXd::Zero(lo.n);
      VectorXd g_bias_local = VectorXd::Zero(lo.n);
      g_h = layer_norm_backward(g_state[i], vec(theta, lo.gain, lo.n), ln,
                                g_gain_local, g_bias_local);
      g_gain += g_gain_local;
      g_bias += g_bias_local;

      const double leak = 1.0 / arch.timescales[i];
      const auto d_prev = cache.states[i].col(t - 1);
      Eigen::Ref<const VectorXd> u =
          i == layers - 1
              ? Eigen::Ref<const VectorXd>(cache.pb)
              : Eigen::Ref<const VectorXd>(cache.states[i + 1].col(t));

      g_bracket = leak * g_h;
      kron.resize(lo.n * lo.nu);
      for (int l = 0; l < lo.n; ++l)
        kron.segment(l * lo.nu, lo.nu) = d_prev[l] * u;

      mat(g_theta, off.layer[i].W, lo.n, lo.n).noalias() +=
          g_bracket * d_prev.transpose();
      mat(g_theta, off.layer[i].U, lo.n, lo.nu).noalias() +=
          g_bracket * u.transpose();
      mat(g_theta, off.layer[i].A, lo.n, lo.n * lo.nu).noalias() +=
          g_bracket * kron.transpose();
      vec(g_theta, off.layer[i].b, lo.n) += g_bracket;

      g_kron.noalias() =
          mat(theta, off.layer[i].A, lo.n, lo.n * lo.nu).transpose() *
          g_bracket;
      // bilinear term: split dL/dkron back into d_prev and u parts
      VectorXd g_prev_bilinear = VectorXd::Zero(lo.n);
      VectorXd g_u = VectorXd::Zero(lo.nu);
      for (int l = 0; l < lo.n; ++l) {
        const auto seg = g_kron.segment(l * lo.nu, lo.nu);
        g_prev_bilinear[l] = seg.dot(u);
        g_u += d_prev[l] * seg;
      }
      g_u.noalias() +=
          mat(theta, off.layer[i].U, lo.n, lo.nu).transpose() * g_bracket;

      // gradient into d_{t-1}^{(i)}: the leak shortcut plus W and A paths
      g_state[i] = (1.0 - leak) * g_h;
      g_state[i].noalias() +=
          mat(theta, off.layer[i].W, lo.n, lo.n).transpose() * g_bracket;
      g_state[i] += g_prev_bilinear;

      if (i == layers - 1)
        g_pb += g_u;
      else
        g_state[i + 1] += g_u;
    }
  }

  // initial states d_0 = LN(G pb + c)
  for (int i = 0; i < layers; ++i) {
    const LayerOffsets& lo = off.layer[i];
    LayerNormCache ln;
    ln.xhat = cache.xhat[i].col(0);
    ln.inv_sigma = cache.inv_sigma[i][0];
    VectorXd g_gain_local = VectorXd::Zero(lo.n);
    VectorXd g_bias_local = VectorXd::Zero(lo.n);
    g_h = layer_norm_backward(g_state[i], vec(theta, lo.gain, lo.n), ln,
                              g_gain_local, g_bias_local);
    vec(g_theta, lo.gain, lo.n) += g_gain_local;
    vec(g_theta, lo.bias, lo.n) += g_bias_local;
    mat(g_theta, lo.G, lo.n, arch.pb_dim).noalias() +=
        g_h * cache.pb.transpose();
    vec(g_theta, lo.c, lo.n) += g_h;
    g_pb.noalias() += mat(theta, lo.G, lo.n, arch.pb_dim).transpose() * g_h;
  }

  // p(z) MLP
  const VectorXd g_pb_pre2 =
      (g_pb.array() * (1.0 - cache.pb.array().square())).matrix();
  mat(g_theta, off.pb_w2, arch.pb_dim, arch.pb_hidden).noalias() +=
      g_pb_pre2 * cache.pb_hidden_act.transpose();
  vec(g_theta, off.pb_b2, arch.pb_dim) += g_pb_pre2;
  const VectorXd g_pb_hidden =
      mat(theta, off.pb_w2, arch.pb_dim, arch.pb_hidden).transpose() *
      g_pb_pre2;
  const VectorXd g_pb_pre1 =
      (g_pb_hidden.array() * (1.0 - cache.pb_hidden_act.array().square()))
          .matrix();
  mat(g_theta, off.pb_w1, arch.pb_hidden, arch.latent_dim).noalias() +=
      g_pb_pre1 * z.transpose();
  vec(g_theta, off.pb_b1, arch.pb_hidden) += g_pb_pre1;
  return mat(theta, off.pb_w1, arch.pb_hidden, arch.latent_dim).transpose() *
         g_pb_pre1;
}

}  // namespace

ForwardResult MtrnnModel::forward(const VectorXd& z, int timesteps) const
{
  if (z.size() != arch_.latent_dim)
    throw ConfigError("mtrnn forward: latent size mismatch");
  if (!z.allFinite()) throw NumericError("mtrnn forward: non-finite latent");
  const int T = timesteps > 0 ? timesteps : arch_.timesteps;
  const Offsets off = resolve_offsets(arch_, layout_);
  SampleCache cache;
  run_forward(arch_, off, theta_, z, T, cache);

  ForwardResult out;
  out.motor = cache.motor.transpose();
  out.sensory = cache.sensory.transpose();
  out.states.reserve(arch_.layers());
  for (int i = 0; i < arch_.layers(); ++i)
    out.states.push_back(cache.states[i].transpose());
  return out;
}

double MtrnnModel::loss(const LatentCodes& codes,
                        const std::vector<BatchItem>& batch,
                        const LossWeights& weights) const
{
  if (batch.empty()) throw ConfigError("mtrnn loss: empty batch");
  const Offsets off = resolve_offsets(arch_, layout_);
  const int T = arch_.timesteps;
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), [&](std::size_t bi) {
    const BatchItem& item = batch[bi];
    if (item.index < 0 || item.index >= codes.Z.rows())
      throw ConfigError("mtrnn loss: batch index out of range");
    SampleCache cache;
    run_forward(arch_, off, theta_, codes.Z.row(item.index).transpose(), T,
                cache);
    const MatrixXd motor_err = cache.motor - item.target->motor.transpose();
    const MatrixXd sensory_err =
        cache.sensory - item.target->sensory.transpose();
    losses[bi] = weights.motor * motor_err.squaredNorm() +
                 weights.sensory * sensory_err.squaredNorm();
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total;
}

BatchGradients MtrnnModel::gradients(const LatentCodes& codes,
                                     const std::vector<BatchItem>& batch,
                                     const LossWeights& weights) const
{
  if (batch.empty()) throw ConfigError("mtrnn gradients: empty batch");
  const Offsets off = resolve_offsets(arch_, layout_);
  const int T = arch_.timesteps;

  std::vector<VectorXd> theta_parts(batch.size());
  std::vector<VectorXd> z_parts(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), [&](std::size_t bi) {
    const BatchItem& item = batch[bi];
    if (item.index < 0 || item.index >= codes.Z.rows())
      throw ConfigError("mtrnn gradients: batch index out of range");
    const VectorXd z = codes.Z.row(item.index).transpose();
    SampleCache cache;
    run_forward(arch_, off, theta_, z, T, cache);
    theta_parts[bi] = VectorXd::Zero(param_count_);
    z_parts[bi] = run_backward(arch_, off, theta_, z, cache, *item.target,
                               weights, T, theta_parts[bi], losses[bi]);
  });

  BatchGradients grads;
  grads.theta = VectorXd::Zero(param_count_);
  grads.latent.resize(batch.size(), arch_.latent_dim);
  // fixed batch-order reduction keeps results identical at any thread count
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    grads.loss += losses[bi];
    grads.theta += theta_parts[bi];
    grads.latent.row(bi) = z_parts[bi].transpose();
  }
  return grads;
}

double default_sensory_weight(const MtrnnArch& arch)
{
  return static_cast<double>(arch.motor_dim) / arch.sensory_dim;
}

}  // namespace primcodec
