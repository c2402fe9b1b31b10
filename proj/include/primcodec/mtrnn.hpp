#ifndef PRIMCODEC_MTRNN_HPP_
#define PRIMCODEC_MTRNN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "primcodec/trajectory.hpp"

namespace primcodec
{

/// Multi-timescale RNN with second-order (multiplicative) vertical
/// connections and a parametric-bias latent input. Layer 0 is the fastest
/// layer and drives both output heads; the top layer is driven by p(z).
struct MtrnnArch
{
  std::vector<int> layer_sizes{32, 12};     // fastest first
  std::vector<double> timescales{2.0, 10.0};
  int latent_dim = 40;       // q
  int pb_hidden = 32;        // hidden width of the p(z) MLP
  int pb_dim = 8;            // output width of p(z)
  int motor_hidden = 32;
  int sensory_hidden = 32;
  int motor_dim = 3;         // p
  int sensory_dim = 256;     // H * W
  int timesteps = 30;        // T

  int layers() const { return static_cast<int>(layer_sizes.size()); }
  /// Input width of layer i's top-down connection.
  int context_dim(int layer) const
  {
    return layer + 1 < layers() ? layer_sizes[layer + 1] : pb_dim;
  }
  void validate() const;
};

struct ParamBlock
{
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 0;
  enum class Init { kFanInGaussian, kZero, kOne } init = Init::kZero;
  int size() const { return rows * cols; }
};

/// Per-sample trainable latent codes, one row per dataset sample.
struct LatentCodes
{
  Eigen::MatrixXd Z;  // n x q
};

struct ForwardResult
{
  Eigen::MatrixXd motor;               // T x p
  Eigen::MatrixXd sensory;             // T x (H*W)
  std::vector<Eigen::MatrixXd> states; // per layer: (T+1) x n_i, row 0 = d_0
};

struct LossWeights
{
  double motor = 1.0;
  double sensory = 1.0;
};

/// One batch entry: row index into Z plus the target trajectory.
struct BatchItem
{
  int index = 0;
  const Trajectory* target = nullptr;
};

struct BatchGradients
{
  double loss = 0.0;
  Eigen::VectorXd theta;   // same layout as params()
  Eigen::MatrixXd latent;  // batch.size() x q, row order follows the batch
};

class MtrnnModel
{
public:
  explicit MtrnnModel(MtrnnArch arch);

  const MtrnnArch& arch() const { return arch_; }
  const std::vector<ParamBlock>& layout() const { return layout_; }
  int param_count() const { return param_count_; }

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  /// View of one named parameter block.
  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> block(const std::string& name);

  /// Scaled-Gaussian fan-in init for weight matrices; the multiplicative
  /// tensors start at zero, biases at zero, layer-norm gains at one.
  void init_params(std::uint64_t seed);

  /// Unrolls the network for `timesteps` steps (defaults to arch.timesteps).
  ForwardResult forward(const Eigen::VectorXd& z, int timesteps = -1) const;

  /// Sum of squared errors over the batch, weighted per modality.
  double loss(const LatentCodes& codes, const std::vector<BatchItem>& batch,
              const LossWeights& weights) const;

  /// Reverse-mode gradients of loss() for theta and the batch rows of Z.
  BatchGradients gradients(const LatentCodes& codes,
                           const std::vector<BatchItem>& batch,
                           const LossWeights& weights) const;

private:
  MtrnnArch arch_;
  std::vector<ParamBlock> layout_;
  int param_count_ = 0;
  Eigen::VectorXd theta_;
};

/// Modality weight that equalizes the motor and sensory terms at init:
/// (p*T) / (H*W*T).
double default_sensory_weight(const MtrnnArch& arch);

}  // namespace primcodec

#endif  // PRIMCODEC_MTRNN_HPP_
