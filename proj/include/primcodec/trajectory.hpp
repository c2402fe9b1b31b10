#ifndef PRIMCODEC_TRAJECTORY_HPP_
#define PRIMCODEC_TRAJECTORY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace primcodec
{

/// Planar arm with three revolute joints. The last link is the tool; the
/// scripted paths command the tool tip position plus tool angle.
struct ArmConfig
{
  std::vector<double> link_lengths{0.45, 0.45, 0.3};
  std::vector<std::pair<double, double>> joint_limits{
      {-3.2, 3.2}, {-3.2, 3.2}, {-3.2, 3.2}};
  int timesteps = 30;
  int image_height = 16;
  int image_width = 16;
  Eigen::Vector2d home_ee{0.0, 0.62};
  /// Wrist points closer to the base than this are rejected (IK gets
  /// ill-conditioned near the inner boundary of the annulus).
  double min_wrist_radius = 0.15;

  double reach() const;
  void validate() const;
};

enum class PrimitiveKind
{
  kTapTop,        ///< approach from above, tap the object repeatedly
  kPushAway,      ///< approach near side, push radially outward
  kPullBack,      ///< swing to the far side, pull radially inward
  kCircleAround,  ///< approach the rim, trace a full loop around the object
};

/// One end-effector path family. Specific motions are indexed by the target
/// position on a grid and the object size, so every primitive spans a
/// 3-parameter manifold in trajectory space.
struct PrimitiveSpec
{
  PrimitiveKind kind = PrimitiveKind::kTapTop;
  std::string name = "tap_top";
  double x_min = -0.12, x_max = 0.12;
  double y_min = 0.70, y_max = 0.82;
  std::vector<double> object_sizes{0.3, 0.9};
};

std::vector<PrimitiveSpec> default_primitives();

struct Trajectory
{
  /// T x p joint values; dimensionless in [-1,1] once normalized.
  Eigen::MatrixXd motor;
  /// T x (H*W) frames, each row one image flattened row-major, pixels [0,1].
  Eigen::MatrixXd sensory;
  int primitive_id = 0;
  /// (target_x, target_y, object_size)
  Eigen::VectorXd variation;
};

struct JointScale
{
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
};

struct NormalizationRecord
{
  std::vector<JointScale> joints;
  bool empty() const { return joints.empty(); }
};

struct MotionDataset
{
  std::vector<Trajectory> samples;
  NormalizationRecord normalization;
  int primitive_count = 0;
  std::uint64_t seed = 0;
  int timesteps = 0;
  int motor_dim = 0;
  int image_height = 0;
  int image_width = 0;
  /// One line per rejected sample (unreachable target).
  std::vector<std::string> diagnostics;
  /// Generation setup, kept so scripted paths can be replayed for scoring.
  ArmConfig arm;
  std::vector<PrimitiveSpec> primitives;
  bool has_generator = false;

  int size() const { return static_cast<int>(samples.size()); }
};

// ---------------------------------------------------------------------------
// kinematics

/// Tool tip position for 3 joint angles.
Eigen::Vector2d forward_kinematics(const ArmConfig& arm,
                                   const Eigen::Vector3d& joints);

/// Closed-form elbow-up inverse kinematics for tool position + tool angle.
/// Returns nullopt when the pose is out of reach, inside the wrist guard
/// radius, or violates joint limits.
std::optional<Eigen::Vector3d> inverse_kinematics(const ArmConfig& arm,
                                                  const Eigen::Vector2d& ee,
                                                  double tool_angle);

/// Scripted tool path for one motion: T positions and T tool angles.
struct ScriptedPath
{
  Eigen::MatrixX2d positions;  // T x 2
  Eigen::VectorXd tool_angles; // T
};
ScriptedPath scripted_path(const PrimitiveSpec& spec,
                           const Eigen::Vector2d& target, double object_size,
                           int timesteps, const ArmConfig& arm);

/// Timesteps at which the tool must meet the scripted path for the motion to
/// count as successful (contact frames and final pose).
std::vector<int> key_frames(const PrimitiveSpec& spec, int timesteps);

/// Disc radius rendered/contacted for an object of the given size knob.
double object_radius(double object_size);

// ---------------------------------------------------------------------------
// operations

/// Generates K * samples_per_primitive trajectories (raw joint angles:
/// callers normalize afterwards, generate_dataset already does). Unreachable
/// targets are skipped with a diagnostic; a fully unreachable primitive
/// throws. Deterministic in (arm, primitives, seed).
MotionDataset generate_dataset(const ArmConfig& arm,
                               const std::vector<PrimitiveSpec>& primitives,
                               int samples_per_primitive, std::uint64_t seed);

/// Per-joint affine map of the whole dataset onto [-1,1]. Constant joints map
/// to 0 and are flagged in the record.
MotionDataset normalize_joint_angles(const MotionDataset& raw);

/// Inverse of normalize_joint_angles for one motor matrix.
Eigen::MatrixXd denormalize_motor(const Eigen::MatrixXd& motor,
                                  const NormalizationRecord& record);

/// Stretches T0 samples to T by zero padding the DFT spectrum at the Nyquist
/// midpoint. T0 must be even, T >= T0. Columns are resampled independently.
Eigen::MatrixXd resample_frequency_domain(const Eigen::MatrixXd& motor, int T);

/// Time-major flattening: (m_11..m_1p, m_21..m_2p, ...).
Eigen::VectorXd flatten_motor(const Eigen::MatrixXd& motor);
Eigen::MatrixXd unflatten_motor(const Eigen::VectorXd& flat, int timesteps,
                                int motor_dim);

/// Deterministic grayscale rendering of the arm plus an object disc.
/// object_size here is the disc radius in workspace units; <= 0 draws no
/// object. Intensity is continuous in the joint angles.
Eigen::MatrixXd render_sensory(const ArmConfig& arm,
                               const Eigen::Vector3d& joints,
                               const Eigen::Vector2d& target,
                               double object_size);

}  // namespace primcodec

#endif  // PRIMCODEC_TRAJECTORY_HPP_
