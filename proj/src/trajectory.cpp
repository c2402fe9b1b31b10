#include "primcodec/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "primcodec/errors.hpp"
#include "primcodec/threading.hpp"

namespace primcodec
{

namespace
{

constexpr double kPi = std::numbers::pi;

/// Quintic ease with zero velocity and acceleration at both ends.
double min_jerk(double s)
{
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double polar_angle(const Eigen::Vector2d& p) { return std::atan2(p.y(), p.x()); }

}  // namespace

double ArmConfig::reach() const
{
  double r = 0.0;
  for (double l : link_lengths) r += l;
  return r;
}

void ArmConfig::validate() const
{
  if (link_lengths.empty()) throw ConfigError("arm: link_lengths empty");
  for (double l : link_lengths)
    if (l <= 0.0) throw ConfigError("arm: link lengths must be positive");
  if (joint_limits.size() != link_lengths.size())
    throw ConfigError("arm: joint_limits size mismatch");
  for (const auto& [lo, hi] : joint_limits)
    if (!(lo < hi)) throw ConfigError("arm: joint limit lo must be < hi");
  if (timesteps < 2) throw ConfigError("arm: timesteps must be >= 2");
  if (image_height < 8 || image_width < 8)
    throw ConfigError("arm: image size must be at least 8x8");
}

std::vector<PrimitiveSpec> default_primitives()
{
  std::vector<PrimitiveSpec> prims(4);
  prims[0] = {PrimitiveKind::kTapTop, "tap_top"};
  prims[1] = {PrimitiveKind::kPushAway, "push_away"};
  prims[2] = {PrimitiveKind::kPullBack, "pull_back"};
  prims[3] = {PrimitiveKind::kCircleAround, "circle_around"};
  return prims;
}

double object_radius(double object_size) { return 0.04 + 0.06 * object_size; }

Eigen::Vector2d forward_kinematics(const ArmConfig& arm,
                                   const Eigen::Vector3d& joints)
{
  const auto& L = arm.link_lengths;
  const double a1 = joints[0];
  const double a2 = a1 + joints[1];
  const double a3 = a2 + joints[2];
  return {L[0] * std::cos(a1) + L[1] * std::cos(a2) + L[2] * std::cos(a3),
          L[0] * std::sin(a1) + L[1] * std::sin(a2) + L[2] * std::sin(a3)};
}

std::optional<Eigen::Vector3d> inverse_kinematics(const ArmConfig& arm,
                                                  const Eigen::Vector2d& ee,
                                                  double tool_angle)
{
  const auto& L = arm.link_lengths;
  const double wx = ee.x() - L[2] * std::cos(tool_angle);
  const double wy = ee.y() - L[2] * std::sin(tool_angle);
  const double d2 = wx * wx + wy * wy;
  if (d2 < arm.min_wrist_radius * arm.min_wrist_radius) return std::nullopt;
  const double c2 = (d2 - L[0] * L[0] - L[1] * L[1]) / (2.0 * L[0] * L[1]);
  if (c2 < -1.0 || c2 > 1.0) return std::nullopt;
  const double q2 = std::acos(c2);  // elbow-up branch
  const double q1 = std::atan2(wy, wx) -
                    std::atan2(L[1] * std::sin(q2), L[0] + L[1] * std::cos(q2));
  const double q3 = tool_angle - q1 - q2;
  Eigen::Vector3d q{q1, q2, q3};
  for (int j = 0; j < 3; ++j) {
    const auto& [lo, hi] = arm.joint_limits[j];
    if (q[j] < lo || q[j] > hi) return std::nullopt;
  }
  return q;
}

ScriptedPath scripted_path(const PrimitiveSpec& spec,
                           const Eigen::Vector2d& target, double object_size,
                           int timesteps, const ArmConfig& arm)
{
  const int T = timesteps;
  const double obj_r = object_radius(object_size);
  const Eigen::Vector2d u = target.normalized();
  const Eigen::Vector2d perp{-u.y(), u.x()};
  const Eigen::Vector2d home = arm.home_ee;

  ScriptedPath path;
  path.positions.resize(T, 2);
  path.tool_angles.resize(T);

  auto approach = [&](const Eigen::Vector2d& goal, int span, int t) {
    const double s = min_jerk(static_cast<double>(t) / (span - 1));
    return Eigen::Vector2d(home + s * (goal - home));
  };

  switch (spec.kind) {
    case PrimitiveKind::kTapTop: {
      const int Ta = static_cast<int>(std::lround(0.35 * T));
      const Eigen::Vector2d contact = target + obj_r * Eigen::Vector2d(0, 1);
      const double amp = 0.06 + 0.05 * object_size;
      for (int t = 0; t < T; ++t) {
        Eigen::Vector2d p;
        if (t < Ta) {
          p = approach(contact, Ta, t);
        } else {
          const double s = static_cast<double>(t - Ta + 1) / (T - Ta);
          const double lift = amp * std::pow(std::sin(kPi * 3.0 * s), 2);
          p = contact + lift * Eigen::Vector2d(0, 1);
        }
        path.positions.row(t) = p;
        path.tool_angles[t] = polar_angle(p) + 0.9;
      }
      break;
    }
    case PrimitiveKind::kPushAway: {
      const int Ta = static_cast<int>(std::lround(0.55 * T));
      const Eigen::Vector2d contact = target - obj_r * u;
      const double dist = 0.20 + 0.12 * object_size;
      for (int t = 0; t < T; ++t) {
        Eigen::Vector2d p;
        if (t < Ta) {
          p = approach(contact, Ta, t);
        } else {
          const double s = min_jerk(static_cast<double>(t - Ta + 1) / (T - Ta));
          p = contact + s * dist * u;
        }
        path.positions.row(t) = p;
        path.tool_angles[t] = polar_angle(p) - 0.5;
      }
      break;
    }
    case PrimitiveKind::kPullBack: {
      const int T1 = static_cast<int>(std::lround(0.3 * T));
      const int T2 = static_cast<int>(std::lround(0.55 * T));
      const Eigen::Vector2d via = target + 3.0 * obj_r * perp;
      const Eigen::Vector2d contact = target + obj_r * u;
      const double dist = 0.12 + 0.07 * object_size;
      for (int t = 0; t < T; ++t) {
        Eigen::Vector2d p;
        if (t < T1) {
          p = approach(via, T1, t);
        } else if (t < T2) {
          const double s = min_jerk(static_cast<double>(t - T1) / (T2 - T1 - 1));
          p = via + s * (contact - via);
        } else {
          const double s = min_jerk(static_cast<double>(t - T2 + 1) / (T - T2));
          p = contact - s * dist * u;
        }
        path.positions.row(t) = p;
        path.tool_angles[t] = polar_angle(p) + 0.15;
      }
      break;
    }
    case PrimitiveKind::kCircleAround: {
      const int Ta = static_cast<int>(std::lround(0.4 * T));
      const double radius = obj_r + 0.07;
      const double theta0 = kPi / 2.0;
      const Eigen::Vector2d start =
          target + radius * Eigen::Vector2d(std::cos(theta0), std::sin(theta0));
      for (int t = 0; t < T; ++t) {
        Eigen::Vector2d p;
        double angle_wave = 0.0;
        if (t < Ta) {
          p = approach(start, Ta, t);
        } else {
          const double s = min_jerk(static_cast<double>(t - Ta + 1) / (T - Ta));
          const double th = theta0 + s * 2.0 * kPi;
          p = target + radius * Eigen::Vector2d(std::cos(th), std::sin(th));
          angle_wave = 0.6 * std::sin(s * 2.0 * kPi);
        }
        path.positions.row(t) = p;
        path.tool_angles[t] = polar_angle(p) + angle_wave;
      }
      break;
    }
  }
  return path;
}

std::vector<int> key_frames(const PrimitiveSpec& spec, int T)
{
  switch (spec.kind) {
    case PrimitiveKind::kTapTop: {
      const int Ta = static_cast<int>(std::lround(0.35 * T));
      return {Ta - 1, T - 1};
    }
    case PrimitiveKind::kPushAway: {
      const int Ta = static_cast<int>(std::lround(0.55 * T));
      return {Ta - 1, T - 1};
    }
    case PrimitiveKind::kPullBack: {
      const int T2 = static_cast<int>(std::lround(0.55 * T));
      return {T2 - 1, T - 1};
    }
    case PrimitiveKind::kCircleAround: {
      const int Ta = static_cast<int>(std::lround(0.4 * T));
      return {Ta - 1, (Ta + T) / 2, T - 1};
    }
  }
  return {T - 1};
}

namespace
{

/// Variation grid: per object size, the first per_size points of a gx x gy
/// target grid, row by row. Exactly samples_per_primitive entries.
std::vector<Eigen::Vector3d> variation_grid(const PrimitiveSpec& spec,
                                            int samples_per_primitive)
{
  const auto& sizes = spec.object_sizes;
  const int n_sizes = static_cast<int>(sizes.size());
  const int per_size = samples_per_primitive / n_sizes;
  const int remainder = samples_per_primitive % n_sizes;
  std::vector<Eigen::Vector3d> grid;
  grid.reserve(samples_per_primitive);
  for (int si = 0; si < n_sizes; ++si) {
    const int count = per_size + (si < remainder ? 1 : 0);
    if (count == 0) continue;
    const int gx = static_cast<int>(std::ceil(std::sqrt(count)));
    const int gy = (count + gx - 1) / gx;
    int emitted = 0;
    for (int iy = 0; iy < gy && emitted < count; ++iy) {
      for (int ix = 0; ix < gx && emitted < count; ++ix) {
        const double x =
            gx > 1 ? spec.x_min + (spec.x_max - spec.x_min) * ix / (gx - 1)
                   : 0.5 * (spec.x_min + spec.x_max);
        const double y =
            gy > 1 ? spec.y_min + (spec.y_max - spec.y_min) * iy / (gy - 1)
                   : 0.5 * (spec.y_min + spec.y_max);
        grid.emplace_back(x, y, sizes[si]);
        ++emitted;
      }
    }
  }
  return grid;
}

}  // namespace

MotionDataset generate_dataset(const ArmConfig& arm,
                               const std::vector<PrimitiveSpec>& primitives,
                               int samples_per_primitive, std::uint64_t seed)
{
  arm.validate();
  if (primitives.empty()) throw ConfigError("generate_dataset: no primitives");
  if (samples_per_primitive < 1)
    throw ConfigError("generate_dataset: samples_per_primitive must be >= 1");
  const int T = arm.timesteps;

  MotionDataset raw;
  raw.primitive_count = static_cast<int>(primitives.size());
  raw.seed = seed;
  raw.timesteps = T;
  raw.motor_dim = 3;
  raw.image_height = arm.image_height;
  raw.image_width = arm.image_width;
  raw.arm = arm;
  raw.primitives = primitives;
  raw.has_generator = true;

  for (int k = 0; k < raw.primitive_count; ++k) {
    const auto& spec = primitives[k];
    const auto grid = variation_grid(spec, samples_per_primitive);
    int accepted = 0;
    for (const auto& v : grid) {
      const Eigen::Vector2d target{v[0], v[1]};
      const double size = v[2];
      const ScriptedPath path = scripted_path(spec, target, size, T, arm);
      Trajectory traj;
      traj.motor.resize(T, 3);
      bool reachable = true;
      for (int t = 0; t < T; ++t) {
        const auto q = inverse_kinematics(
            arm, path.positions.row(t).transpose(), path.tool_angles[t]);
        if (!q) {
          raw.diagnostics.push_back(
              spec.name + ": target (" + std::to_string(target.x()) + ", " +
              std::to_string(target.y()) + ") size " + std::to_string(size) +
              " unreachable at step " + std::to_string(t));
          reachable = false;
          break;
        }
        traj.motor.row(t) = q->transpose();
      }
      if (!reachable) continue;
      traj.primitive_id = k;
      traj.variation = v;
      raw.samples.push_back(std::move(traj));
      ++accepted;
    }
    if (accepted == 0)
      throw ConfigError("generate_dataset: primitive '" + spec.name +
                        "' entirely unreachable");
  }

  // sensory frames from the raw joint angles, parallel over samples
  const std::size_t n = raw.samples.size();
  parallel_for(n, [&](std::size_t i) {
    Trajectory& traj = raw.samples[i];
    const Eigen::Vector2d target{traj.variation[0], traj.variation[1]};
    const double obj_r = object_radius(traj.variation[2]);
    traj.sensory.resize(T, arm.image_height * arm.image_width);
    for (int t = 0; t < T; ++t) {
      const Eigen::MatrixXd img = render_sensory(
          arm, traj.motor.row(t).transpose(), target, obj_r);
      for (int r = 0; r < arm.image_height; ++r)
        for (int c = 0; c < arm.image_width; ++c)
          traj.sensory(t, r * arm.image_width + c) = img(r, c);
    }
  });

  return normalize_joint_angles(raw);
}

MotionDataset normalize_joint_angles(const MotionDataset& raw)
{
  if (raw.samples.empty())
    throw ConfigError("normalize_joint_angles: empty dataset");
  const int p = static_cast<int>(raw.samples.front().motor.cols());

  MotionDataset out = raw;
  out.normalization.joints.assign(p, JointScale{});
  for (int j = 0; j < p; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : raw.samples) {
      lo = std::min(lo, s.motor.col(j).minCoeff());
      hi = std::max(hi, s.motor.col(j).maxCoeff());
    }
    JointScale& scale = out.normalization.joints[j];
    scale.min = lo;
    scale.max = hi;
    scale.constant = !(hi > lo);
  }
  for (auto& s : out.samples) {
    for (int j = 0; j < p; ++j) {
      const JointScale& scale = out.normalization.joints[j];
      if (scale.constant) {
        s.motor.col(j).setZero();
      } else {
        s.motor.col(j) =
            (2.0 * (s.motor.col(j).array() - scale.min) / (scale.max - scale.min))
                .matrix() -
            Eigen::VectorXd::Ones(s.motor.rows());
      }
    }
  }
  return out;
}

Eigen::MatrixXd denormalize_motor(const Eigen::MatrixXd& motor,
                                  const NormalizationRecord& record)
{
  if (static_cast<int>(record.joints.size()) != motor.cols())
    throw ConfigError("denormalize_motor: record does not match motor columns");
  Eigen::MatrixXd out = motor;
  for (int j = 0; j < motor.cols(); ++j) {
    const JointScale& scale = record.joints[j];
    if (scale.constant) {
      out.col(j).setConstant(scale.min);
    } else {
      out.col(j) = ((motor.col(j).array() + 1.0) * 0.5 *
                    (scale.max - scale.min) + scale.min)
                       .matrix();
    }
  }
  return out;
}

Eigen::MatrixXd resample_frequency_domain(const Eigen::MatrixXd& motor, int T)
{
  using cd = std::complex<double>;
  const int T0 = static_cast<int>(motor.rows());
  const int p = static_cast<int>(motor.cols());
  if (T < T0)
    throw ConfigError("resample: target length below input length");
  if (T0 % 2 != 0) throw ConfigError("resample: input length must be even");
  if (T == T0) return motor;

  Eigen::MatrixXd out(T, p);
  const double scale_in = motor.cwiseAbs().maxCoeff();
  const double imag_tol = 1e-10 * std::max(1.0, scale_in) * T0;

  for (int j = 0; j < p; ++j) {
    // forward DFT, unnormalized
    std::vector<cd> f(T0);
    for (int k = 0; k < T0; ++k) {
      cd acc{0.0, 0.0};
      for (int t = 0; t < T0; ++t) {
        const double ang = -2.0 * kPi * k * t / T0;
        acc += motor(t, j) * cd{std::cos(ang), std::sin(ang)};
      }
      f[k] = acc;
    }
    // zero padding at the spectrum midpoint; Nyquist bin split half/half so
    // the inverse stays real
    std::vector<cd> ft(T, cd{0.0, 0.0});
    const int half = T0 / 2;
    for (int k = 0; k < half; ++k) ft[k] = f[k];
    ft[half] = 0.5 * f[half];
    ft[T - half] += 0.5 * f[half];
    for (int k = half + 1; k < T0; ++k) ft[T - (T0 - k)] = f[k];
    // inverse DFT with 1/T, then amplitude correction T/T0
    for (int t = 0; t < T; ++t) {
      cd acc{0.0, 0.0};
      for (int k = 0; k < T; ++k) {
        const double ang = 2.0 * kPi * k * t / T;
        acc += ft[k] * cd{std::cos(ang), std::sin(ang)};
      }
      if (std::abs(acc.imag()) > imag_tol)
        throw NumericError("resample: non-real inverse transform");
      out(t, j) = acc.real() / T0;
    }
  }
  return out;
}

Eigen::VectorXd flatten_motor(const Eigen::MatrixXd& motor)
{
  const int T = static_cast<int>(motor.rows());
  const int p = static_cast<int>(motor.cols());
  Eigen::VectorXd flat(T * p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) flat[t * p + j] = motor(t, j);
  return flat;
}

Eigen::MatrixXd unflatten_motor(const Eigen::VectorXd& flat, int timesteps,
                                int motor_dim)
{
  if (flat.size() != static_cast<Eigen::Index>(timesteps) * motor_dim)
    throw ConfigError("unflatten_motor: size mismatch");
  Eigen::MatrixXd motor(timesteps, motor_dim);
  for (int t = 0; t < timesteps; ++t)
    for (int j = 0; j < motor_dim; ++j) motor(t, j) = flat[t * motor_dim + j];
  return motor;
}

Eigen::MatrixXd render_sensory(const ArmConfig& arm,
                               const Eigen::Vector3d& joints,
                               const Eigen::Vector2d& target,
                               double object_size)
{
  const int H = arm.image_height;
  const int W = arm.image_width;
  const double extent = 1.05 * arm.reach();
  const double half_width = 2.0 * extent / W;

  const auto& L = arm.link_lengths;
  const double a1 = joints[0];
  const double a2 = a1 + joints[1];
  const double a3 = a2 + joints[2];
  Eigen::Vector2d j0{0.0, 0.0};
  Eigen::Vector2d j1 = j0 + L[0] * Eigen::Vector2d{std::cos(a1), std::sin(a1)};
  Eigen::Vector2d j2 = j1 + L[1] * Eigen::Vector2d{std::cos(a2), std::sin(a2)};
  Eigen::Vector2d j3 = j2 + L[2] * Eigen::Vector2d{std::cos(a3), std::sin(a3)};
  const Eigen::Vector2d segs[3][2] = {{j0, j1}, {j1, j2}, {j2, j3}};

  Eigen::MatrixXd img(H, W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const double px = -extent + 2.0 * extent * (c + 0.5) / W;
      const double py = extent - 2.0 * extent * (r + 0.5) / H;
      const Eigen::Vector2d pt{px, py};
      double val = 0.0;
      for (const auto& seg : segs) {
        const Eigen::Vector2d ab = seg[1] - seg[0];
        const double denom = ab.squaredNorm();
        const double tt =
            denom > 0.0 ? std::clamp((pt - seg[0]).dot(ab) / denom, 0.0, 1.0)
                        : 0.0;
        const double dist = (pt - (seg[0] + tt * ab)).norm();
        val = std::max(val, std::clamp(1.0 - dist / half_width, 0.0, 1.0));
      }
      if (object_size > 0.0) {
        const double dist = (pt - target).norm();
        const double edge =
            std::clamp((object_size + half_width - dist) / half_width, 0.0, 1.0);
        const double fade = std::min(1.0, object_size / half_width);
        val = std::max(val, 0.6 * fade * edge);
      }
      img(r, c) = val;
    }
  }
  return img;
}

}  // namespace primcodec
