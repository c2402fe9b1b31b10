#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "primcodec/errors.hpp"
#include "primcodec/trajectory.hpp"

using namespace primcodec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace
{

MotionDataset desk_dataset(std::uint64_t seed = 1)
{
  return generate_dataset(ArmConfig{}, default_primitives(), 50, seed);
}

/// Band-limited reference: evaluate the trigonometric interpolant of the
/// input samples at fractional positions. Valid when the spectrum is empty
/// above bin T0/2 - 1.
double trig_interpolate(const VectorXd& samples, double t)
{
  const int T0 = static_cast<int>(samples.size());
  const double two_pi = 2.0 * std::numbers::pi;
  double value = samples.mean();
  for (int k = 1; k < T0 / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < T0; ++i) {
      re += samples[i] * std::cos(two_pi * k * i / T0);
      im -= samples[i] * std::sin(two_pi * k * i / T0);
    }
    value += (2.0 / T0) * (re * std::cos(two_pi * k * t / T0) -
                           im * std::sin(two_pi * k * t / T0));
  }
  return value;
}

}  // namespace

TEST_CASE("generate_dataset yields K*spp normalized trajectories")
{
  const MotionDataset ds = desk_dataset();
  CHECK(ds.size() == 200);
  CHECK(ds.primitive_count == 4);
  CHECK(ds.timesteps == 30);
  CHECK(ds.motor_dim == 3);
  CHECK(ds.diagnostics.empty());
  for (const auto& s : ds.samples) {
    CHECK(s.motor.minCoeff() >= -1.0 - 1e-12);
    CHECK(s.motor.maxCoeff() <= 1.0 + 1e-12);
    CHECK(s.sensory.minCoeff() >= 0.0);
    CHECK(s.sensory.maxCoeff() <= 1.0);
  }
  // labels 0..K-1 all present
  std::vector<int> counts(4, 0);
  for (const auto& s : ds.samples) counts[s.primitive_id] += 1;
  for (int c : counts) CHECK(c == 50);
}

TEST_CASE("generate_dataset degenerate count")
{
  const MotionDataset ds =
      generate_dataset(ArmConfig{}, {default_primitives()[0]}, 1, 3);
  CHECK(ds.size() == 1);
  CHECK(ds.samples[0].primitive_id == 0);
}

TEST_CASE("generate_dataset is deterministic in the seed")
{
  const MotionDataset a = desk_dataset(7);
  const MotionDataset b = desk_dataset(7);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].motor == b.samples[i].motor);
    CHECK(a.samples[i].sensory == b.samples[i].sensory);
  }
}

TEST_CASE("variation -> motor map is continuous")
{
  const ArmConfig arm;
  const PrimitiveSpec spec = default_primitives()[1];
  const Eigen::Vector2d base{0.05, 0.75};
  auto flatten_for = [&](const Eigen::Vector2d& target) {
    const ScriptedPath path = scripted_path(spec, target, 0.5, 30, arm);
    MatrixXd motor(30, 3);
    for (int t = 0; t < 30; ++t) {
      const auto q = inverse_kinematics(arm, path.positions.row(t).transpose(),
                                        path.tool_angles[t]);
      REQUIRE(q.has_value());
      motor.row(t) = q->transpose();
    }
    return flatten_motor(motor);
  };
  const VectorXd f0 = flatten_for(base);
  double prev_change = 1e9;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const VectorXd f1 = flatten_for(base + Eigen::Vector2d{delta, 0.0});
    const double change = (f1 - f0).norm();
    CHECK(change < 100.0 * delta);  // O(delta), generous Lipschitz bound
    CHECK(change < prev_change);
    prev_change = change;
  }
}

TEST_CASE("unreachable targets are rejected with diagnostics")
{
  PrimitiveSpec far = default_primitives()[0];
  far.x_min = 2.0;  // beyond total reach for some grid points
  far.x_max = 3.0;
  far.y_min = 0.1;
  far.y_max = 3.0;
  CHECK_THROWS_AS(generate_dataset(ArmConfig{}, {far}, 4, 1), ConfigError);

  // mixed case: default primitive plus some unreachable corners
  PrimitiveSpec wide = default_primitives()[0];
  wide.x_min = -0.12;
  wide.x_max = 1.25;  // the far column is out of reach
  wide.y_min = 0.7;
  wide.y_max = 0.82;
  const MotionDataset ds = generate_dataset(ArmConfig{}, {wide}, 9, 1);
  CHECK(ds.size() < 9);
  CHECK(!ds.diagnostics.empty());
}

TEST_CASE("normalize_joint_angles maps endpoints and round-trips")
{
  MotionDataset raw;
  raw.primitive_count = 1;
  raw.timesteps = 3;
  raw.motor_dim = 2;
  raw.image_height = raw.image_width = 8;
  Trajectory t;
  t.motor.resize(3, 2);
  t.motor.col(0) << 0.0, std::numbers::pi / 2.0, std::numbers::pi;
  t.motor.col(1) << 0.3, 0.3, 0.3;  // constant joint
  t.sensory = MatrixXd::Zero(3, 64);
  t.variation = VectorXd::Zero(3);
  raw.samples.push_back(t);

  const MotionDataset norm = normalize_joint_angles(raw);
  CHECK(norm.samples[0].motor(0, 0) == doctest::Approx(-1.0));
  CHECK(norm.samples[0].motor(1, 0) == doctest::Approx(0.0));
  CHECK(norm.samples[0].motor(2, 0) == doctest::Approx(1.0));
  CHECK(norm.samples[0].motor.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(norm.normalization.joints[1].constant);

  const MatrixXd back =
      denormalize_motor(norm.samples[0].motor, norm.normalization);
  CHECK((back - raw.samples[0].motor).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normalization round-trip on a generated dataset")
{
  const MotionDataset ds = desk_dataset();
  // regenerate the raw trajectories to compare against
  const ArmConfig arm;
  for (int i : {0, 57, 123, 199}) {
    const MatrixXd raw = denormalize_motor(ds.samples[i].motor, ds.normalization);
    const MatrixXd norm2 = [&] {
      MatrixXd m = raw;
      for (int j = 0; j < m.cols(); ++j) {
        const auto& s = ds.normalization.joints[j];
        m.col(j) = (2.0 * (m.col(j).array() - s.min) / (s.max - s.min) - 1.0);
      }
      return m;
    }();
    const double scale = raw.cwiseAbs().maxCoeff();
    CHECK((norm2 - ds.samples[i].motor).cwiseAbs().maxCoeff() <
          1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("resampler preserves constants and the identity case")
{
  MatrixXd motor(10, 2);
  motor.col(0).setConstant(0.7);
  motor.col(1).setConstant(-0.2);
  const MatrixXd out = resample_frequency_domain(motor, 20);
  CHECK(out.rows() == 20);
  CHECK((out.col(0).array() - 0.7).abs().maxCoeff() < 1e-10);
  CHECK((out.col(1).array() + 0.2).abs().maxCoeff() < 1e-10);

  const MatrixXd same = resample_frequency_domain(motor, 10);
  CHECK((same - motor).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resampler matches the trigonometric interpolant on a sinusoid")
{
  const int T0 = 20, T = 40;
  MatrixXd motor(T0, 1);
  for (int t = 0; t < T0; ++t)
    motor(t, 0) = std::sin(2.0 * std::numbers::pi * t / T0);
  const MatrixXd out = resample_frequency_domain(motor, T);
  for (int t = 0; t < T; ++t) {
    const double tt = t * 0.5;
    CHECK(std::abs(out(t, 0) - std::sin(2.0 * std::numbers::pi * tt / T0)) <
          1e-8);
  }
}

TEST_CASE("resampler agrees with the trig oracle on random band-limited input")
{
  const int T0 = 16, T = 44;
  MatrixXd motor(T0, 1);
  // random-ish band-limited signal: bins 0..T0/2-1 only
  for (int t = 0; t < T0; ++t) {
    double v = 0.3;
    for (int k = 1; k < T0 / 2; ++k)
      v += std::cos(2.0 * std::numbers::pi * k * t / T0) / (k + 1.0) +
           0.5 * std::sin(2.0 * std::numbers::pi * k * t / T0) / (k + 2.0);
    motor(t, 0) = v;
  }
  const MatrixXd out = resample_frequency_domain(motor, T);
  for (int t = 0; t < T; ++t) {
    const double tt = static_cast<double>(t) * T0 / T;
    CHECK(std::abs(out(t, 0) - trig_interpolate(motor.col(0), tt)) < 1e-8);
  }
}

TEST_CASE("resampler rejects bad lengths")
{
  MatrixXd odd(9, 1);
  odd.setZero();
  CHECK_THROWS_AS(resample_frequency_domain(odd, 18), ConfigError);
  MatrixXd even(10, 1);
  even.setZero();
  CHECK_THROWS_AS(resample_frequency_domain(even, 8), ConfigError);
}

TEST_CASE("flatten_motor layout and round trip")
{
  MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  const VectorXd flat = flatten_motor(m);
  CHECK(flat.size() == 4);
  CHECK(flat[0] == 1);
  CHECK(flat[1] == 2);
  CHECK(flat[2] == 3);
  CHECK(flat[3] == 4);
  CHECK(unflatten_motor(flat, 2, 2) == m);

  MatrixXd big = MatrixXd::Random(30, 3);
  CHECK(flatten_motor(big).size() == 90);
  CHECK(unflatten_motor(flatten_motor(big), 30, 3) == big);
}

TEST_CASE("render_sensory: rest pose occupies only the arm pixels")
{
  ArmConfig arm;
  const Eigen::Vector3d joints{0.0, 0.0, 0.0};
  const MatrixXd img = render_sensory(arm, joints, {0.0, 0.0}, 0.0);
  CHECK(img.rows() == arm.image_height);
  CHECK(img.maxCoeff() > 0.4);
  // arm lies along +x from origin: everything in the left half and the top
  // and bottom quarters stays dark
  const double extent = 1.05 * arm.reach();
  int lit_off_axis = 0;
  for (int r = 0; r < img.rows(); ++r) {
    const double py = extent - 2.0 * extent * (r + 0.5) / arm.image_height;
    for (int c = 0; c < img.cols(); ++c) {
      const double px = -extent + 2.0 * extent * (c + 0.5) / arm.image_width;
      if (img(r, c) > 0.0 && (px < -0.1 || std::abs(py) > 0.3)) ++lit_off_axis;
    }
  }
  CHECK(lit_off_axis == 0);
}

TEST_CASE("render_sensory determinism and empty object")
{
  ArmConfig arm;
  const Eigen::Vector3d joints{0.3, 0.8, -0.4};
  const MatrixXd a = render_sensory(arm, joints, {0.1, 0.7}, 0.08);
  const MatrixXd b = render_sensory(arm, joints, {0.1, 0.7}, 0.08);
  CHECK(a == b);
  const MatrixXd no_obj = render_sensory(arm, joints, {0.1, 0.7}, 0.0);
  const MatrixXd neg = render_sensory(arm, joints, {0.1, 0.7}, -1.0);
  CHECK(no_obj == neg);
  CHECK((a - no_obj).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward kinematics inverts the IK solution")
{
  const ArmConfig arm;
  for (double x : {-0.2, 0.0, 0.3}) {
    for (double y : {0.6, 0.8}) {
      const double tool = std::atan2(y, x);
      const auto q = inverse_kinematics(arm, {x, y}, tool);
      REQUIRE(q.has_value());
      const Eigen::Vector2d ee = forward_kinematics(arm, *q);
      CHECK((ee - Eigen::Vector2d{x, y}).norm() < 1e-12);
    }
  }
  CHECK(!inverse_kinematics(arm, {5.0, 5.0}, 0.0).has_value());
}
