#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "primcodec/clustering.hpp"
#include "primcodec/errors.hpp"
#include "primcodec/rng.hpp"

using namespace primcodec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace
{

MatrixXd random_orthonormal(int rows, int cols, std::uint64_t seed)
{
  RandomStream stream(seed);
  MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = stream.gaussian();
  return Eigen::HouseholderQR<MatrixXd>(g).householderQ() *
         MatrixXd::Identity(rows, cols);
}

/// Union of `K` random subspaces in R^ambient, dim `d` each, `per` points.
struct SubspaceFixture
{
  MatrixXd Z;
  std::vector<int> labels;
};

SubspaceFixture subspace_union(int K, int d, int ambient, int per,
                               std::uint64_t seed, bool affine, double noise)
{
  RandomStream stream(derive_seed(seed, 0xF1F7));
  SubspaceFixture fx;
  fx.Z.resize(ambient, K * per);
  for (int k = 0; k < K; ++k) {
    const MatrixXd basis = random_orthonormal(ambient, d, derive_seed(seed, k));
    VectorXd offset = VectorXd::Zero(ambient);
    if (affine)
      for (int i = 0; i < ambient; ++i) offset[i] = stream.gaussian();
    for (int j = 0; j < per; ++j) {
      VectorXd coeff(d);
      for (int i = 0; i < d; ++i) coeff[i] = stream.gaussian();
      VectorXd pt = basis * coeff + offset;
      for (int i = 0; i < ambient; ++i) pt[i] += noise * stream.gaussian();
      fx.Z.col(k * per + j) = pt;
      fx.labels.push_back(k);
    }
  }
  return fx;
}

}  // namespace

TEST_CASE("skinny_svd basics")
{
  const SkinnySvd id = skinny_svd(MatrixXd::Identity(3, 3));
  REQUIRE(id.singular_values.size() == 3);
  CHECK(id.singular_values.minCoeff() == doctest::Approx(1.0));

  MatrixXd d(2, 2);
  d << 3, 0, 0, 2;
  const MatrixXd rot = random_orthonormal(2, 2, 5);
  const SkinnySvd sv = skinny_svd(d * rot);
  REQUIRE(sv.singular_values.size() == 2);
  CHECK(sv.singular_values[0] == doctest::Approx(3.0));
  CHECK(sv.singular_values[1] == doctest::Approx(2.0));

  const SkinnySvd zero = skinny_svd(MatrixXd::Zero(4, 6));
  CHECK(zero.singular_values.size() == 0);
  CHECK(zero.U.cols() == 0);
  CHECK(zero.V.cols() == 0);
}

TEST_CASE("skinny_svd rank of a low-rank product")
{
  RandomStream stream(42);
  MatrixXd a(40, 6), b(6, 200);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = stream.gaussian();
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) b(i, j) = stream.gaussian();
  const MatrixXd Z = a * b;
  const SkinnySvd sv = skinny_svd(Z);
  CHECK(sv.singular_values.size() == 6);
  const MatrixXd recon =
      sv.U * sv.singular_values.asDiagonal() * sv.V.transpose();
  CHECK((Z - recon).norm() <= 1e-9 * Z.norm());
}

TEST_CASE("self-expression reproduces Z and separates independent lines")
{
  // full row rank square case: Q = I
  const MatrixXd sq = random_orthonormal(4, 4, 9) * 2.5;
  const MatrixXd Q = self_expression_exact(sq);
  CHECK((Q - MatrixXd::Identity(4, 4)).norm() < 1e-9);

  // two independent 1-D lines in R^3, 3 points each
  VectorXd u1(3), u2(3);
  u1 << 1.0, 0.2, -0.3;
  u2 << -0.4, 1.0, 0.5;
  MatrixXd lines(3, 6);
  for (int j = 0; j < 3; ++j) {
    lines.col(j) = (j + 1.0) * u1;
    lines.col(3 + j) = (j + 1.0) * u2;
  }
  const MatrixXd Ql = self_expression_exact(lines);
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 6; ++j) CHECK(std::abs(Ql(i, j)) < 1e-8);

  // single nonzero column
  MatrixXd one(3, 1);
  one << 1, 2, 3;
  const MatrixXd Q1 = self_expression_exact(one);
  CHECK(Q1.rows() == 1);
  CHECK(Q1(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("self-representation and idempotence hold for random Z")
{
  RandomStream stream(31);
  MatrixXd Z(12, 30);
  for (int i = 0; i < Z.rows(); ++i)
    for (int j = 0; j < Z.cols(); ++j) Z(i, j) = stream.gaussian();
  const MatrixXd Q = self_expression_exact(Z);
  CHECK((Z * Q - Z).norm() <= 1e-9 * Z.norm());
  CHECK((Q - Q.transpose()).norm() < 1e-10);
  CHECK((Q * Q - Q).norm() < 1e-9);
}

TEST_CASE("shrinkage weight formula")
{
  CHECK(shrinkage_weight(2.0, 1.0) == doctest::Approx(0.75));
  const double tau = 3.7;
  CHECK(shrinkage_weight(1.0 / std::sqrt(tau), tau) == 0.0);
  CHECK(shrinkage_weight(1e-9, tau) == 0.0);
  CHECK(shrinkage_weight(1e9, tau) == doctest::Approx(1.0));
}

TEST_CASE("relaxed solution approaches V V^T as tau grows")
{
  const SubspaceFixture fx = subspace_union(3, 2, 10, 15, 4, false, 0.0);
  const MatrixXd exact = self_expression_exact(fx.Z);
  const SelfExpressionResult res = self_expression_relaxed(fx.Z, 1e8);
  CHECK((res.Q - exact).norm() < 1e-6);
  CHECK((res.Q - res.Q.transpose()).norm() < 1e-10);
}

TEST_CASE("r_squared is non-decreasing in tau")
{
  const SubspaceFixture fx = subspace_union(4, 3, 40, 50, 8, true, 0.01);
  const MatrixXd lifted = affine_lift(fx.Z);
  double prev = -1e300;
  for (double tau = 1e-4; tau < 1e6; tau *= 3.7) {
    const double r2 = self_expression_relaxed(lifted, tau).r_squared;
    CHECK(r2 >= prev - 1e-12);
    prev = r2;
  }
}

TEST_CASE("affine_lift appends ones rows")
{
  MatrixXd Z(2, 2);
  Z << 1, 2, 3, 4;
  const MatrixXd lifted = affine_lift(Z);
  CHECK(lifted.rows() == 3);
  CHECK(lifted.row(2) == Eigen::RowVector2d(1, 1));
  const MatrixXd twice = affine_lift(lifted);
  CHECK(twice.rows() == 4);
  CHECK(twice.row(2) == Eigen::RowVector2d(1, 1));
  CHECK(twice.row(3) == Eigen::RowVector2d(1, 1));
}

TEST_CASE("affine lift separates collinear parallel lines where linear fails")
{
  VectorXd u(3), o1(3);
  u << 1.0, 0.2, -0.3;
  u.normalize();
  o1 << 0.0, 1.0, 0.5;
  const VectorXd o2 = 2.0 * o1;  // parallel line, collinear through origin
  MatrixXd Z(3, 40);
  std::vector<int> truth;
  for (int j = 0; j < 20; ++j) {
    const double t = -1.0 + 2.0 * j / 19.0;
    Z.col(j) = o1 + t * u;
    Z.col(20 + j) = o2 + t * u;
  }
  for (int j = 0; j < 40; ++j) truth.push_back(j < 20 ? 0 : 1);

  const auto linear_labels = spectral_cluster(self_expression_exact(Z), 2, 1);
  const auto affine_labels =
      spectral_cluster(self_expression_exact(affine_lift(Z)), 2, 1);
  CHECK(clustering_accuracy(linear_labels, truth).accuracy < 0.8);
  CHECK(clustering_accuracy(affine_labels, truth).accuracy == 1.0);
}

TEST_CASE("spectral clustering separates exact blocks")
{
  const int n = 30;
  MatrixXd Q = MatrixXd::Zero(n, n);
  std::vector<int> truth(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((i < 15) == (j < 15)) Q(i, j) = 0.5;
  for (int i = 0; i < n; ++i) truth[i] = i < 15 ? 0 : 1;
  const auto labels = spectral_cluster(Q, 2, 5);
  CHECK(clustering_accuracy(labels, truth).accuracy == 1.0);

  CHECK(spectral_cluster(Q, 1, 5) == std::vector<int>(n, 0));
  CHECK_THROWS_AS(spectral_cluster(Q, n + 1, 5), ConfigError);
}

TEST_CASE("identity affinity with K = n gives a bijection")
{
  const int n = 6;
  const auto labels = spectral_cluster(MatrixXd::Identity(n, n), n, 3);
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("spectral clustering commutes with permutation")
{
  const SubspaceFixture fx = subspace_union(3, 2, 12, 12, 6, false, 0.0);
  const MatrixXd Q = self_expression_exact(fx.Z);
  const int n = static_cast<int>(Q.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RandomStream stream(77);
  stream.shuffle(perm);
  MatrixXd Qp(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Qp(perm[i], perm[j]) = Q(i, j);
  const auto base = spectral_cluster(Q, 3, 9);
  const auto permuted = spectral_cluster(Qp, 3, 9);
  std::vector<int> unpermuted(n);
  for (int i = 0; i < n; ++i) unpermuted[i] = permuted[perm[i]];
  CHECK(clustering_accuracy(unpermuted, base).accuracy == 1.0);
}

TEST_CASE("reconstruction R^2 definition")
{
  const SubspaceFixture fx = subspace_union(2, 2, 8, 10, 12, false, 0.0);
  const MatrixXd Q = self_expression_exact(fx.Z);
  CHECK(reconstruction_r2(fx.Z, Q) == doctest::Approx(1.0));

  // zero-mean Z with Q = 0 gives exactly 0
  MatrixXd Z(2, 4);
  Z << 1, -1, 2, -2, 3, -3, 0.5, -0.5;
  CHECK(reconstruction_r2(Z, MatrixXd::Zero(4, 4)) == doctest::Approx(0.0));

  const MatrixXd constant = MatrixXd::Ones(3, 5);
  CHECK_THROWS_AS(reconstruction_r2(constant, MatrixXd::Zero(5, 5)),
                  NumericError);
}

TEST_CASE("clustering accuracy is permutation invariant")
{
  std::vector<int> truth{0, 0, 1, 1, 2, 2};
  CHECK(clustering_accuracy(truth, truth).accuracy == 1.0);
  std::vector<int> swapped{1, 1, 0, 0, 2, 2};
  CHECK(clustering_accuracy(swapped, truth).accuracy == 1.0);

  std::vector<int> pred(200), rand_truth(200);
  RandomStream stream(3);
  for (int i = 0; i < 200; ++i) {
    pred[i] = static_cast<int>(stream.below(4));
    rand_truth[i] = i % 4;
  }
  const double acc = clustering_accuracy(pred, rand_truth).accuracy;
  CHECK(acc > 0.15);
  CHECK(acc < 0.4);

  std::vector<int> big(12);
  std::iota(big.begin(), big.end(), 0);
  CHECK_THROWS_AS(clustering_accuracy(big, big), ConfigError);
}

TEST_CASE("noisy affine union lands in the R^2 band with auto tau")
{
  const SubspaceFixture fx = subspace_union(4, 3, 40, 50, 8, true, 0.01);
  const MatrixXd lifted = affine_lift(fx.Z);
  const TauSelection sel = select_tau(lifted, 0.85, 0.95);
  CHECK(sel.in_band);
  CHECK(sel.r_squared >= 0.85);
  CHECK(sel.r_squared <= 0.95);
  CHECK(!sel.sweep.empty());
  // sweep values agree with a direct evaluation
  const SelfExpressionResult direct = self_expression_relaxed(lifted, sel.tau);
  CHECK(direct.r_squared == doctest::Approx(sel.r_squared).epsilon(1e-9));
}

TEST_CASE("cluster_latents end to end on the noisy affine fixture")
{
  const SubspaceFixture fx = subspace_union(4, 3, 40, 50, 8, true, 0.01);
  const ClusterReport report =
      cluster_latents(fx.Z.transpose(), 4, /*affine=*/true, /*tau=*/0.0, 3,
                      &fx.labels, 0.85, 0.95);
  CHECK(report.accuracy >= 0.95);
  CHECK(report.r_squared >= 0.85);
  CHECK(report.r_squared <= 0.95);
}
