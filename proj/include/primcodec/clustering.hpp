#ifndef PRIMCODEC_CLUSTERING_HPP_
#define PRIMCODEC_CLUSTERING_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace primcodec
{

/// Rank-truncated SVD Z = U diag(s) V^T keeping singular values above
/// sigma_max * max(rows, cols) * 1e-12.
struct SkinnySvd
{
  Eigen::MatrixXd U;               // rows x r
  Eigen::VectorXd singular_values; // r, descending
  Eigen::MatrixXd V;               // cols x r
};

SkinnySvd skinny_svd(const Eigen::MatrixXd& Z);

/// Self-expression matrix Q = V V^T (exact, noiseless solution).
Eigen::MatrixXd self_expression_exact(const Eigen::MatrixXd& Z);

/// Singular value weight of the relaxed problem: 1 - 1/(tau x^2) above
/// 1/sqrt(tau), zero at or below.
double shrinkage_weight(double sigma, double tau);

struct SelfExpressionResult
{
  Eigen::MatrixXd Q;
  Eigen::VectorXd singular_values;
  double tau = 0.0;
  double r_squared = 0.0;
};

/// Closed-form minimizer Q* = V P(Lambda) V^T of the relaxed nuclear-norm
/// self-expression problem.
SelfExpressionResult self_expression_relaxed(const Eigen::MatrixXd& Z,
                                             double tau);

/// Homogeneous-coordinate switch: appends a row of ones.
Eigen::MatrixXd affine_lift(const Eigen::MatrixXd& Z);

/// Spectral clustering of |Q| with the normalized symmetric Laplacian and
/// seeded k-means (10 restarts, best inertia, ties to the lowest restart).
std::vector<int> spectral_cluster(const Eigen::MatrixXd& Q, int K,
                                  std::uint64_t seed);

/// R^2 = 1 - |Z - ZQ|_F^2 / |Z - Zbar|_F^2 with Zbar the row-wise mean
/// broadcast over samples.
double reconstruction_r2(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q);

struct AccuracyResult
{
  double accuracy = 0.0;
  std::vector<int> permutation;  // permutation[predicted] = matched truth
};

/// Best label agreement over all permutations of {0..K-1}; K <= 10.
AccuracyResult clustering_accuracy(const std::vector<int>& pred,
                                   const std::vector<int>& truth);

struct TauSweepPoint
{
  double tau = 0.0;
  double r_squared = 0.0;
};

struct TauSelection
{
  double tau = 0.0;
  double r_squared = 0.0;
  bool in_band = false;
  std::vector<TauSweepPoint> sweep;
};

/// Sweeps tau on a log grid and picks the smallest tau whose R^2 lands in
/// [r2_lo, r2_hi]. When the grid skips the band, falls back to the tau whose
/// R^2 is closest to the band midpoint (in_band = false).
TauSelection select_tau(const Eigen::MatrixXd& Z, double r2_lo = 0.85,
                        double r2_hi = 0.95);

struct ClusterReport
{
  std::vector<int> labels;
  int K = 0;
  double accuracy = -1.0;         // -1 when no ground truth was given
  Eigen::MatrixXi confusion;      // K x K, rows = truth, cols = matched pred
  double tau = 0.0;
  double r_squared = 0.0;
  std::vector<TauSweepPoint> sweep;
};

/// Full pipeline: optional affine lift, tau selection (or fixed tau > 0),
/// relaxed self-expression, spectral clustering, optional scoring. Z holds
/// one sample per row (latent-codes layout).
ClusterReport cluster_latents(const Eigen::MatrixXd& Z, int K, bool affine,
                              double tau, std::uint64_t seed,
                              const std::vector<int>* truth = nullptr,
                              double r2_lo = 0.85, double r2_hi = 0.95);

}  // namespace primcodec

#endif  // PRIMCODEC_CLUSTERING_HPP_
