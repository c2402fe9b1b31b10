#include "primcodec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "primcodec/errors.hpp"
#include "primcodec/rng.hpp"

namespace primcodec
{

SkinnySvd skinny_svd(const Eigen::MatrixXd& Z)
{
  SkinnySvd out;
  if (Z.size() == 0 || Z.cwiseAbs().maxCoeff() == 0.0) {
    out.U.resize(Z.rows(), 0);
    out.singular_values.resize(0);
    out.V.resize(Z.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol =
      s[0] * std::max(Z.rows(), Z.cols()) * 1e-12;
  int r = 0;
  while (r < s.size() && s[r] > tol) ++r;
  out.U = svd.matrixU().leftCols(r);
  out.singular_values = s.head(r);
  out.V = svd.matrixV().leftCols(r);
  return out;
}

Eigen::MatrixXd self_expression_exact(const Eigen::MatrixXd& Z)
{
  const SkinnySvd svd = skinny_svd(Z);
  if (svd.V.cols() == 0)
    return Eigen::MatrixXd::Zero(Z.cols(), Z.cols());
  return svd.V * svd.V.transpose();
}

double shrinkage_weight(double sigma, double tau)
{
  if (sigma * sigma * tau <= 1.0) return 0.0;
  return 1.0 - 1.0 / (tau * sigma * sigma);
}

SelfExpressionResult self_expression_relaxed(const Eigen::MatrixXd& Z,
                                             double tau)
{
  if (!(tau > 0.0)) throw ConfigError("self_expression_relaxed: tau must be > 0");
  const SkinnySvd svd = skinny_svd(Z);
  SelfExpressionResult res;
  res.tau = tau;
  res.singular_values = svd.singular_values;
  const int r = static_cast<int>(svd.singular_values.size());
  Eigen::VectorXd weights(r);
  for (int i = 0; i < r; ++i)
    weights[i] = shrinkage_weight(svd.singular_values[i], tau);
  if (r == 0) {
    res.Q = Eigen::MatrixXd::Zero(Z.cols(), Z.cols());
    res.r_squared = 0.0;
    return res;
  }
  res.Q = svd.V * weights.asDiagonal() * svd.V.transpose();
  res.r_squared = reconstruction_r2(Z, res.Q);
  return res;
}

Eigen::MatrixXd affine_lift(const Eigen::MatrixXd& Z)
{
  Eigen::MatrixXd lifted(Z.rows() + 1, Z.cols());
  lifted.topRows(Z.rows()) = Z;
  lifted.row(Z.rows()).setOnes();
  return lifted;
}

double reconstruction_r2(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Q)
{
  if (Z.cols() != Q.rows() || Q.rows() != Q.cols())
    throw ConfigError("reconstruction_r2: shape mismatch");
  const Eigen::VectorXd row_mean = Z.rowwise().mean();
  const double denom = (Z.colwise() - row_mean).squaredNorm();
  if (denom == 0.0)
    throw NumericError("reconstruction_r2: degenerate dataset (Z equals its mean)");
  return 1.0 - (Z - Z * Q).squaredNorm() / denom;
}

namespace
{

struct KmeansRun
{
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const Eigen::MatrixXd& pts, int K, std::uint64_t seed)
{
  const int n = static_cast<int>(pts.rows());
  RandomStream stream(seed);

  // k-means++ seeding
  Eigen::MatrixXd centers(K, pts.cols());
  centers.row(0) = pts.row(static_cast<int>(stream.below(n)));
  Eigen::VectorXd d2 =
      (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < K; ++c) {
    const double total = d2.sum();
    int pick = 0;
    if (total > 0.0) {
      const double target = stream.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) { pick = i; break; }
      }
    } else {
      pick = static_cast<int>(stream.below(n));
    }
    centers.row(c) = pts.row(pick);
    d2 = d2.cwiseMin(
        (pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (pts.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < K; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) { best_d = d; best = c; }
      }
      if (labels[i] != best) { labels[i] = best; changed = true; }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, pts.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(K);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += pts.row(i);
      counts[labels[i]] += 1;
    }
    for (int c = 0; c < K; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // adopt the point farthest from its center
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = (pts.row(i) - centers.row(labels[i])).squaredNorm();
          if (d > far_d) { far_d = d; far_i = i; }
        }
        centers.row(c) = pts.row(far_i);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }

  KmeansRun run;
  run.labels = labels;
  run.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    run.inertia += (pts.row(i) - centers.row(labels[i])).squaredNorm();
  return run;
}

}  // namespace

std::vector<int> spectral_cluster(const Eigen::MatrixXd& Q, int K,
                                  std::uint64_t seed)
{
  const int n = static_cast<int>(Q.rows());
  if (Q.cols() != n) throw ConfigError("spectral_cluster: Q must be square");
  if (K < 1) throw ConfigError("spectral_cluster: K must be >= 1");
  if (K > n) throw ConfigError("spectral_cluster: K exceeds sample count");
  if (K == 1) return std::vector<int>(n, 0);

  Eigen::MatrixXd A = 0.5 * (Q.cwiseAbs() + Q.cwiseAbs().transpose());
  A.diagonal().setZero();
  const Eigen::VectorXd degree = A.rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i)
    dinv[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  // L = I - D^{-1/2} A D^{-1/2}; zero-degree rows stay identity rows
  Eigen::MatrixXd lap =
      Eigen::MatrixXd::Identity(n, n) -
      dinv.asDiagonal() * A * dinv.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success)
    throw NumericError("spectral_cluster: eigendecomposition failed");
  Eigen::MatrixXd embed = eig.eigenvectors().leftCols(K);
  for (int i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }

  KmeansRun best;
  for (int restart = 0; restart < 10; ++restart) {
    KmeansRun run = kmeans_once(embed, K, derive_seed(seed, restart));
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best.labels;
}

AccuracyResult clustering_accuracy(const std::vector<int>& pred,
                                   const std::vector<int>& truth)
{
  if (pred.size() != truth.size())
    throw ConfigError("clustering_accuracy: length mismatch");
  if (pred.empty()) throw ConfigError("clustering_accuracy: empty labels");
  int K = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    K = std::max({K, pred[i] + 1, truth[i] + 1});
  if (K > 10)
    throw ConfigError("clustering_accuracy: more than 10 labels");

  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(K, K);
  for (std::size_t i = 0; i < pred.size(); ++i)
    confusion(pred[i], truth[i]) += 1;

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  AccuracyResult best;
  do {
    int agree = 0;
    for (int c = 0; c < K; ++c) agree += confusion(c, perm[c]);
    const double acc = static_cast<double>(agree) / pred.size();
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TauSelection select_tau(const Eigen::MatrixXd& Z, double r2_lo, double r2_hi)
{
  if (!(r2_lo < r2_hi))
    throw ConfigError("select_tau: invalid R^2 band");
  TauSelection sel;
  const double mid = 0.5 * (r2_lo + r2_hi);
  double best_gap = std::numeric_limits<double>::infinity();
  const int per_decade = 25;
  const double lo_exp = -5.0, hi_exp = 9.0;
  const int steps = static_cast<int>((hi_exp - lo_exp) * per_decade);
  // one SVD, reused for the whole sweep
  const SkinnySvd svd = skinny_svd(Z);
  const Eigen::VectorXd row_mean = Z.rowwise().mean();
  const double denom = (Z.colwise() - row_mean).squaredNorm();
  if (denom == 0.0)
    throw NumericError("select_tau: degenerate dataset");
  const int r = static_cast<int>(svd.singular_values.size());

  for (int i = 0; i <= steps; ++i) {
    const double tau = std::pow(10.0, lo_exp + i / static_cast<double>(per_decade));
    // residual |Z - ZQ|^2 = sum sigma_i^2 (1 - w_i)^2 plus the part of Z
    // outside the kept rank (zero for skinny SVD by construction)
    double resid = 0.0;
    for (int j = 0; j < r; ++j) {
      const double w = shrinkage_weight(svd.singular_values[j], tau);
      resid += std::pow(svd.singular_values[j] * (1.0 - w), 2);
    }
    const double r2 = 1.0 - resid / denom;
    sel.sweep.push_back({tau, r2});
    if (!sel.in_band && r2 >= r2_lo && r2 <= r2_hi) {
      sel.tau = tau;
      sel.r_squared = r2;
      sel.in_band = true;
    }
    if (!sel.in_band && std::abs(r2 - mid) < best_gap) {
      best_gap = std::abs(r2 - mid);
      sel.tau = tau;
      sel.r_squared = r2;
    }
  }
  return sel;
}

ClusterReport cluster_latents(const Eigen::MatrixXd& Z, int K, bool affine,
                              double tau, std::uint64_t seed,
                              const std::vector<int>* truth, double r2_lo,
                              double r2_hi)
{
  // samples arrive in rows; the self-expression machinery wants columns
  const Eigen::MatrixXd columns = Z.transpose();
  const Eigen::MatrixXd work = affine ? affine_lift(columns) : columns;
  ClusterReport report;
  report.K = K;
  if (tau > 0.0) {
    report.tau = tau;
  } else {
    TauSelection sel = select_tau(work, r2_lo, r2_hi);
    report.tau = sel.tau;
    report.sweep = std::move(sel.sweep);
  }
  const SelfExpressionResult se = self_expression_relaxed(work, report.tau);
  report.r_squared = se.r_squared;
  report.labels = spectral_cluster(se.Q, K, seed);
  if (truth != nullptr) {
    const AccuracyResult acc = clustering_accuracy(report.labels, *truth);
    report.accuracy = acc.accuracy;
    const int Kc = std::max(report.K, static_cast<int>(acc.permutation.size()));
    report.confusion = Eigen::MatrixXi::Zero(Kc, Kc);
    for (std::size_t i = 0; i < report.labels.size(); ++i)
      report.confusion(acc.permutation[report.labels[i]], (*truth)[i]) += 1;
  }
  return report;
}

}  // namespace primcodec
