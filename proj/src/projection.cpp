#include "primcodec/projection.hpp"

#include <cmath>
#include <vector>

#include "primcodec/errors.hpp"
#include "primcodec/rng.hpp"
#include "primcodec/threading.hpp"

namespace primcodec
{

namespace
{

/// Compensated (Kahan) sum so parallel trial order never leaks into the
/// reported moments.
double kahan_sum(const std::vector<double>& xs)
{
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

ProjectionMatrix sample_projection(int k, int q, std::uint64_t seed)
{
  if (k < 1 || q < 1)
    throw ConfigError("sample_projection: dimensions must be >= 1");
  ProjectionMatrix P;
  P.q = q;
  P.k = k;
  P.seed = seed;
  P.entries.resize(q, k);
  RandomStream stream(derive_seed(seed, 0x50524f4aULL));
  const double sd = 1.0 / std::sqrt(static_cast<double>(q));
  // row-major fill order is part of the reproducibility contract
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < k; ++j) P.entries(i, j) = sd * stream.gaussian();
  return P;
}

Eigen::VectorXd project(const ProjectionMatrix& P, const Eigen::VectorXd& v)
{
  if (v.size() != P.k)
    throw ConfigError("project: vector length does not match k");
  return P.entries * v;
}

InnerProductStats inner_product_statistics(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b, int q,
                                           int trials, std::uint64_t seed)
{
  if (a.size() != b.size())
    throw ConfigError("inner_product_statistics: length mismatch");
  if (trials < 100)
    throw ConfigError("inner_product_statistics: trials must be >= 100");
  if (q < 1) throw ConfigError("inner_product_statistics: q must be >= 1");

  const int k = static_cast<int>(a.size());
  const double sd = 1.0 / std::sqrt(static_cast<double>(q));

  std::vector<double> values(trials);
  parallel_for(trials, [&](std::size_t trial) {
    RandomStream stream(derive_seed(seed, trial));
    // accumulate row by row; only Pa and Pb are needed, never P itself
    double dot = 0.0;
    for (int row = 0; row < q; ++row) {
      double ra = 0.0, rb = 0.0;
      for (int i = 0; i < k; ++i) {
        const double g = sd * stream.gaussian();
        ra += g * a[i];
        rb += g * b[i];
      }
      dot += ra * rb;
    }
    values[trial] = dot;
  });

  InnerProductStats stats;
  stats.trials = trials;
  stats.analytic_mean = a.dot(b);
  stats.var_bound =
      (3.0 * a.squaredNorm() * b.squaredNorm() - std::pow(a.dot(b), 2)) / q;
  stats.empirical_mean = kahan_sum(values) / trials;
  std::vector<double> sq(trials);
  for (int i = 0; i < trials; ++i)
    sq[i] = (values[i] - stats.empirical_mean) * (values[i] - stats.empirical_mean);
  stats.empirical_var = trials > 1 ? kahan_sum(sq) / (trials - 1) : 0.0;
  return stats;
}

}  // namespace primcodec
