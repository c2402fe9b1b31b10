#ifndef PRIMCODEC_PROJECTION_HPP_
#define PRIMCODEC_PROJECTION_HPP_

#include <Eigen/Dense>
#include <cstdint>

namespace primcodec
{

/// Random Gaussian projection R^k -> R^q with entries i.i.d. N(0, 1/q),
/// reproducible from the seed.
struct ProjectionMatrix
{
  Eigen::MatrixXd entries;  // q x k
  int q = 0;
  int k = 0;
  std::uint64_t seed = 0;
};

ProjectionMatrix sample_projection(int k, int q, std::uint64_t seed);

Eigen::VectorXd project(const ProjectionMatrix& P, const Eigen::VectorXd& v);

/// Monte-Carlo moments of Pa . Pb over independent projections, against the
/// analytic mean a.b and the variance bound (3|a|^2 |b|^2 - (a.b)^2) / q.
struct InnerProductStats
{
  double empirical_mean = 0.0;
  double empirical_var = 0.0;
  double analytic_mean = 0.0;
  double var_bound = 0.0;
  int trials = 0;
};

InnerProductStats inner_product_statistics(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b, int q,
                                           int trials, std::uint64_t seed);

}  // namespace primcodec

#endif  // PRIMCODEC_PROJECTION_HPP_
