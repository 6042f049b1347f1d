#ifndef VSL_SMOOTH_RANK_HPP_
#define VSL_SMOOTH_RANK_HPP_

#include <Eigen/Core>

namespace vsl {

/// Differentiable row-wise rank image of a score matrix; entries lie
/// strictly in (1, n + 1). tau records the temperature it was built with.
struct RankMatrix {
  Eigen::MatrixXd entries;
  double tau = 0.0;
};

/// 1 / (1 + exp(-x / tau)). Numerically stable for |x / tau| up to 1e6;
/// saturates to 0 or 1 instead of overflowing.
double smooth_sigmoid(double x, double tau);

/// Smooth rank of every entry within its row:
///   R(i, j) = 1 + sum_k sigmoid((m_ij - m_ik) / tau).
/// The k = j self term contributes exactly 0.5; larger scores get larger
/// ranks.
RankMatrix rank_matrix(const Eigen::MatrixXd& m, double tau);

/// Gradient of L = sum_ij upstream_ij * R(i, j, M) with respect to M.
/// The self term has zero derivative (its argument is identically 0).
Eigen::MatrixXd rank_matrix_grad(const Eigen::MatrixXd& m, double tau,
                                 const Eigen::MatrixXd& upstream);

}  // namespace vsl

#endif  // VSL_SMOOTH_RANK_HPP_
