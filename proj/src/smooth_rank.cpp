#include "vsl/smooth_rank.hpp"

#include <cmath>
#include <stdexcept>

namespace vsl {

// beyond this the sigmoid rounds to 1 in double precision (exp(-z) falls
// under half an ulp of 1); the negative tail is cut symmetrically
constexpr double kSigmoidSaturation = 37.5;

double smooth_sigmoid(double x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("non-positive temperature");
  const double z = x / tau;
  if (z >= kSigmoidSaturation) return 1.0;
  if (z <= -kSigmoidSaturation) return 0.0;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

RankMatrix rank_matrix(const Eigen::MatrixXd& m, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("non-positive temperature");
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const double cut = kSigmoidSaturation * tau;  // skip the exp when saturated
  RankMatrix out{Eigen::MatrixXd(rows, cols), tau};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double r = 1.0;
      for (Eigen::Index k = 0; k < cols; ++k) {
        const double diff = m(i, j) - m(i, k);
        if (diff >= cut) {
          r += 1.0;
        } else if (diff > -cut) {
          r += smooth_sigmoid(diff, tau);
        }
      }
      out.entries(i, j) = r;
    }
  }
  return out;
}

Eigen::MatrixXd rank_matrix_grad(const Eigen::MatrixXd& m, double tau,
                                 const Eigen::MatrixXd& upstream) {
  if (!(tau > 0.0)) throw std::invalid_argument("non-positive temperature");
  if (upstream.rows() != m.rows() || upstream.cols() != m.cols()) {
    throw std::invalid_argument("upstream shape mismatch");
  }
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const double cut = kSigmoidSaturation * tau;  // saturated sigmoids have slope 0
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double u = upstream(i, j);
      if (u == 0.0) continue;
      for (Eigen::Index k = 0; k < cols; ++k) {
        if (k == j) continue;  // self term: derivative is identically zero
        const double diff = m(i, j) - m(i, k);
        if (diff >= cut || diff <= -cut) continue;
        const double s = smooth_sigmoid(diff, tau);
        const double w = u * s * (1.0 - s) / tau;
        grad(i, j) += w;
        grad(i, k) -= w;
      }
    }
  }
  return grad;
}

}  // namespace vsl
