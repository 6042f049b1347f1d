#ifndef VSL_ADAM_HPP_
#define VSL_ADAM_HPP_

#include <Eigen/Core>

namespace vsl {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates for one weight tensor.
struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  long step = 0;

  static AdamState zeros(Eigen::Index rows, Eigen::Index cols) {
    return {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols), 0};
  }
};

/// One bias-corrected Adam update, in place. Deterministic.
void adam_step(Eigen::MatrixXd& weights, AdamState& state, const Eigen::MatrixXd& grad, double lr,
               const AdamParams& params);

}  // namespace vsl

#endif  // VSL_ADAM_HPP_
