#include "vsl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace vsl {

void adam_step(Eigen::MatrixXd& weights, AdamState& state, const Eigen::MatrixXd& grad, double lr,
               const AdamParams& params) {
  if (grad.rows() != weights.rows() || grad.cols() != weights.cols()) {
    throw std::invalid_argument("gradient shape does not match weights");
  }
  if (state.m.rows() != weights.rows() || state.m.cols() != weights.cols()) {
    throw std::invalid_argument("optimizer state shape does not match weights");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(state.step));
  state.m = params.beta1 * state.m + (1.0 - params.beta1) * grad;
  state.v = params.beta2 * state.v.array().matrix() +
            (1.0 - params.beta2) * grad.array().square().matrix();
  const Eigen::ArrayXXd m_hat = state.m.array() / bc1;
  const Eigen::ArrayXXd v_hat = state.v.array() / bc2;
  weights.array() -= lr * m_hat / (v_hat.sqrt() + params.epsilon);
}

}  // namespace vsl
