#ifndef VSL_GRADCHECK_HPP_
#define VSL_GRADCHECK_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>

namespace vsl {

/// Result of one numeric verification suite.
struct CheckReport {
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

/// Central finite-difference gradient of f over every entry of x.
Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                            Eigen::MatrixXd x, double step);

/// max over entries of |analytic - fd| / max(|fd|, 1e-8).
double max_rel_err(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd);

/// Smooth ranks vs. the hard-rank oracle 1.5 + (count of strictly smaller
/// row entries) on random matrices with row-wise pairwise gaps >= min_gap.
CheckReport hard_rank_fidelity_check(std::uint64_t seed, int num_matrices, int n, double tau,
                                     double min_gap, double tol);

/// Worst-case deviation of a smooth rank entry from the hard rank when all
/// row gaps are at least min_gap: (n - 1) * sigmoid(-min_gap / tau).
double hard_rank_deviation_bound(int n, double min_gap, double tau);

// Finite-difference suites (central differences, step 1e-6). Instances with
// a kink or selection boundary within reach of the step are resampled, as
// are instances with a gradient entry below the finite-difference noise
// floor.
CheckReport fd_rank_matrix_check(std::uint64_t seed, int instances, double tau, double tol);
CheckReport fd_triplet_check(std::uint64_t seed, int instances, double tol);
CheckReport fd_vsl_check(std::uint64_t seed, int instances, double tau, double tol);
CheckReport fd_tsl_check(std::uint64_t seed, int instances, double tau, double tol);
CheckReport fd_total_loss_check(std::uint64_t seed, int instances, double tau, double tol);

/// Exact identities of the min/max rank-consistency loss.
CheckReport vsl_identity_check(std::uint64_t seed);

}  // namespace vsl

#endif  // VSL_GRADCHECK_HPP_
