#ifndef VSL_LOSSES_HPP_
#define VSL_LOSSES_HPP_

#include <Eigen/Core>
#include <utility>

#include "vsl/smooth_rank.hpp"
#include "vsl/text_semantics.hpp"

namespace vsl {

enum class NegativeMining { hardest, sum_all };

struct LossConfig {
  double margin = 0.2;
  double alpha = 1.0;
  double beta = 10.0;
  double tau = 0.001;
  NegativeMining mining = NegativeMining::hardest;
  bool include_tsl = false;
};

/// Throws std::invalid_argument when margin < 0, tau <= 0, or a weight is
/// not finite.
void validate(const LossConfig& cfg);

struct LossOutput {
  double total = 0.0;
  double triplet = 0.0;
  double vsl = 0.0;
  double tsl = 0.0;  // 0 when disabled
  Eigen::MatrixXd grad_S;
};

/// s_ij = cosine of image embedding i and text embedding j. Rows are
/// normalized internally; a zero-norm row is rejected.
Eigen::MatrixXd cosine_similarity_matrix(const Eigen::MatrixXd& img_emb,
                                         const Eigen::MatrixXd& txt_emb);

/// Hinge triplet loss over a square similarity matrix whose diagonal holds
/// the positive pairs. Mean over the batch; the returned gradient is the
/// exact subgradient (zero inside inactive hinges).
std::pair<double, Eigen::MatrixXd> triplet_loss(const Eigen::MatrixXd& s, const LossConfig& cfg);

/// 1 - mean of min(sr, cr) / max(sr, cr). Only the first argument receives
/// a gradient; the semantic ranks are a fixed target.
std::pair<double, Eigen::MatrixXd> vsl_loss(const RankMatrix& sr, const RankMatrix& cr);

/// Text-side counterpart of vsl_loss: same functional form evaluated on the
/// ranks of S transposed against the textual semantic ranks. The returned
/// gradient is with respect to the first argument's entries.
std::pair<double, Eigen::MatrixXd> tsl_loss(const RankMatrix& s_transposed_ranks,
                                            const RankMatrix& tcr);

/// Combined objective: alpha * triplet + beta * (vsl [+ tsl]). Accumulates
/// every term's gradient into grad_S through the smooth rank. tc must be
/// non-null exactly when cfg.include_tsl is set.
LossOutput total_loss(const Eigen::MatrixXd& s, const SemanticMatrix& c, const SemanticMatrix* tc,
                      const LossConfig& cfg);

}  // namespace vsl

#endif  // VSL_LOSSES_HPP_
