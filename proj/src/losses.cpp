#include "vsl/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace vsl {

void validate(const LossConfig& cfg) {
  if (!(cfg.margin >= 0.0)) throw std::invalid_argument("margin must be non-negative");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("non-positive temperature");
  if (!std::isfinite(cfg.alpha) || !std::isfinite(cfg.beta)) {
    throw std::invalid_argument("loss weights must be finite");
  }
}

Eigen::MatrixXd cosine_similarity_matrix(const Eigen::MatrixXd& img_emb,
                                         const Eigen::MatrixXd& txt_emb) {
  if (img_emb.rows() < 1 || txt_emb.rows() < 1 || img_emb.cols() < 1) {
    throw std::invalid_argument("empty embedding matrix");
  }
  if (img_emb.cols() != txt_emb.cols()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  Eigen::VectorXd inorm = img_emb.rowwise().norm();
  Eigen::VectorXd tnorm = txt_emb.rowwise().norm();
  if ((inorm.array() == 0.0).any() || (tnorm.array() == 0.0).any()) {
    throw std::runtime_error("degenerate embedding");
  }
  return inorm.cwiseInverse().asDiagonal() * (img_emb * txt_emb.transpose()) *
         tnorm.cwiseInverse().asDiagonal();
}

std::pair<double, Eigen::MatrixXd> triplet_loss(const Eigen::MatrixXd& s, const LossConfig& cfg) {
  validate(cfg);
  if (s.rows() != s.cols()) throw std::invalid_argument("similarity matrix must be square");
  const Eigen::Index n = s.rows();
  if (n < 2) throw std::invalid_argument("triplet loss needs at least one negative");

  double loss = 0.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, n);
  const double m = cfg.margin;

  auto hinge = [&](double arg, Eigen::Index pos_r, Eigen::Index pos_c, Eigen::Index neg_r,
                   Eigen::Index neg_c) {
    if (arg > 0.0) {
      loss += arg;
      grad(pos_r, pos_c) -= 1.0;
      grad(neg_r, neg_c) += 1.0;
    }
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    if (cfg.mining == NegativeMining::hardest) {
      Eigen::Index hard_txt = i == 0 ? 1 : 0;  // argmax_{k != i} s(i, k)
      Eigen::Index hard_img = i == 0 ? 1 : 0;  // argmax_{k != i} s(k, i)
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        if (s(i, k) > s(i, hard_txt)) hard_txt = k;
        if (s(k, i) > s(hard_img, i)) hard_img = k;
      }
      hinge(m - s(i, i) + s(hard_img, i), i, i, hard_img, i);
      hinge(m - s(i, i) + s(i, hard_txt), i, i, i, hard_txt);
    } else {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        hinge(m - s(i, i) + s(k, i), i, i, k, i);
        hinge(m - s(i, i) + s(i, k), i, i, i, k);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return {loss * inv_n, grad * inv_n};
}

std::pair<double, Eigen::MatrixXd> vsl_loss(const RankMatrix& sr, const RankMatrix& cr) {
  const Eigen::MatrixXd& a = sr.entries;
  const Eigen::MatrixXd& b = cr.entries;
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("rank matrix shape mismatch");
  }
  const double inv_n2 = 1.0 / static_cast<double>(a.rows() * a.cols());
  // accumulate 1 - min/max per entry: exactly zero when the ranks agree
  double deficit = 0.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = a(i, j);
      const double y = b(i, j);
      if (x < y) {
        deficit += 1.0 - x / y;
        grad(i, j) = -inv_n2 / y;
      } else if (x > y) {
        deficit += 1.0 - y / x;
        grad(i, j) = inv_n2 * y / (x * x);
      }
      // equal: kink of min/max, subgradient 0
    }
  }
  return {inv_n2 * deficit, std::move(grad)};
}

std::pair<double, Eigen::MatrixXd> tsl_loss(const RankMatrix& s_transposed_ranks,
                                            const RankMatrix& tcr) {
  return vsl_loss(s_transposed_ranks, tcr);
}

LossOutput total_loss(const Eigen::MatrixXd& s, const SemanticMatrix& c, const SemanticMatrix* tc,
                      const LossConfig& cfg) {
  validate(cfg);
  if (s.rows() != s.cols()) throw std::invalid_argument("similarity matrix must be square");
  if (c.rows() != s.rows() || c.cols() != s.cols()) {
    throw std::invalid_argument("semantic matrix shape mismatch");
  }
  if (cfg.include_tsl != (tc != nullptr)) {
    throw std::invalid_argument("textual semantic matrix required iff TSL is enabled");
  }

  LossOutput out;
  auto [tri, tri_grad] = triplet_loss(s, cfg);
  out.triplet = tri;

  const RankMatrix s_ranks = rank_matrix(s, cfg.tau);
  const RankMatrix c_ranks = rank_matrix(c, cfg.tau);
  auto [vs, dvs_dsr] = vsl_loss(s_ranks, c_ranks);
  out.vsl = vs;

  out.grad_S = cfg.alpha * tri_grad;
  // beta == 0 contributes exactly zero gradient; skip the chain rule then
  if (cfg.beta != 0.0) {
    out.grad_S += cfg.beta * rank_matrix_grad(s, cfg.tau, dvs_dsr);
  }

  if (cfg.include_tsl) {
    if (tc->rows() != s.rows() || tc->cols() != s.cols()) {
      throw std::invalid_argument("textual semantic matrix shape mismatch");
    }
    const Eigen::MatrixXd st = s.transpose();
    const RankMatrix st_ranks = rank_matrix(st, cfg.tau);
    const RankMatrix tc_ranks = rank_matrix(*tc, cfg.tau);
    auto [ts, dts_dsr] = tsl_loss(st_ranks, tc_ranks);
    out.tsl = ts;
    if (cfg.beta != 0.0) {
      out.grad_S += cfg.beta * rank_matrix_grad(st, cfg.tau, dts_dsr).transpose();
    }
  }

  out.total = cfg.alpha * out.triplet + cfg.beta * (out.vsl + out.tsl);
  return out;
}

}  // namespace vsl
