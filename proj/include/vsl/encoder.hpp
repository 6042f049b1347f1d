#ifndef VSL_ENCODER_HPP_
#define VSL_ENCODER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>

namespace vsl {

/// Two-branch linear encoder into the common embedding space.
struct TwoBranchEncoder {
  Eigen::MatrixXd W_img;  // d_img x d_emb
  Eigen::MatrixXd W_txt;  // d_txt x d_emb

  Eigen::Index d_img() const { return W_img.rows(); }
  Eigen::Index d_txt() const { return W_txt.rows(); }
  Eigen::Index d_emb() const { return W_img.cols(); }
};

/// Weights uniform in [-1/sqrt(d_in), +1/sqrt(d_in)] per branch.
TwoBranchEncoder init_encoder(Eigen::Index d_img, Eigen::Index d_txt, Eigen::Index d_emb,
                              std::uint64_t seed);

/// Linear projections of both branches; no normalization (the cosine
/// similarity normalizes).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode(const TwoBranchEncoder& enc,
                                                   const Eigen::MatrixXd& img_feats,
                                                   const Eigen::MatrixXd& txt_feats);

struct EncoderGradients {
  Eigen::MatrixXd W_img;
  Eigen::MatrixXd W_txt;
};

/// Exact gradients of sum_ij grad_S(i,j) * s_ij through the cosine
/// normalization and the linear projections.
EncoderGradients backward(const TwoBranchEncoder& enc, const Eigen::MatrixXd& img_feats,
                          const Eigen::MatrixXd& txt_feats, const Eigen::MatrixXd& grad_S);

/// Snapshot file: magic "VSLM", u32-le version, d_img, d_txt, d_emb, then
/// W_img and W_txt as row-major little-endian float64. Written to a
/// temporary file and renamed, so an interrupted save leaves no partial
/// snapshot.
void save_encoder(const TwoBranchEncoder& enc, const std::string& path);
TwoBranchEncoder load_encoder(const std::string& path);

}  // namespace vsl

#endif  // VSL_ENCODER_HPP_
