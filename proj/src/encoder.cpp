#include "vsl/encoder.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vsl/rng.hpp"

namespace vsl {

TwoBranchEncoder init_encoder(Eigen::Index d_img, Eigen::Index d_txt, Eigen::Index d_emb,
                              std::uint64_t seed) {
  if (d_img < 1 || d_txt < 1 || d_emb < 1) throw std::invalid_argument("dimensions must be >= 1");
  Rng rng(seed);
  TwoBranchEncoder enc;
  auto fill = [&rng](Eigen::MatrixXd& w, Eigen::Index rows, Eigen::Index cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    w.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(enc.W_img, d_img, d_emb);
  fill(enc.W_txt, d_txt, d_emb);
  return enc;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> encode(const TwoBranchEncoder& enc,
                                                   const Eigen::MatrixXd& img_feats,
                                                   const Eigen::MatrixXd& txt_feats) {
  if (img_feats.cols() != enc.d_img() || txt_feats.cols() != enc.d_txt()) {
    throw std::invalid_argument("feature dimension does not match encoder");
  }
  return {img_feats * enc.W_img, txt_feats * enc.W_txt};
}

EncoderGradients backward(const TwoBranchEncoder& enc, const Eigen::MatrixXd& img_feats,
                          const Eigen::MatrixXd& txt_feats, const Eigen::MatrixXd& grad_S) {
  const auto [u, v] = encode(enc, img_feats, txt_feats);
  if (grad_S.rows() != u.rows() || grad_S.cols() != v.rows()) {
    throw std::invalid_argument("grad_S shape does not match batch");
  }
  const Eigen::VectorXd unorm = u.rowwise().norm();
  const Eigen::VectorXd vnorm = v.rowwise().norm();
  if ((unorm.array() == 0.0).any() || (vnorm.array() == 0.0).any()) {
    throw std::runtime_error("degenerate embedding");
  }
  const Eigen::MatrixXd uhat = unorm.cwiseInverse().asDiagonal() * u;
  const Eigen::MatrixXd vhat = vnorm.cwiseInverse().asDiagonal() * v;
  const Eigen::MatrixXd s = uhat * vhat.transpose();

  // d s_ij / d u_i = (vhat_j - s_ij uhat_i) / |u_i|
  const Eigen::VectorXd row_dots = (grad_S.array() * s.array()).rowwise().sum();
  const Eigen::MatrixXd du =
      unorm.cwiseInverse().asDiagonal() * (grad_S * vhat - row_dots.asDiagonal() * uhat);
  const Eigen::VectorXd col_dots = (grad_S.array() * s.array()).colwise().sum();
  const Eigen::MatrixXd dv =
      vnorm.cwiseInverse().asDiagonal() * (grad_S.transpose() * uhat - col_dots.asDiagonal() * vhat);

  return {img_feats.transpose() * du, txt_feats.transpose() * dv};
}

namespace {

constexpr char kSnapshotMagic[4] = {'V', 'S', 'L', 'M'};
constexpr std::uint32_t kSnapshotVersion = 1;

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

bool get_u32_le(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
      (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

void put_f64_le(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

bool get_f64_le(std::istream& in, double& d) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  std::memcpy(&d, &bits, 8);
  return true;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64_le(out, m(r, c));
  }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!get_f64_le(in, m(r, c))) throw std::runtime_error("truncated snapshot payload");
    }
  }
}

}  // namespace

void save_encoder(const TwoBranchEncoder& enc, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(kSnapshotMagic, 4);
    put_u32_le(out, kSnapshotVersion);
    put_u32_le(out, static_cast<std::uint32_t>(enc.d_img()));
    put_u32_le(out, static_cast<std::uint32_t>(enc.d_txt()));
    put_u32_le(out, static_cast<std::uint32_t>(enc.d_emb()));
    write_matrix(out, enc.W_img);
    write_matrix(out, enc.W_txt);
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TwoBranchEncoder load_encoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw std::runtime_error("bad snapshot magic");
  }
  std::uint32_t version = 0;
  std::uint32_t d_img = 0;
  std::uint32_t d_txt = 0;
  std::uint32_t d_emb = 0;
  if (!get_u32_le(in, version) || !get_u32_le(in, d_img) || !get_u32_le(in, d_txt) ||
      !get_u32_le(in, d_emb)) {
    throw std::runtime_error("truncated snapshot header");
  }
  if (version != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version");
  TwoBranchEncoder enc;
  enc.W_img.resize(d_img, d_emb);
  enc.W_txt.resize(d_txt, d_emb);
  read_matrix(in, enc.W_img);
  read_matrix(in, enc.W_txt);
  return enc;
}

}  // namespace vsl
