#ifndef VSL_DATA_IO_HPP_
#define VSL_DATA_IO_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "vsl/evaluator.hpp"
#include "vsl/text_semantics.hpp"

namespace vsl {

enum class Split : std::uint8_t { train, val, test };

/// Image features paired with per-image positive texts. Text row t of
/// text_features belongs to image ground_truth.txt_to_img[t]; texts are
/// numbered image by image in caption order.
struct RetrievalDataset {
  Eigen::MatrixXd image_features;  // n_img x d_img
  Eigen::MatrixXd text_features;   // n_txt x d_txt
  std::vector<std::string> image_ids;
  std::vector<std::vector<Caption>> captions;  // per image, size >= 1 each
  GroundTruth ground_truth;
  std::vector<Split> split;  // per image

  Eigen::Index num_images() const { return image_features.rows(); }
  Eigen::Index num_texts() const { return text_features.rows(); }
};

struct CaptionCorpus {
  std::vector<std::string> image_ids;
  std::vector<std::vector<Caption>> captions;
};

/// Reads the caption corpus JSON: an array of
/// {"image_id": string, "captions": [string, ...]} objects, order-preserving.
CaptionCorpus load_captions(const std::string& path);
void save_captions(const std::string& path, const CaptionCorpus& corpus);

/// Feature file: magic "FVEC", version byte, u32-le count, u32-le dim, then
/// count*dim little-endian float32 values. Loaded values are promoted to
/// double.
Eigen::MatrixXd load_features(const std::string& path);
void save_features(const std::string& path, const Eigen::MatrixXd& features);

/// Sequential text numbering from per-image caption counts.
GroundTruth build_ground_truth(const std::vector<std::vector<Caption>>& captions);

/// Assembles a dataset from the two feature files plus captions, validating
/// that the counts agree. All images are labeled train.
RetrievalDataset assemble_dataset(const std::string& captions_path,
                                  const std::string& img_features_path,
                                  const std::string& txt_features_path);

/// One mini-batch: images paired with one positive text each; the pairing
/// defines the diagonal of the batch similarity matrix.
struct Batch {
  std::vector<int> image_indices;
  std::vector<int> text_indices;
};

/// Shuffled batches over the train split for one epoch. Each image is paired
/// with caption (epoch mod Q_i), rotating through its positive texts across
/// epochs. The last partial batch is dropped.
std::vector<Batch> batch_sampler(const RetrievalDataset& dataset, int batch_size,
                                 std::uint64_t seed, int epoch);

std::vector<std::vector<Caption>> gather_pt_sets(const RetrievalDataset& dataset,
                                                 const Batch& batch);

}  // namespace vsl

#endif  // VSL_DATA_IO_HPP_
