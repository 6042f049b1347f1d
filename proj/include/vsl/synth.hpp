#ifndef VSL_SYNTH_HPP_
#define VSL_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vsl/data_io.hpp"

namespace vsl {

/// Synthetic main/secondary-content generator. Every image gets a main
/// concept (what its captions describe) and a secondary concept mixed into
/// its feature vector at weight 0.6. With probability confound_rate the
/// secondary concept is another image's main concept, planting a feature
/// that matches a foreign text query.
struct SynthConfig {
  int num_images = 300;
  int concepts = 6;
  double confound_rate = 0.5;
  double feature_noise = 0.1;
  int q_per_image = 5;
  std::uint64_t seed = 1;
};

struct SynthMeta {
  int concepts = 0;
  std::vector<int> main_concept;       // per image
  std::vector<int> secondary_concept;  // per image; >= concepts means background
  std::vector<std::uint8_t> confounded;
};

struct SynthResult {
  RetrievalDataset dataset;
  SynthMeta meta;
};

/// Maximum number of distinct concepts the caption templates can describe.
int synth_vocabulary_limit();

SynthResult synth_generate(const SynthConfig& cfg);

/// Number of text queries for which some planted confuser image (secondary
/// concept equal to the query's main concept) outranks the ground-truth
/// image. `scores` is the full n_img x n_txt similarity matrix.
int count_confuser_wins(const Eigen::MatrixXd& scores, const GroundTruth& gt,
                        const SynthMeta& meta);

void save_synth_meta(const std::string& path, const SynthMeta& meta);
SynthMeta load_synth_meta(const std::string& path);

}  // namespace vsl

#endif  // VSL_SYNTH_HPP_
