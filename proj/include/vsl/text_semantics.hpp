#ifndef VSL_TEXT_SEMANTICS_HPP_
#define VSL_TEXT_SEMANTICS_HPP_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vsl {

// n-gram orders used by the caption similarity kernel
inline constexpr int kNGramLevels = 4;

struct Caption {
  std::string raw;
  std::vector<std::string> tokens;  // lowercased, punctuation stripped
};

/// Lowercases, strips punctuation characters, splits on whitespace.
/// Digits are kept; the result never contains empty tokens.
std::vector<std::string> tokenize(const std::string& raw);

Caption make_caption(const std::string& raw);
std::vector<Caption> make_captions(const std::vector<std::string>& raw);

/// Image-level document frequencies: doc_freq[n][g] counts the images in
/// whose positive-text set the (n+1)-gram g appears at least once.
struct CorpusStats {
  std::size_t num_documents = 0;
  std::array<std::map<std::string, std::uint32_t>, kNGramLevels> doc_freq;
};

/// Per-level TF-IDF weighted n-gram vectors of one caption.
struct NGramProfile {
  std::array<std::map<std::string, double>, kNGramLevels> levels;
};

/// Batch-level intra-modal similarity matrix C; entries in [0, 1], symmetric.
using SemanticMatrix = Eigen::MatrixXd;

CorpusStats build_corpus_stats(const std::vector<std::vector<Caption>>& pt_sets);

/// TF-IDF vector of a caption. TF is the n-gram count normalized by the
/// total n-gram count of its level; IDF is log(num_documents / doc_freq).
/// n-grams unknown to the stats are treated as rare (doc_freq = 1).
NGramProfile tfidf_vector(const Caption& caption, const CorpusStats& stats);

/// Cosine per n-gram level, averaged over the 4 levels. A level where either
/// profile is empty or has zero norm contributes 0. Result in [0, 1].
double caption_cosine(const NGramProfile& a, const NGramProfile& b);

/// Mean caption cosine over all |pts_i| x |pts_j| pairs.
double semantic_similarity(const std::vector<Caption>& pts_i,
                           const std::vector<Caption>& pts_j,
                           const CorpusStats& stats);

/// Same kernel over precomputed profiles; callers that reuse profile sets
/// across batches avoid re-vectorizing the captions.
double semantic_similarity(const std::vector<NGramProfile>& profiles_i,
                           const std::vector<NGramProfile>& profiles_j);

/// Semantic similarity matrix over a batch of positive-text sets.
SemanticMatrix semantic_matrix(const std::vector<std::vector<Caption>>& batch,
                               const CorpusStats& stats);

// JSON cache for corpus statistics (carries a format-version field).
void save_corpus_stats(const CorpusStats& stats, const std::string& path);
CorpusStats load_corpus_stats(const std::string& path);

}  // namespace vsl

#endif  // VSL_TEXT_SEMANTICS_HPP_
