// Independent brute-force references used by the tests. These deliberately
// avoid the library's sparse-profile code path: dense vectors over an
// explicit vocabulary, naive nested loops, full sorts.
#ifndef VSL_TESTS_ORACLES_HPP_
#define VSL_TESTS_ORACLES_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vsl/evaluator.hpp"
#include "vsl/text_semantics.hpp"

namespace oracle {

inline std::vector<std::string> grams(const std::vector<std::string>& tokens, int n) {
  std::vector<std::string> out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (int k = 1; k < n; ++k) {
      g += '\t';
      g += tokens[i + static_cast<std::size_t>(k)];
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Dense evaluation of the semantic kernel over a batch that is also its own
// corpus: document frequencies, TF-IDF vectors, per-level cosines and the
// pair mean are all recomputed from scratch.
inline Eigen::MatrixXd dense_semantic_matrix(const std::vector<std::vector<vsl::Caption>>& batch) {
  const int num_images = static_cast<int>(batch.size());

  // global vocabulary and image-level document frequency per level
  std::vector<std::vector<std::string>> vocab(4);
  std::vector<std::map<std::string, int>> df(4);
  for (int n = 1; n <= 4; ++n) {
    std::set<std::string> all;
    for (const auto& pts : batch) {
      std::set<std::string> in_image;
      for (const auto& cap : pts) {
        for (const auto& g : grams(cap.tokens, n)) in_image.insert(g);
      }
      for (const auto& g : in_image) {
        all.insert(g);
        df[static_cast<std::size_t>(n - 1)][g] += 1;
      }
    }
    vocab[static_cast<std::size_t>(n - 1)].assign(all.begin(), all.end());
  }

  auto dense_vec = [&](const vsl::Caption& cap, int n) {
    const auto& voc = vocab[static_cast<std::size_t>(n - 1)];
    std::vector<double> vec(voc.size(), 0.0);
    const auto gs = grams(cap.tokens, n);
    if (gs.empty()) return vec;
    for (std::size_t vi = 0; vi < voc.size(); ++vi) {
      int count = 0;
      for (const auto& g : gs) {
        if (g == voc[vi]) ++count;
      }
      if (count == 0) continue;
      const double tf = static_cast<double>(count) / static_cast<double>(gs.size());
      const double idf =
          std::log(static_cast<double>(num_images) /
                   static_cast<double>(df[static_cast<std::size_t>(n - 1)].at(voc[vi])));
      vec[vi] = tf * idf;
    }
    return vec;
  };

  auto caption_cos = [&](const vsl::Caption& a, const vsl::Caption& b) {
    double acc = 0.0;
    for (int n = 1; n <= 4; ++n) {
      const auto va = dense_vec(a, n);
      const auto vb = dense_vec(b, n);
      double dot = 0.0;
      double na = 0.0;
      double nb = 0.0;
      for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
      }
      if (na > 0.0 && nb > 0.0) acc += dot / (std::sqrt(na) * std::sqrt(nb));
    }
    return acc / 4.0;
  };

  Eigen::MatrixXd c(num_images, num_images);
  for (int i = 0; i < num_images; ++i) {
    for (int j = 0; j < num_images; ++j) {
      double sum = 0.0;
      for (const auto& pa : batch[static_cast<std::size_t>(i)]) {
        for (const auto& pb : batch[static_cast<std::size_t>(j)]) {
          sum += caption_cos(pa, pb);
        }
      }
      c(i, j) = sum / static_cast<double>(batch[static_cast<std::size_t>(i)].size() *
                                          batch[static_cast<std::size_t>(j)].size());
    }
  }
  return c;
}

// Recall@K by fully sorting every query's gallery (score descending, index
// ascending) and scanning for the first ground-truth item.
inline vsl::RecallTable brute_force_recall(const Eigen::MatrixXd& scores,
                                           const vsl::GroundTruth& gt, vsl::Direction direction) {
  int hits1 = 0;
  int hits5 = 0;
  int hits10 = 0;
  int queries = 0;

  auto rank_via_sort = [](const std::vector<double>& s, const std::set<int>& gt_set) {
    std::vector<int> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (s[static_cast<std::size_t>(a)] != s[static_cast<std::size_t>(b)]) {
        return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
      }
      return a < b;
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (gt_set.count(order[pos]) > 0) return static_cast<int>(pos) + 1;
    }
    return static_cast<int>(order.size()) + 1;
  };

  if (direction == vsl::Direction::i2t) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < scores.cols(); ++j) row.push_back(scores(i, j));
      const auto& g = gt.img_to_txts[static_cast<std::size_t>(i)];
      const int rank = rank_via_sort(row, std::set<int>(g.begin(), g.end()));
      ++queries;
      hits1 += rank <= 1;
      hits5 += rank <= 5;
      hits10 += rank <= 10;
    }
  } else {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      std::vector<double> col;
      for (Eigen::Index i = 0; i < scores.rows(); ++i) col.push_back(scores(i, j));
      const int rank =
          rank_via_sort(col, std::set<int>{gt.txt_to_img[static_cast<std::size_t>(j)]});
      ++queries;
      hits1 += rank <= 1;
      hits5 += rank <= 5;
      hits10 += rank <= 10;
    }
  }
  vsl::RecallTable t;
  t.direction = direction;
  t.r1 = static_cast<double>(hits1) / queries;
  t.r5 = static_cast<double>(hits5) / queries;
  t.r10 = static_cast<double>(hits10) / queries;
  return t;
}

}  // namespace oracle

#endif  // VSL_TESTS_ORACLES_HPP_
