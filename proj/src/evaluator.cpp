#include "vsl/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace vsl {

int rank_of_ground_truth(const std::vector<double>& scores, const std::vector<int>& gt_indices) {
  if (gt_indices.empty()) throw std::invalid_argument("empty ground-truth set");
  const int n = static_cast<int>(scores.size());
  int best = n + 1;
  for (const int g : gt_indices) {
    if (g < 0 || g >= n) throw std::out_of_range("ground-truth index out of bounds");
    int rank = 1;
    const double sg = scores[static_cast<std::size_t>(g)];
    for (int k = 0; k < n; ++k) {
      const double sk = scores[static_cast<std::size_t>(k)];
      if (sk > sg || (sk == sg && k < g)) ++rank;
    }
    best = std::min(best, rank);
  }
  return best;
}

namespace {

void validate_shapes(const Eigen::MatrixXd& scores, const GroundTruth& gt) {
  if (scores.rows() != static_cast<Eigen::Index>(gt.img_to_txts.size()) ||
      scores.cols() != static_cast<Eigen::Index>(gt.txt_to_img.size())) {
    throw std::invalid_argument("score matrix shape does not match ground truth");
  }
}

}  // namespace

RecallTable recall_table(const Eigen::MatrixXd& scores, const GroundTruth& gt,
                         Direction direction) {
  validate_shapes(scores, gt);
  RecallTable table;
  table.direction = direction;
  int hits1 = 0;
  int hits5 = 0;
  int hits10 = 0;
  int queries = 0;

  auto tally = [&](int rank) {
    ++queries;
    if (rank <= 1) ++hits1;
    if (rank <= 5) ++hits5;
    if (rank <= 10) ++hits10;
  };

  if (direction == Direction::i2t) {
    std::vector<double> row(static_cast<std::size_t>(scores.cols()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        row[static_cast<std::size_t>(j)] = scores(i, j);
      }
      tally(rank_of_ground_truth(row, gt.img_to_txts[static_cast<std::size_t>(i)]));
    }
  } else {
    std::vector<double> col(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        col[static_cast<std::size_t>(i)] = scores(i, j);
      }
      tally(rank_of_ground_truth(col, {gt.txt_to_img[static_cast<std::size_t>(j)]}));
    }
  }
  if (queries == 0) throw std::invalid_argument("no queries to evaluate");
  table.r1 = static_cast<double>(hits1) / queries;
  table.r5 = static_cast<double>(hits5) / queries;
  table.r10 = static_cast<double>(hits10) / queries;
  return table;
}

std::pair<RecallTable, RecallTable> recall_tables(const Eigen::MatrixXd& scores,
                                                  const GroundTruth& gt) {
  return {recall_table(scores, gt, Direction::i2t), recall_table(scores, gt, Direction::t2i)};
}

std::pair<RecallTable, RecallTable> recall_tables_folds(const Eigen::MatrixXd& scores,
                                                        const GroundTruth& gt, int folds) {
  validate_shapes(scores, gt);
  const int n_img = static_cast<int>(gt.img_to_txts.size());
  if (folds < 1 || folds > n_img) throw std::invalid_argument("fold count out of range");
  if (folds == 1) return recall_tables(scores, gt);

  RecallTable avg_i2t;
  RecallTable avg_t2i;
  avg_i2t.direction = Direction::i2t;
  avg_t2i.direction = Direction::t2i;

  for (int f = 0; f < folds; ++f) {
    const int lo = static_cast<int>(static_cast<long>(f) * n_img / folds);
    const int hi = static_cast<int>(static_cast<long>(f + 1) * n_img / folds);

    GroundTruth sub;
    std::vector<int> txt_cols;
    for (int i = lo; i < hi; ++i) {
      std::vector<int> remapped;
      for (const int t : gt.img_to_txts[static_cast<std::size_t>(i)]) {
        remapped.push_back(static_cast<int>(txt_cols.size()));
        txt_cols.push_back(t);
        sub.txt_to_img.push_back(i - lo);
      }
      sub.img_to_txts.push_back(std::move(remapped));
    }

    Eigen::MatrixXd s(hi - lo, static_cast<Eigen::Index>(txt_cols.size()));
    for (int i = lo; i < hi; ++i) {
      for (std::size_t c = 0; c < txt_cols.size(); ++c) {
        s(i - lo, static_cast<Eigen::Index>(c)) = scores(i, txt_cols[c]);
      }
    }

    const auto [i2t, t2i] = recall_tables(s, sub);
    avg_i2t.r1 += i2t.r1;
    avg_i2t.r5 += i2t.r5;
    avg_i2t.r10 += i2t.r10;
    avg_t2i.r1 += t2i.r1;
    avg_t2i.r5 += t2i.r5;
    avg_t2i.r10 += t2i.r10;
  }
  const double inv = 1.0 / folds;
  avg_i2t.r1 *= inv;
  avg_i2t.r5 *= inv;
  avg_i2t.r10 *= inv;
  avg_t2i.r1 *= inv;
  avg_t2i.r5 *= inv;
  avg_t2i.r10 *= inv;
  return {avg_i2t, avg_t2i};
}

std::string format_recall_header() {
  return "                     Image to Text        Text to Image\n"
         "                     R@1   R@5   R@10     R@1   R@5   R@10";
}

std::string format_recall_row(const std::string& label, const RecallTable& i2t,
                              const RecallTable& t2i) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-20s %5.1f %5.1f %5.1f   %5.1f %5.1f %5.1f", label.c_str(),
                100.0 * i2t.r1, 100.0 * i2t.r5, 100.0 * i2t.r10, 100.0 * t2i.r1, 100.0 * t2i.r5,
                100.0 * t2i.r10);
  return buf;
}

}  // namespace vsl
