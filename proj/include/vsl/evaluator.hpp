#ifndef VSL_EVALUATOR_HPP_
#define VSL_EVALUATOR_HPP_

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

namespace vsl {

/// img_to_txts[i] lists the positive text indices of image i; txt_to_img[t]
/// is the image a text belongs to. The per-image sets are disjoint.
struct GroundTruth {
  std::vector<std::vector<int>> img_to_txts;
  std::vector<int> txt_to_img;
};

enum class Direction { i2t, t2i };

struct RecallTable {
  Direction direction = Direction::i2t;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
};

/// 1-based rank of the best-ranked ground-truth item under descending score
/// order. Ties are broken by lower index first.
int rank_of_ground_truth(const std::vector<double>& scores, const std::vector<int>& gt_indices);

/// Recall@{1,5,10}. i2t queries are image rows of `scores` (success if any
/// positive text ranks within K); t2i queries are text columns (success if
/// the owning image ranks within K).
RecallTable recall_table(const Eigen::MatrixXd& scores, const GroundTruth& gt, Direction direction);

/// Both directions at once.
std::pair<RecallTable, RecallTable> recall_tables(const Eigen::MatrixXd& scores,
                                                  const GroundTruth& gt);

/// Fold-averaged evaluation: images are split into `folds` contiguous chunks,
/// each evaluated against only its own texts, and the tables are averaged.
std::pair<RecallTable, RecallTable> recall_tables_folds(const Eigen::MatrixXd& scores,
                                                        const GroundTruth& gt, int folds);

/// Aligned text row: i2t R@1/5/10 then t2i R@1/5/10.
std::string format_recall_row(const std::string& label, const RecallTable& i2t,
                              const RecallTable& t2i);
std::string format_recall_header();

}  // namespace vsl

#endif  // VSL_EVALUATOR_HPP_
