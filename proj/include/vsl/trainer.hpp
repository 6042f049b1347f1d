#ifndef VSL_TRAINER_HPP_
#define VSL_TRAINER_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsl/adam.hpp"
#include "vsl/data_io.hpp"
#include "vsl/encoder.hpp"
#include "vsl/evaluator.hpp"
#include "vsl/losses.hpp"

namespace vsl {

struct TrainConfig {
  int batch_size = 128;
  int epochs = 25;
  double lr_initial = 0.0003;
  double lr_decayed = 0.00003;
  int decay_epoch = 10;  // lr_initial while epoch < decay_epoch
  std::uint64_t seed = 1;
  int d_emb = 64;
  LossConfig loss;
  AdamParams adam;
  double clip_norm = 0.0;   // 0 disables gradient clipping
  bool grad_check = false;  // FD spot check of one weight every 100 steps
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_triplet = 0.0;
  double loss_vsl = 0.0;
  double loss_tsl = 0.0;
  RecallTable val_i2t;
  RecallTable val_t2i;
  double seconds = 0.0;  // wall clock; not serialized (reports stay seed-reproducible)
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  long steps = 0;
  int effective_batch_size = 0;
  int grad_check_failures = 0;
  std::string snapshot_path;  // set by callers that persist the encoder
};

struct TrainResult {
  TwoBranchEncoder encoder;
  TrainReport report;
};

/// Raised when training hits a non-finite loss or weight; the message names
/// the epoch and batch.
class TrainAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Epochs of shuffled mini-batches. Each batch computes the semantic matrix
/// from its members' positive texts (corpus-level stats), the cosine matrix
/// from the encoder, the combined loss, and one Adam update. The learning
/// rate drops once at decay_epoch. A batch size larger than the train split
/// is clamped with a warning on stderr.
TrainResult train(const RetrievalDataset& dataset, const TrainConfig& cfg,
                  const TwoBranchEncoder* initial = nullptr);

/// Deterministic JSON for report.json: identical runs produce identical
/// bytes, so wall-clock timings are omitted.
std::string report_to_json(const TrainConfig& cfg, const TrainReport& report);

}  // namespace vsl

#endif  // VSL_TRAINER_HPP_
