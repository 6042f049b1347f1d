#include "vsl/trainer.hpp"

#include <chrono>
#include <unordered_map>
#include <cmath>
#include <iostream>

#include "json.hpp"
#include "vsl/rng.hpp"

namespace vsl {

void validate(const TrainConfig& cfg) {
  validate(cfg.loss);
  if (cfg.batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (!(cfg.lr_initial > 0.0) || !(cfg.lr_decayed > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  if (cfg.decay_epoch > cfg.epochs) throw std::invalid_argument("decay epoch exceeds epochs");
  if (cfg.d_emb < 1) throw std::invalid_argument("embedding dimension must be positive");
  if (cfg.clip_norm < 0.0) throw std::invalid_argument("clip norm must be non-negative");
}

namespace {

struct EvalSubset {
  Eigen::MatrixXd img_feats;
  Eigen::MatrixXd txt_feats;
  GroundTruth gt;
};

EvalSubset gather_eval_subset(const RetrievalDataset& ds, const std::vector<int>& images) {
  EvalSubset sub;
  std::vector<int> txt_rows;
  for (const int i : images) {
    std::vector<int> remapped;
    for (const int t : ds.ground_truth.img_to_txts[static_cast<std::size_t>(i)]) {
      remapped.push_back(static_cast<int>(txt_rows.size()));
      sub.gt.txt_to_img.push_back(static_cast<int>(sub.gt.img_to_txts.size()));
      txt_rows.push_back(t);
    }
    sub.gt.img_to_txts.push_back(std::move(remapped));
  }
  sub.img_feats.resize(static_cast<Eigen::Index>(images.size()), ds.image_features.cols());
  for (std::size_t r = 0; r < images.size(); ++r) {
    sub.img_feats.row(static_cast<Eigen::Index>(r)) = ds.image_features.row(images[r]);
  }
  sub.txt_feats.resize(static_cast<Eigen::Index>(txt_rows.size()), ds.text_features.cols());
  for (std::size_t r = 0; r < txt_rows.size(); ++r) {
    sub.txt_feats.row(static_cast<Eigen::Index>(r)) = ds.text_features.row(txt_rows[r]);
  }
  return sub;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  }
  return out;
}

// Kernel values over fixed captions are pure, so pair values are memoized
// across batches; entries are bitwise identical to semantic_matrix output.
class SemanticCache {
 public:
  SemanticCache(const RetrievalDataset& ds, const CorpusStats& stats) : ds_(ds) {
    image_profiles_.reserve(ds.captions.size());
    for (const auto& pts : ds.captions) {
      std::vector<NGramProfile> profiles;
      profiles.reserve(pts.size());
      for (const auto& cap : pts) profiles.push_back(tfidf_vector(cap, stats));
      image_profiles_.push_back(std::move(profiles));
    }
  }

  // semantic matrix over the batch's images (all positive texts)
  SemanticMatrix image_matrix(const Batch& batch) {
    const auto n = static_cast<Eigen::Index>(batch.image_indices.size());
    SemanticMatrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double v = image_pair(batch.image_indices[static_cast<std::size_t>(i)],
                                    batch.image_indices[static_cast<std::size_t>(j)]);
        c(i, j) = v;
        c(j, i) = v;
      }
    }
    return c;
  }

  // textual semantic matrix among the batch's paired captions
  SemanticMatrix text_matrix(const Batch& batch) {
    const auto n = static_cast<Eigen::Index>(batch.text_indices.size());
    SemanticMatrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double v = text_pair(batch.text_indices[static_cast<std::size_t>(i)],
                                   batch.text_indices[static_cast<std::size_t>(j)]);
        c(i, j) = v;
        c(j, i) = v;
      }
    }
    return c;
  }

 private:
  double image_pair(int a, int b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    const auto it = image_cache_.find(key);
    if (it != image_cache_.end()) return it->second;
    const double v = semantic_similarity(image_profiles_[static_cast<std::size_t>(a)],
                                         image_profiles_[static_cast<std::size_t>(b)]);
    image_cache_.emplace(key, v);
    return v;
  }

  double text_pair(int a, int b) {
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    const auto it = text_cache_.find(key);
    if (it != text_cache_.end()) return it->second;
    const double v =
        semantic_similarity(std::vector<NGramProfile>{*text_profile(a)},
                            std::vector<NGramProfile>{*text_profile(b)});
    text_cache_.emplace(key, v);
    return v;
  }

  const NGramProfile* text_profile(int t) const {
    const int img = ds_.ground_truth.txt_to_img[static_cast<std::size_t>(t)];
    const auto& txts = ds_.ground_truth.img_to_txts[static_cast<std::size_t>(img)];
    std::size_t q = 0;
    while (q < txts.size() && txts[q] != t) ++q;
    return &image_profiles_[static_cast<std::size_t>(img)][q];
  }

  const RetrievalDataset& ds_;
  std::vector<std::vector<NGramProfile>> image_profiles_;
  std::unordered_map<std::uint64_t, double> image_cache_;
  std::unordered_map<std::uint64_t, double> text_cache_;
};

double spot_check_gradient(const TwoBranchEncoder& enc, const Eigen::MatrixXd& img_feats,
                           const Eigen::MatrixXd& txt_feats, const SemanticMatrix& c,
                           const SemanticMatrix* tc, LossConfig loss_cfg, Rng& rng) {
  loss_cfg.tau = 0.1;  // finite differences are unreliable at the training tau
  auto eval = [&](const TwoBranchEncoder& e) {
    const auto [u, v] = encode(e, img_feats, txt_feats);
    return total_loss(cosine_similarity_matrix(u, v), c, tc, loss_cfg).total;
  };
  const auto [u, v] = encode(enc, img_feats, txt_feats);
  const auto out = total_loss(cosine_similarity_matrix(u, v), c, tc, loss_cfg);
  const EncoderGradients grads = backward(enc, img_feats, txt_feats, out.grad_S);

  const bool img_branch = rng.below(2) == 0;
  const Eigen::MatrixXd& w = img_branch ? enc.W_img : enc.W_txt;
  const Eigen::MatrixXd& g = img_branch ? grads.W_img : grads.W_txt;
  const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.rows())));
  const auto col = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.cols())));

  const double h = 1e-6;
  TwoBranchEncoder probe = enc;
  Eigen::MatrixXd& pw = img_branch ? probe.W_img : probe.W_txt;
  pw(r, col) = w(r, col) + h;
  const double up = eval(probe);
  pw(r, col) = w(r, col) - h;
  const double down = eval(probe);
  const double fd = (up - down) / (2.0 * h);
  return std::abs(g(r, col) - fd) / std::max(std::abs(fd), 1e-8);
}

}  // namespace

TrainResult train(const RetrievalDataset& dataset, const TrainConfig& cfg,
                  const TwoBranchEncoder* initial) {
  validate(cfg);

  std::vector<int> train_imgs;
  std::vector<int> val_imgs;
  for (std::size_t i = 0; i < dataset.split.size(); ++i) {
    if (dataset.split[i] == Split::train) train_imgs.push_back(static_cast<int>(i));
    if (dataset.split[i] == Split::val) val_imgs.push_back(static_cast<int>(i));
  }
  if (train_imgs.size() < 2) throw std::invalid_argument("training split needs at least 2 images");

  int batch_size = cfg.batch_size;
  if (static_cast<std::size_t>(batch_size) > train_imgs.size()) {
    batch_size = static_cast<int>(train_imgs.size());
    std::cerr << "warning: batch size " << cfg.batch_size << " exceeds dataset size "
              << train_imgs.size() << "; clamped to " << batch_size << "\n";
  }

  std::vector<std::vector<Caption>> train_pts;
  train_pts.reserve(train_imgs.size());
  for (const int i : train_imgs) train_pts.push_back(dataset.captions[static_cast<std::size_t>(i)]);
  const CorpusStats stats = build_corpus_stats(train_pts);

  TrainResult result;
  result.encoder = initial != nullptr
                       ? *initial
                       : init_encoder(dataset.image_features.cols(), dataset.text_features.cols(),
                                      cfg.d_emb, cfg.seed);
  if (result.encoder.d_img() != dataset.image_features.cols() ||
      result.encoder.d_txt() != dataset.text_features.cols()) {
    throw std::invalid_argument("initial encoder does not match feature dimensions");
  }
  result.report.effective_batch_size = batch_size;

  AdamState img_state = AdamState::zeros(result.encoder.W_img.rows(), result.encoder.W_img.cols());
  AdamState txt_state = AdamState::zeros(result.encoder.W_txt.rows(), result.encoder.W_txt.cols());

  const EvalSubset val = gather_eval_subset(dataset, val_imgs.empty() ? train_imgs : val_imgs);
  SemanticCache semantics(dataset, stats);
  Rng check_rng(cfg.seed ^ 0xC0FFEEull);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = epoch < cfg.decay_epoch ? cfg.lr_initial : cfg.lr_decayed;
    const auto batches = batch_sampler(dataset, batch_size, cfg.seed, epoch);
    if (batches.empty()) throw std::invalid_argument("no full batch; reduce batch size");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      const Eigen::MatrixXd img_feats = gather_rows(dataset.image_features, batch.image_indices);
      const Eigen::MatrixXd txt_feats = gather_rows(dataset.text_features, batch.text_indices);
      const SemanticMatrix c = semantics.image_matrix(batch);
      SemanticMatrix tc;
      if (cfg.loss.include_tsl) tc = semantics.text_matrix(batch);

      const auto [u, v] = encode(result.encoder, img_feats, txt_feats);
      const Eigen::MatrixXd s = cosine_similarity_matrix(u, v);
      const LossOutput out =
          total_loss(s, c, cfg.loss.include_tsl ? &tc : nullptr, cfg.loss);
      if (!std::isfinite(out.total)) {
        throw TrainAbort("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                         std::to_string(b));
      }

      EncoderGradients grads = backward(result.encoder, img_feats, txt_feats, out.grad_S);
      if (cfg.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.W_img.squaredNorm() + grads.W_txt.squaredNorm());
        if (norm > cfg.clip_norm) {
          const double scale = cfg.clip_norm / norm;
          grads.W_img *= scale;
          grads.W_txt *= scale;
        }
      }

      ++result.report.steps;
      if (cfg.grad_check && result.report.steps % 100 == 0) {
        const double rel = spot_check_gradient(result.encoder, img_feats, txt_feats, c,
                                               cfg.loss.include_tsl ? &tc : nullptr, cfg.loss,
                                               check_rng);
        if (rel > 1e-3) {
          ++result.report.grad_check_failures;
          std::cerr << "warning: gradient spot check failed at step " << result.report.steps
                    << " (rel err " << rel << ")\n";
        }
      }

      adam_step(result.encoder.W_img, img_state, grads.W_img, lr, cfg.adam);
      adam_step(result.encoder.W_txt, txt_state, grads.W_txt, lr, cfg.adam);
      if (!result.encoder.W_img.allFinite() || !result.encoder.W_txt.allFinite()) {
        throw TrainAbort("non-finite weights after update at epoch " + std::to_string(epoch) +
                         " batch " + std::to_string(b));
      }

      rec.loss_total += out.total;
      rec.loss_triplet += out.triplet;
      rec.loss_vsl += out.vsl;
      rec.loss_tsl += out.tsl;
    }
    const double inv_b = 1.0 / static_cast<double>(batches.size());
    rec.loss_total *= inv_b;
    rec.loss_triplet *= inv_b;
    rec.loss_vsl *= inv_b;
    rec.loss_tsl *= inv_b;

    const auto [vu, vv] = encode(result.encoder, val.img_feats, val.txt_feats);
    const auto tables = recall_tables(cosine_similarity_matrix(vu, vv), val.gt);
    rec.val_i2t = tables.first;
    rec.val_t2i = tables.second;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
  }
  return result;
}

std::string report_to_json(const TrainConfig& cfg, const TrainReport& report) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = {
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"lr_initial", cfg.lr_initial},
      {"lr_decayed", cfg.lr_decayed},
      {"decay_epoch", cfg.decay_epoch},
      {"seed", cfg.seed},
      {"d_emb", cfg.d_emb},
      {"margin", cfg.loss.margin},
      {"alpha", cfg.loss.alpha},
      {"beta", cfg.loss.beta},
      {"tau", cfg.loss.tau},
      {"mining", cfg.loss.mining == NegativeMining::hardest ? "hardest" : "sum_all"},
      {"tsl", cfg.loss.include_tsl},
      {"clip_norm", cfg.clip_norm},
  };
  j["effective_batch_size"] = report.effective_batch_size;
  j["steps"] = report.steps;
  j["grad_check_failures"] = report.grad_check_failures;
  j["snapshot"] = report.snapshot_path;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({
        {"epoch", e.epoch},
        {"lr", e.lr},
        {"loss_total", e.loss_total},
        {"loss_triplet", e.loss_triplet},
        {"loss_vsl", e.loss_vsl},
        {"loss_tsl", e.loss_tsl},
        {"val",
         {{"i2t", {{"r1", e.val_i2t.r1}, {"r5", e.val_i2t.r5}, {"r10", e.val_i2t.r10}}},
          {"t2i", {{"r1", e.val_t2i.r1}, {"r5", e.val_t2i.r5}, {"r10", e.val_t2i.r10}}}}},
    });
  }
  return j.dump(2) + "\n";
}

}  // namespace vsl
