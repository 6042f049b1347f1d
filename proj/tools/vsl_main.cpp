// Command-line front end: dataset synthesis, semantic-matrix computation,
// training, evaluation, and numeric self-checks.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vsl/config_file.hpp"
#include "vsl/data_io.hpp"
#include "vsl/encoder.hpp"
#include "vsl/evaluator.hpp"
#include "vsl/gradcheck.hpp"
#include "vsl/losses.hpp"
#include "vsl/synth.hpp"
#include "vsl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out.empty() ? "." : out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw UsageError("cannot create output directory: " + dir.string());
  }
  return dir;
}

// write-to-temp then rename, so readers never observe a partial file
void atomic_write_text(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' has a non-numeric value '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' has a non-integer value '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw UsageError("config key '" + key + "' has a non-boolean value '" + value + "'");
}

// command-line flag > config file > built-in default
void apply_config_file(
    const CLI::App& cmd, const std::string& config_path,
    const std::vector<std::pair<std::string, std::function<void(const std::string&)>>>& keys) {
  if (config_path.empty()) return;
  std::set<std::string> known;
  for (const auto& [key, setter] : keys) known.insert(key);
  const auto values = vsl::parse_config_file(config_path, known);
  for (const auto& [key, setter] : keys) {
    const auto it = values.find(key);
    if (it == values.end()) continue;
    if (cmd.count("--" + key) > 0) continue;  // explicit flag wins
    setter(it->second);
  }
}

vsl::NegativeMining parse_mining(const std::string& value) {
  if (value == "hardest") return vsl::NegativeMining::hardest;
  if (value == "sum_all") return vsl::NegativeMining::sum_all;
  throw UsageError("mining must be 'hardest' or 'sum_all', got '" + value + "'");
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  vsl::SynthConfig cfg;
  std::string out = ".";
  std::string config_path;
};

int run_synth(const SynthOpts& opts_in, const CLI::App& cmd) {
  SynthOpts opts = opts_in;
  apply_config_file(
      cmd, opts.config_path,
      {
          {"images", [&](const std::string& v) { opts.cfg.num_images = static_cast<int>(parse_int("images", v)); }},
          {"concepts", [&](const std::string& v) { opts.cfg.concepts = static_cast<int>(parse_int("concepts", v)); }},
          {"confound", [&](const std::string& v) { opts.cfg.confound_rate = parse_double("confound", v); }},
          {"noise", [&](const std::string& v) { opts.cfg.feature_noise = parse_double("noise", v); }},
          {"q", [&](const std::string& v) { opts.cfg.q_per_image = static_cast<int>(parse_int("q", v)); }},
          {"seed", [&](const std::string& v) { opts.cfg.seed = static_cast<std::uint64_t>(parse_int("seed", v)); }},
      });

  const fs::path dir = ensure_out_dir(opts.out);
  const auto result = vsl::synth_generate(opts.cfg);

  const fs::path caps = dir / "dataset.captions.json";
  const fs::path img = dir / "features.img.fvec";
  const fs::path txt = dir / "features.txt.fvec";
  const fs::path meta = dir / "synth.meta.json";
  vsl::save_captions(caps.string(), {result.dataset.image_ids, result.dataset.captions});
  vsl::save_features(img.string(), result.dataset.image_features);
  vsl::save_features(txt.string(), result.dataset.text_features);
  vsl::save_synth_meta(meta.string(), result.meta);

  int planted = 0;
  for (const auto f : result.meta.confounded) planted += f;
  std::cout << "wrote " << caps.string() << "\n"
            << "wrote " << img.string() << "\n"
            << "wrote " << txt.string() << "\n"
            << "wrote " << meta.string() << "\n"
            << "dataset: " << opts.cfg.num_images << " images x " << opts.cfg.q_per_image
            << " texts, " << opts.cfg.concepts << " concepts, " << planted
            << " planted confusers, noise " << opts.cfg.feature_noise << ", seed "
            << opts.cfg.seed << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// semsim

struct SemsimOpts {
  std::string captions;
  std::vector<std::string> ids;
  std::string out = ".";
};

int run_semsim(const SemsimOpts& opts) {
  const auto corpus = vsl::load_captions(opts.captions);
  const auto stats = vsl::build_corpus_stats(corpus.captions);

  std::vector<std::string> ids = opts.ids;
  if (ids.empty()) ids = corpus.image_ids;  // full corpus by default

  std::vector<std::vector<vsl::Caption>> batch;
  for (const auto& id : ids) {
    std::size_t pos = 0;
    while (pos < corpus.image_ids.size() && corpus.image_ids[pos] != id) ++pos;
    if (pos == corpus.image_ids.size()) throw UsageError("unknown image_id: " + id);
    batch.push_back(corpus.captions[pos]);
  }
  const auto matrix = vsl::semantic_matrix(batch, stats);

  nlohmann::json j;
  j["format_version"] = 1;
  j["image_ids"] = ids;
  auto& rows = j["matrix"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) row.push_back(matrix(r, c));
    rows.push_back(std::move(row));
  }
  const fs::path out = ensure_out_dir(opts.out) / "semantic.json";
  atomic_write_text(out, j.dump(2) + "\n");
  std::cout << "wrote " << out.string() << " (" << matrix.rows() << "x" << matrix.cols() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string captions;
  std::string img_features;
  std::string txt_features;
  std::string out = ".";
  std::string mining = "hardest";
  std::string config_path;
  vsl::TrainConfig cfg;
};

int run_train(const TrainOpts& opts_in, const CLI::App& cmd) {
  TrainOpts opts = opts_in;
  apply_config_file(
      cmd, opts.config_path,
      {
          {"alpha", [&](const std::string& v) { opts.cfg.loss.alpha = parse_double("alpha", v); }},
          {"beta", [&](const std::string& v) { opts.cfg.loss.beta = parse_double("beta", v); }},
          {"margin", [&](const std::string& v) { opts.cfg.loss.margin = parse_double("margin", v); }},
          {"tau", [&](const std::string& v) { opts.cfg.loss.tau = parse_double("tau", v); }},
          {"tsl", [&](const std::string& v) { opts.cfg.loss.include_tsl = parse_bool("tsl", v); }},
          {"mining", [&](const std::string& v) { opts.mining = v; }},
          {"batch", [&](const std::string& v) { opts.cfg.batch_size = static_cast<int>(parse_int("batch", v)); }},
          {"epochs", [&](const std::string& v) { opts.cfg.epochs = static_cast<int>(parse_int("epochs", v)); }},
          {"lr", [&](const std::string& v) { opts.cfg.lr_initial = parse_double("lr", v); }},
          {"lr-decayed", [&](const std::string& v) { opts.cfg.lr_decayed = parse_double("lr-decayed", v); }},
          {"decay-epoch", [&](const std::string& v) { opts.cfg.decay_epoch = static_cast<int>(parse_int("decay-epoch", v)); }},
          {"emb", [&](const std::string& v) { opts.cfg.d_emb = static_cast<int>(parse_int("emb", v)); }},
          {"seed", [&](const std::string& v) { opts.cfg.seed = static_cast<std::uint64_t>(parse_int("seed", v)); }},
          {"clip", [&](const std::string& v) { opts.cfg.clip_norm = parse_double("clip", v); }},
          {"grad-check", [&](const std::string& v) { opts.cfg.grad_check = parse_bool("grad-check", v); }},
      });
  opts.cfg.loss.mining = parse_mining(opts.mining);

  // effective configuration, including defaults the config leaves open
  std::cout << "train config: alpha=" << opts.cfg.loss.alpha << " beta=" << opts.cfg.loss.beta
            << " margin=" << opts.cfg.loss.margin << " tau=" << opts.cfg.loss.tau
            << " mining=" << opts.mining << " tsl=" << (opts.cfg.loss.include_tsl ? "on" : "off")
            << " batch=" << opts.cfg.batch_size << " epochs=" << opts.cfg.epochs << " lr="
            << opts.cfg.lr_initial << "->" << opts.cfg.lr_decayed << "@" << opts.cfg.decay_epoch
            << " emb=" << opts.cfg.d_emb << " seed=" << opts.cfg.seed << "\n";

  const fs::path dir = ensure_out_dir(opts.out);
  const auto dataset = vsl::assemble_dataset(opts.captions, opts.img_features, opts.txt_features);
  auto result = vsl::train(dataset, opts.cfg);

  for (const auto& e : result.report.epochs) {
    std::cout << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.loss_total << " (triplet "
              << e.loss_triplet << " vsl " << e.loss_vsl << " tsl " << e.loss_tsl
              << ") val i2t R@1 " << e.val_i2t.r1 << " t2i R@1 " << e.val_t2i.r1 << " ["
              << e.seconds << "s]\n";
  }

  const fs::path snap = dir / "encoder.vslm";
  vsl::save_encoder(result.encoder, snap.string());
  result.report.snapshot_path = "encoder.vslm";
  const fs::path report = dir / "report.json";
  atomic_write_text(report, vsl::report_to_json(opts.cfg, result.report));
  std::cout << "wrote " << snap.string() << "\nwrote " << report.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string snapshot;
  std::string captions;
  std::string img_features;
  std::string txt_features;
  std::string synth_meta;
  std::string out = ".";
  int folds = 1;
};

int run_eval(const EvalOpts& opts) {
  const auto dataset = vsl::assemble_dataset(opts.captions, opts.img_features, opts.txt_features);
  const auto enc = vsl::load_encoder(opts.snapshot);
  if (enc.d_img() != dataset.image_features.cols() ||
      enc.d_txt() != dataset.text_features.cols()) {
    throw UsageError("snapshot dimensions do not match features (snapshot " +
                     std::to_string(enc.d_img()) + "/" + std::to_string(enc.d_txt()) +
                     ", features " + std::to_string(dataset.image_features.cols()) + "/" +
                     std::to_string(dataset.text_features.cols()) + ")");
  }

  const auto [u, v] = vsl::encode(enc, dataset.image_features, dataset.text_features);
  const Eigen::MatrixXd scores = vsl::cosine_similarity_matrix(u, v);
  const auto [i2t, t2i] = vsl::recall_tables_folds(scores, dataset.ground_truth, opts.folds);

  std::cout << vsl::format_recall_header() << "\n"
            << vsl::format_recall_row(fs::path(opts.snapshot).filename().string(), i2t, t2i)
            << "\n";

  nlohmann::json j;
  j["format_version"] = 1;
  j["folds"] = opts.folds;
  j["i2t"] = {{"r1", i2t.r1}, {"r5", i2t.r5}, {"r10", i2t.r10}};
  j["t2i"] = {{"r1", t2i.r1}, {"r5", t2i.r5}, {"r10", t2i.r10}};

  if (!opts.synth_meta.empty()) {
    const auto meta = vsl::load_synth_meta(opts.synth_meta);
    const int wins = vsl::count_confuser_wins(scores, dataset.ground_truth, meta);
    j["confuser_wins"] = wins;
    std::cout << "confuser wins: " << wins << " of " << scores.cols() << " queries\n";
  }

  const fs::path out = ensure_out_dir(opts.out) / "recall.json";
  atomic_write_text(out, j.dump(2) + "\n");
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rankcheck

struct RankcheckOpts {
  double tau = 0.001;
  std::uint64_t seed = 1;
};

int run_rankcheck(const RankcheckOpts& opts) {
  bool all_pass = true;
  auto show = [&](const std::string& name, const vsl::CheckReport& r) {
    if (r.skipped) {
      std::cout << "SKIP " << name << ": " << r.detail << "\n";
      return;
    }
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << "\n";
    all_pass = all_pass && r.pass;
  };

  const double bound = vsl::hard_rank_deviation_bound(8, 0.01, opts.tau);
  if (bound > 1e-3) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "expected deviation bound %.3e at tau=%g exceeds tolerance 1e-3", bound,
                  opts.tau);
    show("hard-rank fidelity", {false, true, buf});
  } else {
    show("hard-rank fidelity",
         vsl::hard_rank_fidelity_check(opts.seed, 100, 8, opts.tau, 0.01, 1e-3));
  }

  show("rank gradient vs FD", vsl::fd_rank_matrix_check(opts.seed, 20, 0.1, 1e-4));
  show("triplet gradient vs FD", vsl::fd_triplet_check(opts.seed, 20, 1e-4));
  show("vsl gradient vs FD", vsl::fd_vsl_check(opts.seed, 20, 0.1, 1e-4));
  show("tsl gradient vs FD", vsl::fd_tsl_check(opts.seed, 20, 0.1, 1e-4));
  show("total-loss gradient vs FD", vsl::fd_total_loss_check(opts.seed, 20, 0.1, 1e-4));
  show("vsl identities", vsl::vsl_identity_check(opts.seed));

  return all_pass ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visual-semantic metric learning toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  SynthOpts synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic main/secondary dataset");
  synth_cmd->add_option("--images", synth.cfg.num_images, "number of images")
      ->capture_default_str();
  synth_cmd->add_option("--concepts", synth.cfg.concepts, "distinct main-content concepts")
      ->capture_default_str();
  synth_cmd->add_option("--confound", synth.cfg.confound_rate,
                        "fraction of images with a planted cross-concept secondary")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth.cfg.feature_noise, "feature noise stddev")
      ->capture_default_str();
  synth_cmd->add_option("--q", synth.cfg.q_per_image, "positive texts per image")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.cfg.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output directory")->capture_default_str();
  synth_cmd->add_option("--config", synth.config_path, "key = value config file");
  synth_cmd->callback([&] { exit_code = run_synth(synth, *synth_cmd); });

  SemsimOpts semsim;
  auto* semsim_cmd =
      app.add_subcommand("semsim", "semantic similarity matrix from a caption corpus");
  semsim_cmd->add_option("--captions", semsim.captions, "caption corpus JSON")->required();
  semsim_cmd->add_option("--ids", semsim.ids, "image ids to include (default: all)")
      ->delimiter(',');
  semsim_cmd->add_option("--out", semsim.out, "output directory")->capture_default_str();
  semsim_cmd->callback([&] { exit_code = run_semsim(semsim); });

  TrainOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "train the two-branch encoder");
  train_cmd->add_option("--captions", train_opts.captions, "caption corpus JSON")->required();
  train_cmd->add_option("--img-features", train_opts.img_features, "image feature file")
      ->required();
  train_cmd->add_option("--txt-features", train_opts.txt_features, "text feature file")
      ->required();
  train_cmd->add_option("--out", train_opts.out, "output directory")->capture_default_str();
  train_cmd->add_option("--alpha", train_opts.cfg.loss.alpha, "triplet weight")
      ->capture_default_str();
  train_cmd->add_option("--beta", train_opts.cfg.loss.beta, "rank-consistency weight")
      ->capture_default_str();
  train_cmd->add_option("--margin", train_opts.cfg.loss.margin, "triplet margin")
      ->capture_default_str();
  train_cmd->add_option("--tau", train_opts.cfg.loss.tau, "smooth-rank temperature")
      ->capture_default_str();
  train_cmd->add_flag("--tsl", train_opts.cfg.loss.include_tsl, "add the text-side loss");
  train_cmd->add_option("--mining", train_opts.mining, "negative mining: hardest or sum_all")
      ->capture_default_str();
  train_cmd->add_option("--batch", train_opts.cfg.batch_size, "batch size")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.cfg.epochs, "training epochs")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_opts.cfg.lr_initial, "initial learning rate")
      ->capture_default_str();
  train_cmd->add_option("--lr-decayed", train_opts.cfg.lr_decayed, "learning rate after decay")
      ->capture_default_str();
  train_cmd->add_option("--decay-epoch", train_opts.cfg.decay_epoch, "epoch of the LR drop")
      ->capture_default_str();
  train_cmd->add_option("--emb", train_opts.cfg.d_emb, "embedding dimension")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opts.cfg.seed, "training seed")->capture_default_str();
  train_cmd->add_option("--clip", train_opts.cfg.clip_norm, "gradient clip norm (0 = off)")
      ->capture_default_str();
  train_cmd->add_flag("--grad-check", train_opts.cfg.grad_check, "FD spot check every 100 steps");
  train_cmd->add_option("--config", train_opts.config_path, "key = value config file");
  train_cmd->callback([&] { exit_code = run_train(train_opts, *train_cmd); });

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Recall@K evaluation of a snapshot");
  eval_cmd->add_option("--snapshot", eval_opts.snapshot, "encoder snapshot")->required();
  eval_cmd->add_option("--captions", eval_opts.captions, "caption corpus JSON")->required();
  eval_cmd->add_option("--img-features", eval_opts.img_features, "image feature file")
      ->required();
  eval_cmd->add_option("--txt-features", eval_opts.txt_features, "text feature file")
      ->required();
  eval_cmd->add_option("--folds", eval_opts.folds, "fold-averaged evaluation")
      ->capture_default_str();
  eval_cmd->add_option("--synth-meta", eval_opts.synth_meta,
                       "synthetic metadata JSON for the confuser-win count");
  eval_cmd->add_option("--out", eval_opts.out, "output directory")->capture_default_str();
  eval_cmd->callback([&] { exit_code = run_eval(eval_opts); });

  RankcheckOpts rank_opts;
  auto* rank_cmd = app.add_subcommand("rankcheck", "numeric self-checks");
  rank_cmd->add_option("--tau", rank_opts.tau, "temperature for the hard-rank suite")
      ->capture_default_str();
  rank_cmd->add_option("--seed", rank_opts.seed, "seed for the random suites")
      ->capture_default_str();
  rank_cmd->callback([&] { exit_code = run_rankcheck(rank_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const vsl::TrainAbort& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return exit_code;
}
