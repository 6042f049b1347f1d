#include "vsl/synth.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "vsl/rng.hpp"

namespace vsl {

namespace {

// One disjoint word set per concept so the caption kernel separates
// concepts cleanly at small corpus size.
struct ConceptWords {
  const char* noun;
  const char* verb;
  const char* adj;
  const char* place;
};

constexpr std::array<ConceptWords, 12> kConceptWords = {{
    {"dog", "runs", "brown", "park"},
    {"cat", "sleeps", "sleepy", "sofa"},
    {"horse", "gallops", "tall", "field"},
    {"car", "drives", "red", "road"},
    {"boat", "sails", "white", "harbor"},
    {"plane", "flies", "silver", "sky"},
    {"bird", "sings", "small", "tree"},
    {"fish", "swims", "golden", "pond"},
    {"tram", "rolls", "long", "station"},
    {"bear", "growls", "furry", "forest"},
    {"bike", "speeds", "quick", "trail"},
    {"truck", "hauls", "heavy", "depot"},
}};

std::string fill_template(int slot, const ConceptWords& w) {
  char buf[128];
  switch (slot % 6) {
    case 0:
      std::snprintf(buf, sizeof(buf), "a %s %s %s near the %s", w.adj, w.noun, w.verb, w.place);
      break;
    case 1:
      std::snprintf(buf, sizeof(buf), "the %s %s by the %s", w.noun, w.verb, w.place);
      break;
    case 2:
      std::snprintf(buf, sizeof(buf), "one %s %s %s at the %s", w.adj, w.noun, w.verb, w.place);
      break;
    case 3:
      std::snprintf(buf, sizeof(buf), "a %s %s beside the %s", w.noun, w.verb, w.place);
      break;
    case 4:
      std::snprintf(buf, sizeof(buf), "some %s %s around the %s", w.noun, w.verb, w.place);
      break;
    default:
      std::snprintf(buf, sizeof(buf), "the %s %s %s past the %s", w.adj, w.noun, w.verb, w.place);
      break;
  }
  return buf;
}

}  // namespace

int synth_vocabulary_limit() { return static_cast<int>(kConceptWords.size()); }

SynthResult synth_generate(const SynthConfig& cfg) {
  if (cfg.concepts < 2) throw std::invalid_argument("need at least 2 concepts");
  if (cfg.concepts > synth_vocabulary_limit()) {
    throw std::invalid_argument("concepts > available template vocabulary (" +
                                std::to_string(synth_vocabulary_limit()) + ")");
  }
  if (cfg.num_images < 1) throw std::invalid_argument("need at least 1 image");
  if (cfg.q_per_image < 1) throw std::invalid_argument("need at least 1 caption per image");
  if (cfg.confound_rate < 0.0 || cfg.confound_rate > 1.0) {
    throw std::invalid_argument("confound rate must lie in [0, 1]");
  }
  if (!(cfg.feature_noise >= 0.0)) throw std::invalid_argument("noise must be non-negative");

  Rng rng(cfg.seed);
  const int k = cfg.concepts;
  const int dim = 2 * k;  // main concepts + background-only concepts
  SynthResult out;
  SynthMeta& meta = out.meta;
  RetrievalDataset& ds = out.dataset;
  meta.concepts = k;

  ds.image_features.resize(cfg.num_images, dim);
  char idbuf[32];
  for (int i = 0; i < cfg.num_images; ++i) {
    const int main_id = i % k;
    const bool confounded = rng.uniform() < cfg.confound_rate;
    int secondary;
    if (confounded) {
      // another image's main concept: the planted confusion
      secondary = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
      if (secondary >= main_id) ++secondary;
    } else {
      // a background concept no caption ever describes
      secondary = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    }
    meta.main_concept.push_back(main_id);
    meta.secondary_concept.push_back(secondary);
    meta.confounded.push_back(confounded ? 1 : 0);

    for (int d = 0; d < dim; ++d) {
      double v = cfg.feature_noise * rng.normal();
      if (d == main_id) v += 1.0;
      if (d == secondary) v += 0.6;
      ds.image_features(i, d) = v;
    }

    std::snprintf(idbuf, sizeof(idbuf), "img%06d", i);
    ds.image_ids.emplace_back(idbuf);
    std::vector<Caption> pts;
    for (int q = 0; q < cfg.q_per_image; ++q) {
      pts.push_back(make_caption(fill_template(i + q, kConceptWords[static_cast<std::size_t>(main_id)])));
    }
    ds.captions.push_back(std::move(pts));
  }

  ds.ground_truth = build_ground_truth(ds.captions);
  const auto n_txt = static_cast<Eigen::Index>(ds.ground_truth.txt_to_img.size());
  ds.text_features.resize(n_txt, dim);
  for (Eigen::Index t = 0; t < n_txt; ++t) {
    const int img = ds.ground_truth.txt_to_img[static_cast<std::size_t>(t)];
    const int concept_id = meta.main_concept[static_cast<std::size_t>(img)];
    for (int d = 0; d < dim; ++d) {
      double v = cfg.feature_noise * rng.normal();
      if (d == concept_id) v += 1.0;
      ds.text_features(t, d) = v;
    }
  }

  ds.split.assign(static_cast<std::size_t>(cfg.num_images), Split::train);
  return out;
}

int count_confuser_wins(const Eigen::MatrixXd& scores, const GroundTruth& gt,
                        const SynthMeta& meta) {
  if (scores.rows() != static_cast<Eigen::Index>(meta.main_concept.size()) ||
      scores.cols() != static_cast<Eigen::Index>(gt.txt_to_img.size())) {
    throw std::invalid_argument("score matrix shape does not match synthetic metadata");
  }
  // confusers per concept
  std::vector<std::vector<int>> confusers(static_cast<std::size_t>(meta.concepts));
  for (std::size_t i = 0; i < meta.confounded.size(); ++i) {
    if (meta.confounded[i] && meta.secondary_concept[i] < meta.concepts) {
      confusers[static_cast<std::size_t>(meta.secondary_concept[i])].push_back(
          static_cast<int>(i));
    }
  }
  int wins = 0;
  for (Eigen::Index t = 0; t < scores.cols(); ++t) {
    const int g = gt.txt_to_img[static_cast<std::size_t>(t)];
    const int concept_id = meta.main_concept[static_cast<std::size_t>(g)];
    const double sg = scores(g, t);
    for (const int j : confusers[static_cast<std::size_t>(concept_id)]) {
      if (j == g) continue;
      const double sj = scores(j, t);
      if (sj > sg || (sj == sg && j < g)) {
        ++wins;
        break;  // count each query once
      }
    }
  }
  return wins;
}

void save_synth_meta(const std::string& path, const SynthMeta& meta) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["concepts"] = meta.concepts;
  j["main_concept"] = meta.main_concept;
  j["secondary_concept"] = meta.secondary_concept;
  j["confounded"] = meta.confounded;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

SynthMeta load_synth_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed synth metadata: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw std::runtime_error("unsupported synth metadata version");
  }
  SynthMeta meta;
  meta.concepts = j.at("concepts").get<int>();
  meta.main_concept = j.at("main_concept").get<std::vector<int>>();
  meta.secondary_concept = j.at("secondary_concept").get<std::vector<int>>();
  meta.confounded = j.at("confounded").get<std::vector<std::uint8_t>>();
  return meta;
}

}  // namespace vsl
