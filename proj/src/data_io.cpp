#include "vsl/data_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "vsl/rng.hpp"

namespace vsl {

CaptionCorpus load_captions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  if (!j.is_array()) throw std::runtime_error("malformed JSON: expected a top-level array");

  CaptionCorpus corpus;
  std::set<std::string> seen;
  for (const auto& entry : j) {
    if (!entry.is_object() || !entry.contains("image_id") || !entry.contains("captions")) {
      throw std::runtime_error("malformed JSON: entries need image_id and captions");
    }
    auto id = entry["image_id"].get<std::string>();
    if (!seen.insert(id).second) throw std::runtime_error("duplicate image id: " + id);
    const auto& caps = entry["captions"];
    if (!caps.is_array() || caps.empty()) {
      throw std::runtime_error("image has no positive texts: " + id);
    }
    std::vector<Caption> pts;
    pts.reserve(caps.size());
    for (const auto& c : caps) pts.push_back(make_caption(c.get<std::string>()));
    corpus.image_ids.push_back(std::move(id));
    corpus.captions.push_back(std::move(pts));
  }
  return corpus;
}

void save_captions(const std::string& path, const CaptionCorpus& corpus) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.image_ids.size(); ++i) {
    nlohmann::json caps = nlohmann::json::array();
    for (const auto& c : corpus.captions[i]) caps.push_back(c.raw);
    j.push_back({{"image_id", corpus.image_ids[i]}, {"captions", std::move(caps)}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

namespace {

constexpr char kFeatureMagic[4] = {'F', 'V', 'E', 'C'};
constexpr std::uint8_t kFeatureVersion = 1;

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

bool get_u32_le(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
      (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

void put_f32_le(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32_le(out, bits);
}

bool get_f32_le(std::istream& in, float& f) {
  std::uint32_t bits;
  if (!get_u32_le(in, bits)) return false;
  std::memcpy(&f, &bits, 4);
  return true;
}

}  // namespace

Eigen::MatrixXd load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw std::runtime_error("bad feature file magic");
  }
  char version = 0;
  if (!in.read(&version, 1) || static_cast<std::uint8_t>(version) != kFeatureVersion) {
    throw std::runtime_error("unsupported feature file version");
  }
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  if (!get_u32_le(in, count) || !get_u32_le(in, dim)) {
    throw std::runtime_error("truncated feature header");
  }
  Eigen::MatrixXd m(count, dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      float f = 0.0F;
      if (!get_f32_le(in, f)) throw std::runtime_error("truncated feature payload");
      if (std::isnan(f)) throw std::runtime_error("NaN in feature payload");
      m(r, c) = static_cast<double>(f);
    }
  }
  return m;
}

void save_features(const std::string& path, const Eigen::MatrixXd& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kFeatureMagic, 4);
  const char version = static_cast<char>(kFeatureVersion);
  out.write(&version, 1);
  put_u32_le(out, static_cast<std::uint32_t>(features.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      put_f32_le(out, static_cast<float>(features(r, c)));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

GroundTruth build_ground_truth(const std::vector<std::vector<Caption>>& captions) {
  GroundTruth gt;
  int next = 0;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    std::vector<int> txts;
    txts.reserve(captions[i].size());
    for (std::size_t q = 0; q < captions[i].size(); ++q) {
      txts.push_back(next);
      gt.txt_to_img.push_back(static_cast<int>(i));
      ++next;
    }
    gt.img_to_txts.push_back(std::move(txts));
  }
  return gt;
}

RetrievalDataset assemble_dataset(const std::string& captions_path,
                                  const std::string& img_features_path,
                                  const std::string& txt_features_path) {
  RetrievalDataset ds;
  auto corpus = load_captions(captions_path);
  ds.image_ids = std::move(corpus.image_ids);
  ds.captions = std::move(corpus.captions);
  ds.image_features = load_features(img_features_path);
  ds.text_features = load_features(txt_features_path);
  ds.ground_truth = build_ground_truth(ds.captions);
  if (ds.image_features.rows() != static_cast<Eigen::Index>(ds.captions.size())) {
    throw std::runtime_error("image feature count does not match caption corpus");
  }
  if (ds.text_features.rows() != static_cast<Eigen::Index>(ds.ground_truth.txt_to_img.size())) {
    throw std::runtime_error("text feature count does not match caption corpus");
  }
  ds.split.assign(ds.captions.size(), Split::train);
  return ds;
}

std::vector<Batch> batch_sampler(const RetrievalDataset& dataset, int batch_size,
                                 std::uint64_t seed, int epoch) {
  if (batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
  std::vector<int> train_imgs;
  for (std::size_t i = 0; i < dataset.split.size(); ++i) {
    if (dataset.split[i] == Split::train) train_imgs.push_back(static_cast<int>(i));
  }
  if (static_cast<std::size_t>(batch_size) > train_imgs.size()) {
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " exceeds dataset size " + std::to_string(train_imgs.size()) +
                                "; clamp batch size to " + std::to_string(train_imgs.size()));
  }

  Rng rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1)));
  rng.shuffle(train_imgs);

  std::vector<Batch> batches;
  const std::size_t full = train_imgs.size() / static_cast<std::size_t>(batch_size);
  for (std::size_t b = 0; b < full; ++b) {
    Batch batch;
    for (int k = 0; k < batch_size; ++k) {
      const int img = train_imgs[b * static_cast<std::size_t>(batch_size) +
                                 static_cast<std::size_t>(k)];
      const auto& txts = dataset.ground_truth.img_to_txts[static_cast<std::size_t>(img)];
      batch.image_indices.push_back(img);
      batch.text_indices.push_back(
          txts[static_cast<std::size_t>(epoch) % txts.size()]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<std::vector<Caption>> gather_pt_sets(const RetrievalDataset& dataset,
                                                 const Batch& batch) {
  std::vector<std::vector<Caption>> pts;
  pts.reserve(batch.image_indices.size());
  for (const int i : batch.image_indices) {
    pts.push_back(dataset.captions[static_cast<std::size_t>(i)]);
  }
  return pts;
}

}  // namespace vsl
