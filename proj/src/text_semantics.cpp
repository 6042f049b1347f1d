#include "vsl/text_semantics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace vsl {

std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (const char c : raw) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else if (std::ispunct(uc)) {
      // stripped, not a separator: "it's" -> "its"
    } else {
      current.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  flush();
  return tokens;
}

Caption make_caption(const std::string& raw) { return Caption{raw, tokenize(raw)}; }

std::vector<Caption> make_captions(const std::vector<std::string>& raw) {
  std::vector<Caption> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(make_caption(r));
  return out;
}

namespace {

std::string join_gram(const std::vector<std::string>& tokens, std::size_t start, int n) {
  std::string g = tokens[start];
  for (int k = 1; k < n; ++k) {
    g += ' ';
    g += tokens[start + static_cast<std::size_t>(k)];
  }
  return g;
}

template <typename Fn>
void for_each_gram(const std::vector<std::string>& tokens, int n, Fn&& fn) {
  if (tokens.size() < static_cast<std::size_t>(n)) return;
  const std::size_t windows = tokens.size() - static_cast<std::size_t>(n) + 1;
  for (std::size_t i = 0; i < windows; ++i) fn(join_gram(tokens, i, n));
}

}  // namespace

CorpusStats build_corpus_stats(const std::vector<std::vector<Caption>>& pt_sets) {
  if (pt_sets.empty()) throw std::runtime_error("empty corpus");
  CorpusStats stats;
  stats.num_documents = pt_sets.size();
  for (const auto& pts : pt_sets) {
    if (pts.empty()) throw std::runtime_error("image has no positive texts");
    std::array<std::set<std::string>, kNGramLevels> seen;
    for (const auto& cap : pts) {
      for (int n = 0; n < kNGramLevels; ++n) {
        for_each_gram(cap.tokens, n + 1, [&](std::string g) { seen[n].insert(std::move(g)); });
      }
    }
    for (int n = 0; n < kNGramLevels; ++n) {
      for (const auto& g : seen[n]) ++stats.doc_freq[n][g];
    }
  }
  return stats;
}

NGramProfile tfidf_vector(const Caption& caption, const CorpusStats& stats) {
  NGramProfile profile;
  for (int n = 0; n < kNGramLevels; ++n) {
    std::map<std::string, int> counts;
    int total = 0;
    for_each_gram(caption.tokens, n + 1, [&](std::string g) {
      ++counts[std::move(g)];
      ++total;
    });
    if (total == 0) continue;
    const auto& df = stats.doc_freq[n];
    for (const auto& [gram, count] : counts) {
      const auto it = df.find(gram);
      const double d = it != df.end() ? static_cast<double>(it->second) : 1.0;
      const double tf = static_cast<double>(count) / static_cast<double>(total);
      profile.levels[n][gram] = tf * std::log(static_cast<double>(stats.num_documents) / d);
    }
  }
  return profile;
}

double caption_cosine(const NGramProfile& a, const NGramProfile& b) {
  double acc = 0.0;
  for (int n = 0; n < kNGramLevels; ++n) {
    const auto& la = a.levels[n];
    const auto& lb = b.levels[n];
    if (la.empty() || lb.empty()) continue;
    // merge over sorted keys: the dot product is accumulated in the same
    // order for (a, b) and (b, a), so the cosine is exactly symmetric
    double dot = 0.0;
    auto ia = la.begin();
    auto ib = lb.begin();
    while (ia != la.end() && ib != lb.end()) {
      const int cmp = ia->first.compare(ib->first);
      if (cmp < 0) {
        ++ia;
      } else if (cmp > 0) {
        ++ib;
      } else {
        dot += ia->second * ib->second;
        ++ia;
        ++ib;
      }
    }
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [g, w] : la) na += w * w;
    for (const auto& [g, w] : lb) nb += w * w;
    if (na == 0.0 || nb == 0.0) continue;
    acc += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return std::clamp(acc / kNGramLevels, 0.0, 1.0);
}

namespace {

std::vector<NGramProfile> profile_set(const std::vector<Caption>& pts, const CorpusStats& stats) {
  if (pts.empty()) throw std::runtime_error("image has no positive texts");
  std::vector<NGramProfile> out;
  out.reserve(pts.size());
  for (const auto& c : pts) out.push_back(tfidf_vector(c, stats));
  return out;
}

}  // namespace

// Mean pairwise cosine. Summing the sorted pair values fixes the reduction
// order, which makes the result independent of argument order.
double semantic_similarity(const std::vector<NGramProfile>& profiles_i,
                           const std::vector<NGramProfile>& profiles_j) {
  if (profiles_i.empty() || profiles_j.empty()) {
    throw std::runtime_error("image has no positive texts");
  }
  std::vector<double> cosines;
  cosines.reserve(profiles_i.size() * profiles_j.size());
  for (const auto& pa : profiles_i) {
    for (const auto& pb : profiles_j) cosines.push_back(caption_cosine(pa, pb));
  }
  std::sort(cosines.begin(), cosines.end());
  double sum = 0.0;
  for (const double c : cosines) sum += c;
  return sum / static_cast<double>(cosines.size());
}

double semantic_similarity(const std::vector<Caption>& pts_i, const std::vector<Caption>& pts_j,
                           const CorpusStats& stats) {
  return semantic_similarity(profile_set(pts_i, stats), profile_set(pts_j, stats));
}

SemanticMatrix semantic_matrix(const std::vector<std::vector<Caption>>& batch,
                               const CorpusStats& stats) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n < 2) throw std::invalid_argument("semantic matrix needs a batch of at least 2 images");
  std::vector<std::vector<NGramProfile>> profiles;
  profiles.reserve(batch.size());
  for (const auto& pts : batch) profiles.push_back(profile_set(pts, stats));
  SemanticMatrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = semantic_similarity(profiles[static_cast<std::size_t>(i)],
                                           profiles[static_cast<std::size_t>(j)]);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

namespace {
constexpr int kCorpusStatsVersion = 1;
}

void save_corpus_stats(const CorpusStats& stats, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kCorpusStatsVersion;
  j["num_documents"] = stats.num_documents;
  auto& levels = j["doc_freq"] = nlohmann::json::array();
  for (int n = 0; n < kNGramLevels; ++n) {
    nlohmann::json level = nlohmann::json::object();
    for (const auto& [g, d] : stats.doc_freq[n]) level[g] = d;
    levels.push_back(std::move(level));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

CorpusStats load_corpus_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed corpus stats file: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kCorpusStatsVersion) {
    throw std::runtime_error("unsupported corpus stats version");
  }
  CorpusStats stats;
  stats.num_documents = j.at("num_documents").get<std::size_t>();
  const auto& levels = j.at("doc_freq");
  for (int n = 0; n < kNGramLevels; ++n) {
    for (const auto& [g, d] : levels.at(static_cast<std::size_t>(n)).items()) {
      stats.doc_freq[n][g] = d.get<std::uint32_t>();
    }
  }
  return stats;
}

}  // namespace vsl
