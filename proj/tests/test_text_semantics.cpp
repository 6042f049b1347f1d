#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "vsl/rng.hpp"
#include "vsl/text_semantics.hpp"

using namespace vsl;

namespace {

std::vector<std::vector<Caption>> corpus_from(const std::vector<std::vector<std::string>>& raw) {
  std::vector<std::vector<Caption>> out;
  for (const auto& pts : raw) out.push_back(make_captions(pts));
  return out;
}

}  // namespace

TEST_CASE("tokenize lowercases, strips punctuation, splits on whitespace") {
  CHECK(tokenize("Two persons in hooded coats") ==
        std::vector<std::string>{"two", "persons", "in", "hooded", "coats"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("A mini cooper car drives by.") ==
        std::vector<std::string>{"a", "mini", "cooper", "car", "drives", "by"});
  CHECK(tokenize("it's 42, ok?!") == std::vector<std::string>{"its", "42", "ok"});
  CHECK(tokenize("--- ... ;;") == std::vector<std::string>{});
  for (const auto& t : tokenize("  lots\tof   WS\nhere  ")) CHECK(!t.empty());
}

TEST_CASE("corpus stats count images, not captions") {
  SUBCASE("disjoint vocabularies give doc freq 1") {
    const auto stats = build_corpus_stats(corpus_from({{"a dog runs"}, {"the cat sits"}}));
    CHECK(stats.num_documents == 2);
    CHECK(stats.doc_freq[0].at("dog") == 1);
    CHECK(stats.doc_freq[0].at("cat") == 1);
  }
  SUBCASE("hand-counted two-image corpus") {
    const auto stats = build_corpus_stats(corpus_from({{"a dog runs"}, {"a cat sits"}}));
    CHECK(stats.doc_freq[0].at("a") == 2);
    CHECK(stats.doc_freq[0].at("dog") == 1);
  }
  SUBCASE("identical PT sets repeated") {
    const auto stats =
        build_corpus_stats(corpus_from({{"a dog runs", "a dog naps"}, {"a dog runs", "a dog naps"}}));
    for (int n = 0; n < kNGramLevels; ++n) {
      for (const auto& [g, d] : stats.doc_freq[n]) CHECK(d == stats.num_documents);
    }
  }
  SUBCASE("a repeated n-gram within one image counts once") {
    const auto stats = build_corpus_stats(corpus_from({{"dog dog dog", "dog"}, {"cat"}}));
    CHECK(stats.doc_freq[0].at("dog") == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_WITH_AS(build_corpus_stats({}), "empty corpus", std::runtime_error);
    CHECK_THROWS_WITH_AS(build_corpus_stats({{}}), "image has no positive texts",
                         std::runtime_error);
  }
}

TEST_CASE("tfidf vector weights") {
  const auto corpus = corpus_from({{"a dog runs"}, {"a cat sits"}});
  const auto stats = build_corpus_stats(corpus);

  const auto prof = tfidf_vector(make_caption("a dog runs"), stats);
  CHECK(prof.levels[0].at("dog") == doctest::Approx((1.0 / 3.0) * std::log(2.0)).epsilon(1e-14));
  CHECK(prof.levels[0].at("a") == 0.0);  // in every document
  CHECK(prof.levels[3].empty());         // only 3 tokens

  SUBCASE("unknown n-grams are treated as rare") {
    const auto q = tfidf_vector(make_caption("zebra"), stats);
    CHECK(q.levels[0].at("zebra") == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("all weights non-negative") {
    for (int n = 0; n < kNGramLevels; ++n) {
      for (const auto& [g, w] : prof.levels[n]) CHECK(w >= 0.0);
    }
  }
}

TEST_CASE("caption cosine") {
  const auto corpus = corpus_from(
      {{"a big brown dog runs fast"}, {"tiny cat sits quietly today maybe"}});
  const auto stats = build_corpus_stats(corpus);

  SUBCASE("self cosine with all four levels non-zero is 1") {
    const auto p = tfidf_vector(make_caption("a big brown dog runs fast"), stats);
    for (int n = 0; n < kNGramLevels; ++n) CHECK(!p.levels[n].empty());
    CHECK(caption_cosine(p, p) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("disjoint n-grams at every level give 0") {
    const auto pa = tfidf_vector(make_caption("a big brown dog runs fast"), stats);
    const auto pb = tfidf_vector(make_caption("tiny cat sits quietly today maybe"), stats);
    CHECK(caption_cosine(pa, pb) == 0.0);
  }
  SUBCASE("empty level contributes 0: agreement at levels 1-3 gives 0.75") {
    const auto p = tfidf_vector(make_caption("big brown dog"), stats);  // no 4-grams
    CHECK(p.levels[3].empty());
    CHECK(caption_cosine(p, p) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("scale invariance") {
    auto pa = tfidf_vector(make_caption("a big brown dog runs fast"), stats);
    auto pb = tfidf_vector(make_caption("a big brown dog naps fast"), stats);
    const double before = caption_cosine(pa, pb);
    for (int n = 0; n < kNGramLevels; ++n) {
      for (auto& [g, w] : pa.levels[n]) w *= 37.5;
      for (auto& [g, w] : pb.levels[n]) w *= 37.5;
    }
    CHECK(caption_cosine(pa, pb) == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("semantic similarity is a pair mean") {
  const auto corpus = corpus_from({{"a spotted dog runs around happily", "the dog naps"},
                                   {"a striped cat sits", "the cat watches birds outside"},
                                   {"one silver plane flies high above"}});
  const auto stats = build_corpus_stats(corpus);

  SUBCASE("single identical caption pair gives 1") {
    const std::vector<Caption> one = make_captions({"a spotted dog runs around happily"});
    CHECK(semantic_similarity(one, one, stats) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("fully disjoint vocabularies give 0") {
    CHECK(semantic_similarity(make_captions({"red car drives", "shiny car"}),
                              make_captions({"golden fish swims", "tiny fish"}),
                              stats) == 0.0);
  }
  SUBCASE("mean over all Q_i x Q_j caption cosines") {
    const auto& a = corpus[0];
    const auto& b = corpus[1];
    double sum = 0.0;
    for (const auto& ca : a) {
      for (const auto& cb : b) {
        sum += caption_cosine(tfidf_vector(ca, stats), tfidf_vector(cb, stats));
      }
    }
    CHECK(semantic_similarity(a, b, stats) == doctest::Approx(sum / 4.0).epsilon(1e-12));
  }
  SUBCASE("unequal set sizes use 1/(Qi*Qj)") {
    const auto& a = corpus[0];  // 2 captions
    const auto& c = corpus[2];  // 1 caption
    double sum = 0.0;
    for (const auto& ca : a) {
      sum += caption_cosine(tfidf_vector(ca, stats), tfidf_vector(c[0], stats));
    }
    CHECK(semantic_similarity(a, c, stats) == doctest::Approx(sum / 2.0).epsilon(1e-12));
  }
  SUBCASE("exact symmetry") {
    CHECK(semantic_similarity(corpus[0], corpus[1], stats) ==
          semantic_similarity(corpus[1], corpus[0], stats));
  }
  SUBCASE("empty list rejected") {
    CHECK_THROWS_WITH_AS(semantic_similarity({}, corpus[0], stats), "image has no positive texts",
                         std::runtime_error);
  }
}

TEST_CASE("semantic matrix") {
  const auto batch = corpus_from({{"a brown dog runs near the park", "the dog runs fast"},
                                  {"a sleepy cat sits on the sofa", "the cat sleeps"},
                                  {"a brown dog runs near the park", "the dog runs fast"}});
  const auto stats = build_corpus_stats(batch);
  const auto c = semantic_matrix(batch, stats);

  SUBCASE("shape, range, symmetry") {
    CHECK(c.rows() == 3);
    CHECK(c.cols() == 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(c(i, j) >= 0.0);
        CHECK(c(i, j) <= 1.0);
        CHECK(c(i, j) == c(j, i));
      }
    }
  }
  SUBCASE("identical PT sets give equal entries") {
    CHECK(c(0, 2) == c(0, 0));
    CHECK(c(2, 2) == c(0, 0));
  }
  SUBCASE("determinism: recomputation is bit-identical") {
    const auto c2 = semantic_matrix(batch, stats);
    CHECK((c - c2).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("needs at least two images") {
    CHECK_THROWS_AS(semantic_matrix(corpus_from({{"a dog"}}), stats), std::invalid_argument);
  }
}

TEST_CASE("semantic matrix matches the dense brute-force evaluation") {
  // 4 images x up to 3 short captions, corpus == batch
  const auto batch = corpus_from({
      {"a brown dog runs", "the dog naps by a tree", "dog dog dog"},
      {"a sleepy cat sits", "the cat watches the dog"},
      {"one red car drives by", "a car parks near a tree", "the red car"},
      {"a brown dog runs", "the red car drives"},
  });
  const auto stats = build_corpus_stats(batch);
  const auto fast = semantic_matrix(batch, stats);
  const auto dense = oracle::dense_semantic_matrix(batch);
  CHECK((fast - dense).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("hand-computed 3-image matrix") {
  const auto batch = corpus_from({{"a dog runs"}, {"a cat sits"}, {"a dog sits"}});
  const auto stats = build_corpus_stats(batch);
  const auto c = semantic_matrix(batch, stats);

  // every caption has 3 tokens; levels 2..4 have some content only for
  // bigrams; hand-evaluate level cosines through the public pieces
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double hand =
          caption_cosine(tfidf_vector(batch[static_cast<std::size_t>(i)][0], stats),
                         tfidf_vector(batch[static_cast<std::size_t>(j)][0], stats));
      CHECK(c(i, j) == doctest::Approx(hand).epsilon(1e-12));
    }
  }
  // "a" is in all three documents: zero weight everywhere, so the
  // dog/cat images share no weighted unigram
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("corpus stats JSON cache round-trips") {
  const auto stats =
      build_corpus_stats(corpus_from({{"a dog runs fast today"}, {"a cat sits still now"}}));
  const std::string path = (std::filesystem::temp_directory_path() / "vsl_stats_test.json").string();
  save_corpus_stats(stats, path);
  const auto loaded = load_corpus_stats(path);
  CHECK(loaded.num_documents == stats.num_documents);
  for (int n = 0; n < kNGramLevels; ++n) CHECK(loaded.doc_freq[n] == stats.doc_freq[n]);

  // version check
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"format_version\": 99, \"num_documents\": 1, \"doc_freq\": [{},{},{},{}]}", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_corpus_stats(path), "unsupported corpus stats version",
                       std::runtime_error);
  std::filesystem::remove(path);
}
