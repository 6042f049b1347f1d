#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "vsl/adam.hpp"
#include "vsl/gradcheck.hpp"
#include "vsl/losses.hpp"
#include "vsl/rng.hpp"

using namespace vsl;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

Eigen::MatrixXd random_semantic(Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    m(r, r) = rng.uniform(0.0, 1.0);
    for (int c = r + 1; c < n; ++c) {
      m(r, c) = rng.uniform(0.0, 1.0);
      m(c, r) = m(r, c);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("cosine similarity matrix") {
  SUBCASE("self cosine on the diagonal") {
    Rng rng(1);
    const Eigen::MatrixXd e = random_matrix(rng, 4, 6, -1.0, 1.0);
    const auto s = cosine_similarity_matrix(e, e);
    for (int i = 0; i < 4; ++i) CHECK(s(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.maxCoeff() <= 1.0 + 1e-12);
    CHECK(s.minCoeff() >= -1.0 - 1e-12);
  }
  SUBCASE("orthogonal rows give zero") {
    Eigen::MatrixXd img = Eigen::MatrixXd::Identity(3, 3);
    const auto s = cosine_similarity_matrix(img, img);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) CHECK(s(i, j) == 0.0);
      }
    }
  }
  SUBCASE("hand value 1/sqrt(2)") {
    Eigen::MatrixXd img(1, 2);
    img << 1.0, 0.0;
    Eigen::MatrixXd txt(1, 2);
    txt << 1.0, 1.0;
    CHECK(cosine_similarity_matrix(img, txt)(0, 0) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("rectangular galleries are allowed") {
    Rng rng(2);
    const auto s =
        cosine_similarity_matrix(random_matrix(rng, 3, 4, -1, 1), random_matrix(rng, 7, 4, -1, 1));
    CHECK(s.rows() == 3);
    CHECK(s.cols() == 7);
  }
  SUBCASE("zero-norm row rejected") {
    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(2, 3);
    img(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(cosine_similarity_matrix(img, Eigen::MatrixXd::Identity(3, 3)),
                         "degenerate embedding", std::runtime_error);
  }
}

TEST_CASE("triplet loss") {
  LossConfig cfg;
  cfg.margin = 0.2;

  SUBCASE("inactive hinges on an identity-like matrix") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
    s.diagonal().setConstant(1.0);
    const auto [loss, grad] = triplet_loss(s, cfg);
    CHECK(loss == 0.0);
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("hand-evaluated 2x2 under hardest mining") {
    Eigen::MatrixXd s(2, 2);
    s << 0.5, 0.6, 0.1, 0.7;
    const auto [loss, grad] = triplet_loss(s, cfg);
    CHECK(loss == doctest::Approx(0.2).epsilon(1e-12));
    // active hinges: (i=0, row negative 0.6) and (i=1, column negative 0.6)
    CHECK(grad(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(grad(0, 1) == doctest::Approx(0.5 + 0.5).epsilon(1e-12));  // both hinges touch s(0,1)
    CHECK(grad(1, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(grad(1, 0) == 0.0);
  }
  SUBCASE("sum_all agrees with the hand evaluation here") {
    Eigen::MatrixXd s(2, 2);
    s << 0.5, 0.6, 0.1, 0.7;
    LossConfig all = cfg;
    all.mining = NegativeMining::sum_all;
    CHECK(triplet_loss(s, all).first == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("margin 0 with a strictly dominant diagonal") {
    Rng rng(3);
    Eigen::MatrixXd s = random_matrix(rng, 5, 5, -0.5, 0.5);
    s.diagonal().setConstant(0.9);
    LossConfig zero = cfg;
    zero.margin = 0.0;
    CHECK(triplet_loss(s, zero).first == 0.0);
  }
  SUBCASE("needs a negative") {
    CHECK_THROWS_WITH_AS(triplet_loss(Eigen::MatrixXd::Constant(1, 1, 1.0), cfg),
                         "triplet loss needs at least one negative", std::invalid_argument);
  }
  SUBCASE("gradient matches finite differences") {
    const auto report = fd_triplet_check(/*seed=*/23, /*instances=*/20, /*tol=*/1e-4);
    INFO(report.detail);
    CHECK(report.pass);
  }
}

TEST_CASE("vsl loss") {
  Rng rng(9);

  SUBCASE("identical rank matrices give exactly zero") {
    const auto a = rank_matrix(random_matrix(rng, 4, 4, 0.0, 1.0), 0.05);
    const auto [loss, grad] = vsl_loss(a, a);
    CHECK(loss == 0.0);
    CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("1x1 closed form") {
    const RankMatrix sr{Eigen::MatrixXd::Constant(1, 1, 1.5), 0.001};
    const RankMatrix cr{Eigen::MatrixXd::Constant(1, 1, 3.0), 0.001};
    CHECK(vsl_loss(sr, cr).first == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tsl_loss(sr, cr).first == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("swap symmetry of the value") {
    const auto a = rank_matrix(random_matrix(rng, 5, 5, 0.0, 1.0), 0.05);
    const auto b = rank_matrix(random_matrix(rng, 5, 5, 0.0, 1.0), 0.05);
    CHECK(vsl_loss(a, b).first == vsl_loss(b, a).first);
  }
  SUBCASE("identity suite") {
    const auto report = vsl_identity_check(/*seed=*/31);
    INFO(report.detail);
    CHECK(report.pass);
  }
  SUBCASE("gradient signs and magnitudes") {
    RankMatrix sr{Eigen::MatrixXd::Constant(1, 2, 0.0), 0.01};
    RankMatrix cr{Eigen::MatrixXd::Constant(1, 2, 0.0), 0.01};
    sr.entries << 1.5, 2.5;
    cr.entries << 2.0, 2.0;
    const auto [loss, grad] = vsl_loss(sr, cr);
    CHECK(loss == doctest::Approx(1.0 - 0.5 * (1.5 / 2.0 + 2.0 / 2.5)).epsilon(1e-12));
    CHECK(grad(0, 0) == doctest::Approx(-0.5 / 2.0).epsilon(1e-12));
    CHECK(grad(0, 1) == doctest::Approx(0.5 * 2.0 / (2.5 * 2.5)).epsilon(1e-12));
  }
  SUBCASE("shape mismatch rejected") {
    const auto a = rank_matrix(random_matrix(rng, 3, 3, 0.0, 1.0), 0.05);
    const auto b = rank_matrix(random_matrix(rng, 4, 4, 0.0, 1.0), 0.05);
    CHECK_THROWS_AS(vsl_loss(a, b), std::invalid_argument);
  }
  SUBCASE("gradient matches finite differences") {
    const auto vsl_report = fd_vsl_check(/*seed=*/37, /*instances=*/20, /*tau=*/0.1, /*tol=*/1e-4);
    INFO(vsl_report.detail);
    CHECK(vsl_report.pass);
    const auto tsl_report = fd_tsl_check(/*seed=*/41, /*instances=*/20, /*tau=*/0.1, /*tol=*/1e-4);
    INFO(tsl_report.detail);
    CHECK(tsl_report.pass);
  }
}

TEST_CASE("total loss") {
  Rng rng(13);
  const int n = 4;
  const Eigen::MatrixXd s = random_matrix(rng, n, n, -1.0, 1.0);
  const Eigen::MatrixXd c = random_semantic(rng, n);
  const Eigen::MatrixXd tc = random_semantic(rng, n);

  SUBCASE("beta = 0 reduces to the weighted triplet loss") {
    LossConfig cfg;
    cfg.beta = 0.0;
    cfg.alpha = 0.7;
    const auto out = total_loss(s, c, nullptr, cfg);
    const auto [tri, tri_grad] = triplet_loss(s, cfg);
    CHECK(std::abs(out.total - cfg.alpha * tri) <= 1e-12);
    CHECK((out.grad_S - cfg.alpha * tri_grad).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("alpha = 0 and S = C gives zero") {
    LossConfig cfg;
    cfg.alpha = 0.0;
    cfg.tau = 0.01;
    const auto out = total_loss(c, c, nullptr, cfg);
    CHECK(out.total == 0.0);
    CHECK(out.vsl == 0.0);
    CHECK(out.grad_S.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("component identity and non-negativity") {
    for (const bool with_tsl : {false, true}) {
      LossConfig cfg;
      cfg.tau = 0.05;
      cfg.include_tsl = with_tsl;
      const auto out = total_loss(s, c, with_tsl ? &tc : nullptr, cfg);
      CHECK(out.triplet >= 0.0);
      CHECK(out.vsl >= 0.0);
      CHECK(out.vsl < 1.0);
      CHECK(out.tsl >= 0.0);
      CHECK(out.tsl < 1.0);
      if (!with_tsl) CHECK(out.tsl == 0.0);
      CHECK(std::abs(out.total - (cfg.alpha * out.triplet + cfg.beta * (out.vsl + out.tsl))) <=
            1e-12);
    }
  }
  SUBCASE("TC must be present exactly when TSL is enabled") {
    LossConfig cfg;
    cfg.include_tsl = true;
    CHECK_THROWS_AS(total_loss(s, c, nullptr, cfg), std::invalid_argument);
    cfg.include_tsl = false;
    CHECK_THROWS_AS(total_loss(s, c, &tc, cfg), std::invalid_argument);
  }
  SUBCASE("config validation") {
    LossConfig cfg;
    cfg.margin = -0.1;
    CHECK_THROWS_AS(total_loss(s, c, nullptr, cfg), std::invalid_argument);
    cfg = LossConfig{};
    cfg.tau = 0.0;
    CHECK_THROWS_AS(total_loss(s, c, nullptr, cfg), std::invalid_argument);
    cfg = LossConfig{};
    cfg.beta = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(total_loss(s, c, nullptr, cfg), std::invalid_argument);
  }
  SUBCASE("full gradient matches finite differences through the encoder") {
    const auto report = fd_total_loss_check(/*seed=*/43, /*instances=*/10, /*tau=*/0.1,
                                            /*tol=*/1e-4);
    INFO(report.detail);
    CHECK(report.pass);
  }
}

TEST_CASE("rank agreement target: optimizing S toward C's ordering") {
  // drive L_vs to ~0 by descending on S directly; afterwards the row-wise
  // ordering of S matches C wherever C has gaps >= 10 * tau. S starts inside
  // one temperature of spread so no pair begins saturated.
  Rng rng(19);
  const int n = 4;
  const double tau = 0.1;
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row = {0.5, 2.0, 3.5, 5.0};  // gaps 1.5 >= 10 * tau
    Rng row_rng(rng.next_u64());
    row_rng.shuffle(row);
    for (int j = 0; j < n; ++j) c(i, j) = row[static_cast<std::size_t>(j)];
  }
  Eigen::MatrixXd s = random_matrix(rng, n, n, 0.0, 0.3);

  LossConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 1.0;
  cfg.tau = tau;
  AdamParams adam;
  AdamState state = AdamState::zeros(n, n);
  double loss = 1.0;
  for (int iter = 0; iter < 20000 && loss > 1e-4; ++iter) {
    const auto out = total_loss(s, c, nullptr, cfg);
    loss = out.total;
    adam_step(s, state, out.grad_S, 0.02, adam);
  }
  CHECK(loss <= 1e-4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (c(i, j) > c(i, k)) CHECK(s(i, j) > s(i, k));
      }
    }
  }
}
