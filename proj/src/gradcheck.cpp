#include "vsl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "vsl/encoder.hpp"
#include "vsl/losses.hpp"
#include "vsl/rng.hpp"
#include "vsl/smooth_rank.hpp"

namespace vsl {

Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                            Eigen::MatrixXd x, double step) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double orig = x(r, c);
      x(r, c) = orig + step;
      const double up = f(x);
      x(r, c) = orig - step;
      const double down = f(x);
      x(r, c) = orig;
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double max_rel_err(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      const double denom = std::max(std::abs(fd(r, c)), 1e-8);
      worst = std::max(worst, std::abs(analytic(r, c) - fd(r, c)) / denom);
    }
  }
  return worst;
}

namespace {

constexpr double kFdStep = 1e-6;
// boundaries (hinges, argmax switches, min/max kinks) must be at least this
// far away so a +-1e-6 probe cannot cross one
constexpr double kClearance = 1e-3;
// entries where analytic and FD are both below this are beneath the
// finite-difference noise floor; such instances are resampled
constexpr double kGradFloor = 1e-4;

std::string fmt_detail(double worst, int instances, int resamples) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max rel err %.3e over %d instances (%d resampled)", worst,
                instances, resamples);
  return buf;
}

// n distinct grid multiples of `unit`, shuffled: pairwise gaps >= unit
std::vector<double> gapped_row(Rng& rng, int n, int slots, double unit) {
  std::vector<int> grid(static_cast<std::size_t>(slots));
  std::iota(grid.begin(), grid.end(), 0);
  rng.shuffle(grid);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(i)] * unit;
  return row;
}

Eigen::MatrixXd gapped_matrix(Rng& rng, int rows, int cols, int slots, double unit) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto row = gapped_row(rng, cols, slots, unit);
    for (int c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

// true when every compared entry is resolvable: at least one side above the
// noise floor, or both exactly representable as zero signal
bool resolvable(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      const double mag = std::max(std::abs(analytic(r, c)), std::abs(fd(r, c)));
      if (mag != 0.0 && mag < kGradFloor) return false;
    }
  }
  return true;
}

}  // namespace

double hard_rank_deviation_bound(int n, double min_gap, double tau) {
  return (n - 1) * smooth_sigmoid(-min_gap, tau);
}

CheckReport hard_rank_fidelity_check(std::uint64_t seed, int num_matrices, int n, double tau,
                                     double min_gap, double tol) {
  Rng rng(seed);
  const int slots = std::max(4 * n, 100);
  double worst = 0.0;
  for (int t = 0; t < num_matrices; ++t) {
    const Eigen::MatrixXd m = gapped_matrix(rng, n, n, slots, min_gap);
    const RankMatrix ranks = rank_matrix(m, tau);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        int smaller = 0;
        for (int k = 0; k < n; ++k) {
          if (m(i, k) < m(i, j)) ++smaller;
        }
        const double oracle = 1.5 + smaller;
        worst = std::max(worst, std::abs(ranks.entries(i, j) - oracle));
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max |smooth - hard| %.3e over %d %dx%d matrices (bound %.3e)",
                worst, num_matrices, n, n, hard_rank_deviation_bound(n, min_gap, tau));
  return {worst <= tol, false, buf};
}

CheckReport fd_rank_matrix_check(std::uint64_t seed, int instances, double tau, double tol) {
  Rng rng(seed);
  const int n = 5;
  double worst = 0.0;
  int resamples = 0;
  for (int t = 0; t < instances; ++t) {
    for (int attempt = 0;; ++attempt) {
      const Eigen::MatrixXd m = gapped_matrix(rng, n, n, 20, 0.05);
      Eigen::MatrixXd up(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const double mag = rng.uniform(0.25, 1.0);
          up(r, c) = rng.below(2) == 0 ? mag : -mag;
        }
      }
      const Eigen::MatrixXd analytic = rank_matrix_grad(m, tau, up);
      const Eigen::MatrixXd fd = fd_gradient(
          [&](const Eigen::MatrixXd& x) {
            return (rank_matrix(x, tau).entries.array() * up.array()).sum();
          },
          m, kFdStep);
      if (!resolvable(analytic, fd) && attempt < 50) {
        ++resamples;
        continue;
      }
      worst = std::max(worst, max_rel_err(analytic, fd));
      break;
    }
  }
  return {worst <= tol, false, fmt_detail(worst, instances, resamples)};
}

namespace {

// hinge arguments and, for hardest mining, the argmax runner-up gaps
bool triplet_clearance_ok(const Eigen::MatrixXd& s, const LossConfig& cfg) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cfg.mining == NegativeMining::hardest) {
      double row1 = -2.0;
      double row2 = -2.0;
      double col1 = -2.0;
      double col2 = -2.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        if (s(i, k) > row1) {
          row2 = row1;
          row1 = s(i, k);
        } else {
          row2 = std::max(row2, s(i, k));
        }
        if (s(k, i) > col1) {
          col2 = col1;
          col1 = s(k, i);
        } else {
          col2 = std::max(col2, s(k, i));
        }
      }
      if (n > 2 && (row1 - row2 < kClearance || col1 - col2 < kClearance)) return false;
      if (std::abs(cfg.margin - s(i, i) + row1) < kClearance) return false;
      if (std::abs(cfg.margin - s(i, i) + col1) < kClearance) return false;
    } else {
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        if (std::abs(cfg.margin - s(i, i) + s(i, k)) < kClearance) return false;
        if (std::abs(cfg.margin - s(i, i) + s(k, i)) < kClearance) return false;
      }
    }
  }
  return true;
}

}  // namespace

CheckReport fd_triplet_check(std::uint64_t seed, int instances, double tol) {
  Rng rng(seed);
  const int n = 4;
  double worst = 0.0;
  int resamples = 0;
  for (int t = 0; t < instances; ++t) {
    LossConfig cfg;
    cfg.mining = t % 2 == 0 ? NegativeMining::hardest : NegativeMining::sum_all;
    Eigen::MatrixXd s(n, n);
    do {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) s(r, c) = rng.uniform(-1.0, 1.0);
      }
      if (triplet_clearance_ok(s, cfg)) break;
      ++resamples;
    } while (true);
    const auto [loss, analytic] = triplet_loss(s, cfg);
    (void)loss;
    const Eigen::MatrixXd fd = fd_gradient(
        [&](const Eigen::MatrixXd& x) { return triplet_loss(x, cfg).first; }, s, kFdStep);
    worst = std::max(worst, max_rel_err(analytic, fd));
  }
  return {worst <= tol, false, fmt_detail(worst, instances, resamples)};
}

namespace {

CheckReport fd_minmax_rank_check(std::uint64_t seed, int instances, double tau, double tol,
                                 bool through_tsl) {
  Rng rng(seed);
  const int n = 4;
  double worst = 0.0;
  int resamples = 0;
  for (int t = 0; t < instances; ++t) {
    RankMatrix sr;
    RankMatrix cr;
    do {
      sr = rank_matrix(gapped_matrix(rng, n, n, 20, 0.05), tau);
      cr = rank_matrix(gapped_matrix(rng, n, n, 20, 0.05), tau);
      const double min_gap = (sr.entries - cr.entries).cwiseAbs().minCoeff();
      if (min_gap >= kClearance) break;
      ++resamples;
    } while (true);
    const auto [loss, analytic] =
        through_tsl ? tsl_loss(sr, cr) : vsl_loss(sr, cr);
    (void)loss;
    const double tau_used = sr.tau;
    const Eigen::MatrixXd fd = fd_gradient(
        [&](const Eigen::MatrixXd& x) {
          const RankMatrix probe{x, tau_used};
          return through_tsl ? tsl_loss(probe, cr).first : vsl_loss(probe, cr).first;
        },
        sr.entries, kFdStep);
    worst = std::max(worst, max_rel_err(analytic, fd));
  }
  return {worst <= tol, false, fmt_detail(worst, instances, resamples)};
}

}  // namespace

CheckReport fd_vsl_check(std::uint64_t seed, int instances, double tau, double tol) {
  return fd_minmax_rank_check(seed, instances, tau, tol, false);
}

CheckReport fd_tsl_check(std::uint64_t seed, int instances, double tau, double tol) {
  return fd_minmax_rank_check(seed, instances, tau, tol, true);
}

CheckReport fd_total_loss_check(std::uint64_t seed, int instances, double tau, double tol) {
  Rng rng(seed);
  const int n = 4;
  const Eigen::Index d_img = 4;
  const Eigen::Index d_txt = 3;
  const Eigen::Index d_emb = 3;
  double worst = 0.0;
  int resamples = 0;

  auto random_features = [&rng](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd f(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      do {
        for (Eigen::Index c = 0; c < cols; ++c) f(r, c) = rng.uniform(-1.0, 1.0);
      } while (f.row(r).norm() < 0.5);
    }
    return f;
  };
  auto random_semantic = [&rng](int size) {
    Eigen::MatrixXd m(size, size);
    for (int r = 0; r < size; ++r) {
      m(r, r) = rng.uniform(0.0, 1.0);
      for (int c = r + 1; c < size; ++c) {
        m(r, c) = rng.uniform(0.0, 1.0);
        m(c, r) = m(r, c);
      }
    }
    return m;
  };

  for (int t = 0; t < instances; ++t) {
    LossConfig cfg;
    cfg.tau = tau;
    cfg.include_tsl = t % 2 == 1;
    for (int attempt = 0;; ++attempt) {
      const Eigen::MatrixXd fi = random_features(n, d_img);
      const Eigen::MatrixXd ft = random_features(n, d_txt);
      const SemanticMatrix c = random_semantic(n);
      const SemanticMatrix tc = random_semantic(n);
      const SemanticMatrix* tc_ptr = cfg.include_tsl ? &tc : nullptr;
      const TwoBranchEncoder enc = init_encoder(d_img, d_txt, d_emb, rng.next_u64());

      const auto [u, v] = encode(enc, fi, ft);
      const Eigen::MatrixXd s = cosine_similarity_matrix(u, v);
      const RankMatrix sr = rank_matrix(s, tau);
      const RankMatrix crr = rank_matrix(c, tau);
      bool clear = triplet_clearance_ok(s, cfg) &&
                   (sr.entries - crr.entries).cwiseAbs().minCoeff() >= kClearance;
      if (clear && cfg.include_tsl) {
        const RankMatrix str = rank_matrix(Eigen::MatrixXd(s.transpose()), tau);
        const RankMatrix tcr = rank_matrix(tc, tau);
        clear = (str.entries - tcr.entries).cwiseAbs().minCoeff() >= kClearance;
      }
      if (!clear && attempt < 200) {
        ++resamples;
        continue;
      }

      const LossOutput out = total_loss(s, c, tc_ptr, cfg);
      const EncoderGradients analytic = backward(enc, fi, ft, out.grad_S);

      auto loss_with = [&](const TwoBranchEncoder& probe) {
        const auto [pu, pv] = encode(probe, fi, ft);
        return total_loss(cosine_similarity_matrix(pu, pv), c, tc_ptr, cfg).total;
      };
      TwoBranchEncoder probe = enc;
      const Eigen::MatrixXd fd_img = fd_gradient(
          [&](const Eigen::MatrixXd& w) {
            probe.W_img = w;
            return loss_with(probe);
          },
          enc.W_img, kFdStep);
      probe.W_img = enc.W_img;
      const Eigen::MatrixXd fd_txt = fd_gradient(
          [&](const Eigen::MatrixXd& w) {
            probe.W_txt = w;
            return loss_with(probe);
          },
          enc.W_txt, kFdStep);

      if ((!resolvable(analytic.W_img, fd_img) || !resolvable(analytic.W_txt, fd_txt)) &&
          attempt < 200) {
        ++resamples;
        continue;
      }
      worst = std::max(worst, max_rel_err(analytic.W_img, fd_img));
      worst = std::max(worst, max_rel_err(analytic.W_txt, fd_txt));
      break;
    }
  }
  return {worst <= tol, false, fmt_detail(worst, instances, resamples)};
}

CheckReport vsl_identity_check(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 4;
  const double tau = 0.01;
  const RankMatrix a = rank_matrix(gapped_matrix(rng, n, n, 20, 0.05), tau);
  const RankMatrix b = rank_matrix(gapped_matrix(rng, n, n, 20, 0.05), tau);

  const auto [self_loss, self_grad] = vsl_loss(a, a);
  if (self_loss != 0.0 || self_grad.cwiseAbs().maxCoeff() != 0.0) {
    return {false, false, "vsl(A, A) is not exactly zero"};
  }

  if (vsl_loss(a, b).first != vsl_loss(b, a).first) {
    return {false, false, "vsl value is not symmetric under argument swap"};
  }

  const RankMatrix one_a{Eigen::MatrixXd::Constant(1, 1, 1.5), tau};
  const RankMatrix one_b{Eigen::MatrixXd::Constant(1, 1, 3.0), tau};
  if (std::abs(vsl_loss(one_a, one_b).first - 0.5) > 1e-15) {
    return {false, false, "1x1 closed form mismatch"};
  }

  // moving one rank entry toward its target strictly decreases the loss
  RankMatrix moved = a;
  Eigen::Index wr = 0;
  Eigen::Index wc = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (std::abs(a.entries(r, c) - b.entries(r, c)) >
          std::abs(a.entries(wr, wc) - b.entries(wr, wc))) {
        wr = r;
        wc = c;
      }
    }
  }
  moved.entries(wr, wc) = 0.5 * (a.entries(wr, wc) + b.entries(wr, wc));
  if (!(vsl_loss(moved, b).first < vsl_loss(a, b).first)) {
    return {false, false, "loss did not decrease when a rank moved toward its target"};
  }

  const double base = vsl_loss(a, b).first;
  if (!(base >= 0.0 && base < 1.0)) return {false, false, "loss out of [0, 1)"};
  return {true, false, "identities hold"};
}

}  // namespace vsl
