#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "varjet/csym.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"

namespace varjet {

/// One property checked over a batch of random instances.
struct PropertyCheck {
  std::string name;
  std::size_t trials = 0;
  double bound = 0.0;  // admissible normalized deviation
  double worst = 0.0;  // largest normalized deviation seen
  bool ok = false;
};

struct SelfTestReport {
  std::uint64_t seed = 0;
  std::vector<PropertyCheck> checks;
  bool all_ok = false;
};

namespace detail {

inline Mat unif_mat(std::size_t r, std::size_t c, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Mat m(r, c);
  for (double& x : m.entries) x = d(gen);
  return m;
}

inline Vec unif_vec(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec v(n);
  for (double& x : v) x = d(gen);
  return v;
}

inline std::size_t rand_dim(std::mt19937_64& gen, std::size_t lo,
                            std::size_t hi) {
  std::uniform_int_distribution<std::size_t> d(lo, hi);
  return d(gen);
}

inline Mat hstack(const std::vector<Mat>& blocks) {
  const std::size_t r = blocks.front().rows;
  std::size_t c = 0;
  for (const Mat& b : blocks) c += b.cols;
  Mat out(r, c);
  std::size_t at = 0;
  for (const Mat& b : blocks) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < b.cols; ++j) out(i, at + j) = b(i, j);
    }
    at += b.cols;
  }
  return out;
}

inline double normalized_dev(const Mat& lhs, const Mat& rhs) {
  return max_abs(lhs - rhs) / (1.0 + std::max(max_abs(lhs), max_abs(rhs)));
}

inline double normalized_dev(const Vec& lhs, const Vec& rhs) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    diff = std::max(diff, std::abs(lhs[i] - rhs[i]));
    scale = std::max({scale, std::abs(lhs[i]), std::abs(rhs[i])});
  }
  return diff / (1.0 + scale);
}

/// Random c-symmetric matrix obtained by projecting a dense draw.
inline Mat unif_csym(std::size_t m, std::size_t n, int q,
                     std::mt19937_64& gen) {
  return csym_project(unif_mat(m, pow_sz(n, q), gen), n, q);
}

template <typename Body>
PropertyCheck run_property(const std::string& name, std::size_t trials,
                           double bound, std::mt19937_64& gen, Body&& body) {
  PropertyCheck c;
  c.name = name;
  c.trials = trials;
  c.bound = bound;
  for (std::size_t i = 0; i < trials; ++i) {
    c.worst = std::max(c.worst, body(gen));
  }
  c.ok = c.worst <= bound;
  return c;
}

}  // namespace detail

/// Seeded bulk verification of the product, rearrangement, star, and block
/// differentiation rules on random instances with dimensions up to 4.
inline SelfTestReport algebra_selftest(std::uint64_t seed,
                                       std::size_t trials) {
  using namespace detail;
  std::mt19937_64 gen(seed);
  SelfTestReport rep;
  rep.seed = seed;
  const double bound = 1e-12;

  rep.checks.push_back(run_property(
      "kron product rule", trials, bound, gen, [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4),
                          r = rand_dim(g, 1, 4), p = rand_dim(g, 1, 4),
                          q = rand_dim(g, 1, 4), s = rand_dim(g, 1, 4);
        const Mat a = unif_mat(m, n, g), c = unif_mat(n, r, g);
        const Mat b = unif_mat(p, q, g), d = unif_mat(q, s, g);
        return normalized_dev(kron(a, b) * kron(c, d), kron(a * c, b * d));
      }));

  rep.checks.push_back(run_property(
      "column rearrangement", trials, bound, gen, [](std::mt19937_64& g) {
        const std::size_t n = rand_dim(g, 1, 4), m = rand_dim(g, 1, 4);
        const Vec a = unif_vec(n, g), b = unif_vec(n, g), c = unif_vec(n, g);
        const Mat cm = unif_mat(m, n, g);
        double worst = normalized_dev(
            kron(row_mat(a), col_mat(b)) * c, vscale(dot(a, c), b));
        worst = std::max(
            worst, normalized_dev(kron(col_mat(a), cm) * b,
                                  kron(a, cm * b)));
        worst = std::max(
            worst, normalized_dev(kron(cm, col_mat(a)) * b,
                                  kron(cm * b, a)));
        return worst;
      }));

  rep.checks.push_back(run_property(
      "column symmetric factor swap", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4),
                          p = rand_dim(g, 1, 4);
        const Mat msym = unif_csym(m, n, 2, g);
        const Mat a = unif_mat(n, p, g);
        const Vec b = unif_vec(n, g);
        return normalized_dev(msym * kron(a, col_mat(b)),
                              msym * kron(col_mat(b), a));
      }));

  rep.checks.push_back(run_property(
      "padded factor swap", trials, bound, gen, [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4);
        const Mat msym = unif_csym(m, n, 2, g);
        const Mat e = identity(n);
        const Vec a = unif_vec(n, g), b = unif_vec(n, g), c = unif_vec(n, g);
        const Vec abc = kron(kron(a, b), c);
        double worst = normalized_dev(
            kron(msym, e) * abc, kron(msym, e) * kron(kron(b, a), c));
        worst = std::max(worst,
                         normalized_dev(kron(e, msym) * abc,
                                        kron(e, msym) * kron(kron(a, c), b)));
        return worst;
      }));

  rep.checks.push_back(run_property(
      "symmetrized pair elimination", trials, bound, gen,
      [](std::mt19937_64& g) {
        // a (x) b + b (x) a determines b once a is nonzero: the (i,i) block
        // row gives b_i, the rest follow by division.
        const std::size_t n = rand_dim(g, 1, 4);
        Vec a = unif_vec(n, g);
        std::size_t piv = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (std::abs(a[i]) > std::abs(a[piv])) piv = i;
        }
        if (std::abs(a[piv]) < 0.1) {
          a[piv] = 0.5;  // keep the elimination well conditioned
        }
        const Vec b = unif_vec(n, g);
        Vec w = kron(a, b);
        axpy(1.0, kron(b, a), w);
        Vec rec(n);
        rec[piv] = w[piv * n + piv] / (2.0 * a[piv]);
        for (std::size_t j = 0; j < n; ++j) {
          if (j != piv) rec[j] = (w[piv * n + j] - rec[piv] * a[j]) / a[piv];
        }
        return normalized_dev(rec, b);
      }));

  rep.checks.push_back(run_property(
      "star directional collapse", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4);
        const Mat a = unif_mat(m, n, g);
        const Mat c = unif_mat(n, n, g);
        const Mat b = unif_mat(n, n * n, g);
        const Vec h = unif_vec(n, g);
        double worst = normalized_dev(star(a, c, n) * kron_pow(h, 2),
                                      kron(a * h, c * h));
        worst = std::max(worst,
                         normalized_dev(star(a, b, n) * kron_pow(h, 3),
                                        kron(a * h, b * kron_pow(h, 2))));
        return worst;
      }));

  rep.checks.push_back(run_property(
      "product differentiation blocks", trials, bound, gen,
      [](std::mt19937_64& g) {
        // Affine matrix functions A(x) = A0 + sum x_k Ak have exact partials,
        // so the block collection rules must hold to rounding.
        const std::size_t s = rand_dim(g, 1, 3), m = rand_dim(g, 1, 3),
                          n = rand_dim(g, 1, 3), q = rand_dim(g, 1, 3);
        const Vec x = unif_vec(s, g);
        const Mat a0 = unif_mat(m, n, g), b0 = unif_mat(n, q, g);
        std::vector<Mat> ak, bk;
        for (std::size_t k = 0; k < s; ++k) {
          ak.push_back(unif_mat(m, n, g));
          bk.push_back(unif_mat(n, q, g));
        }
        Mat a = a0, b = b0;
        for (std::size_t k = 0; k < s; ++k) {
          a = a + x[k] * ak[k];
          b = b + x[k] * bk[k];
        }
        std::vector<Mat> lhs_blocks;
        for (std::size_t k = 0; k < s; ++k) {
          lhs_blocks.push_back(ak[k] * b + a * bk[k]);
        }
        const Mat da = hstack(ak), db = hstack(bk);
        return normalized_dev(hstack(lhs_blocks),
                              a * db + da * kron(identity(s), b));
      }));

  rep.checks.push_back(run_property(
      "kron differentiation blocks", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t s = rand_dim(g, 1, 3), m = rand_dim(g, 1, 3),
                          n = rand_dim(g, 1, 3), p = rand_dim(g, 1, 3),
                          q = rand_dim(g, 1, 3);
        const Vec x = unif_vec(s, g);
        const Mat a0 = unif_mat(m, n, g), b0 = unif_mat(p, q, g);
        std::vector<Mat> ak, bk;
        for (std::size_t k = 0; k < s; ++k) {
          ak.push_back(unif_mat(m, n, g));
          bk.push_back(unif_mat(p, q, g));
        }
        Mat a = a0, b = b0;
        for (std::size_t k = 0; k < s; ++k) {
          a = a + x[k] * ak[k];
          b = b + x[k] * bk[k];
        }
        std::vector<Mat> lhs_blocks;
        for (std::size_t k = 0; k < s; ++k) {
          lhs_blocks.push_back(kron(ak[k], b) + kron(a, bk[k]));
        }
        const Mat lhs = hstack(lhs_blocks);
        const Mat da = hstack(ak), db = hstack(bk);
        // Star form of the rule.
        double worst =
            normalized_dev(lhs, star(a, db, s) + kron(da, b));
        // Swap-matrix form of the same rule.
        worst = std::max(
            worst, normalized_dev(lhs, kron(a, db) *
                                               kron(swap_matrix(s, n),
                                                    identity(q)) +
                                           kron(da, b)));
        return worst;
      }));

  rep.checks.push_back(run_property(
      "block distribution rules", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t s = rand_dim(g, 1, 4), m = rand_dim(g, 1, 3),
                          n = rand_dim(g, 1, 3), p = rand_dim(g, 1, 3),
                          q = rand_dim(g, 1, 3);
        const Mat a = unif_mat(m, n, g);
        std::vector<Mat> bs, as, abs_, axb, ab;
        for (std::size_t k = 0; k < s; ++k) {
          bs.push_back(unif_mat(n, p, g));
          abs_.push_back(a * bs.back());
          as.push_back(unif_mat(m, n, g));
        }
        const Mat bright = unif_mat(p, q, g);
        for (std::size_t k = 0; k < s; ++k) {
          axb.push_back(kron(as[k], bright));
        }
        const Mat bsq = unif_mat(n, q, g);
        for (std::size_t k = 0; k < s; ++k) ab.push_back(as[k] * bsq);
        double worst =
            normalized_dev(a * hstack(bs), hstack(abs_));
        worst = std::max(worst,
                         normalized_dev(kron(hstack(as), bright),
                                        hstack(axb)));
        worst = std::max(
            worst, normalized_dev(hstack(as) * kron(identity(s), bsq),
                                  hstack(ab)));
        return worst;
      }));

  rep.checks.push_back(run_property(
      "block mixing rule", trials, bound, gen, [](std::mt19937_64& g) {
        const std::size_t p = rand_dim(g, 1, 4), q = rand_dim(g, 1, 4),
                          m = rand_dim(g, 1, 3), n = rand_dim(g, 1, 3);
        std::vector<Mat> as;
        for (std::size_t k = 0; k < p; ++k) as.push_back(unif_mat(m, n, g));
        const Mat b = unif_mat(p, q, g);
        std::vector<Mat> rhs_blocks;
        for (std::size_t j = 0; j < q; ++j) {
          Mat acc = zeros(m, n);
          for (std::size_t k = 0; k < p; ++k) acc = acc + b(k, j) * as[k];
          rhs_blocks.push_back(std::move(acc));
        }
        return normalized_dev(hstack(as) * kron(b, identity(n)),
                              hstack(rhs_blocks));
      }));

  rep.checks.push_back(run_property(
      "swap matrix orthogonality", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t s = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4);
        const Mat f = swap_matrix(s, n);
        double worst = normalized_dev(transpose(f) * f,
                                      identity(s * n));
        if (s == n) {
          worst = std::max(worst, normalized_dev(f * f, identity(s * n)));
        }
        const Vec u = unif_vec(s, g), v = unif_vec(n, g);
        worst = std::max(worst, normalized_dev(f * kron(u, v), kron(v, u)));
        return worst;
      }));

  rep.all_ok = true;
  for (const PropertyCheck& c : rep.checks) rep.all_ok = rep.all_ok && c.ok;
  return rep;
}

/// Seeded bulk verification of polarization recovery: random column
/// symmetric matrices round-trip exactly, nonzero plants stay nonzero, and
/// composition with a state change recovers the projected composed matrix.
inline SelfTestReport polarize_selftest(std::uint64_t seed,
                                        std::size_t trials) {
  using namespace detail;
  std::mt19937_64 gen(seed);
  SelfTestReport rep;
  rep.seed = seed;
  const double bound = 1e-10;

  rep.checks.push_back(run_property(
      "polarize round trip", trials, bound, gen, [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4);
        const int q = static_cast<int>(rand_dim(g, 1, 3));
        const Mat msym = unif_csym(m, n, q, g);
        const Mat rec = polarize(
            [&](const Vec& x) { return msym * kron_pow(x, q); }, n, q);
        return normalized_dev(rec, msym);
      }));

  rep.checks.push_back(run_property(
      "nonzero plant stays nonzero", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 4), n = rand_dim(g, 1, 4);
        const int q = static_cast<int>(rand_dim(g, 1, 3));
        Mat msym = unif_csym(m, n, q, g);
        if (max_abs(msym) < 0.05) msym(0, 0) = 0.5;
        const Mat rec = polarize(
            [&](const Vec& x) { return msym * kron_pow(x, q); }, n, q);
        // Violation metric: distance from the planted matrix; recovering
        // zero would show up as max_abs(msym) here.
        return normalized_dev(rec, msym);
      }));

  rep.checks.push_back(run_property(
      "polarize after state change", trials, bound, gen,
      [](std::mt19937_64& g) {
        const std::size_t m = rand_dim(g, 1, 3), n = rand_dim(g, 1, 3);
        const int q = static_cast<int>(rand_dim(g, 1, 3));
        const Mat msym = unif_csym(m, n, q, g);
        const Mat a = unif_mat(n, n, g);
        Mat aq = a;
        for (int k = 1; k < q; ++k) aq = kron(aq, a);
        const Mat rec = polarize(
            [&](const Vec& x) { return msym * kron_pow(a * x, q); }, n, q);
        return normalized_dev(rec, csym_project(msym * aq, n, q));
      }));

  rep.all_ok = true;
  for (const PropertyCheck& c : rep.checks) rep.all_ok = rep.all_ok && c.ok;
  return rep;
}

}  // namespace varjet
