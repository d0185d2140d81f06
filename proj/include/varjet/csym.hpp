#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "varjet/errors.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"

namespace varjet {

// A matrix M acting on q-fold Kronecker powers of R^n is column symmetric
// when the column at e_{i1} (x) ... (x) e_{iq} is the same for every
// permutation of the indices. Derivative tensors D^m g all have this form,
// and a column-symmetric matrix is determined by its action on the powers
// x^{(x) q} alone.

namespace detail {

inline std::size_t pow_sz(std::size_t n, int q) {
  std::size_t p = 1;
  for (int i = 0; i < q; ++i) p *= n;
  return p;
}

inline std::vector<std::size_t> decode_index(std::size_t flat, std::size_t n,
                                             int q) {
  std::vector<std::size_t> idx(q);
  for (int p = q - 1; p >= 0; --p) {
    idx[p] = flat % n;
    flat /= n;
  }
  return idx;
}

inline void check_csym_shape(const Mat& m, std::size_t n, int q) {
  if (q < 1 || q > 4) {
    throw OrderError("tensor order " + std::to_string(q) +
                     " outside supported range 1..4");
  }
  if (m.cols != pow_sz(n, q)) {
    throw ShapeError("expected " + std::to_string(pow_sz(n, q)) +
                     " columns for base dimension " + std::to_string(n) +
                     " and order " + std::to_string(q) + ", got " +
                     std::to_string(m.cols));
  }
}

}  // namespace detail

struct CSymCheck {
  bool ok = false;
  double max_violation = 0.0;
};

/// Tests column symmetry by comparing every column against the one at the
/// sorted index tuple. max_violation is the largest entrywise discrepancy
/// found.
inline CSymCheck is_csymmetric(const Mat& m, std::size_t n, int q,
                               double tol = 1e-12) {
  detail::check_csym_shape(m, n, q);
  double worst = 0.0;
  for (std::size_t col = 0; col < m.cols; ++col) {
    auto idx = detail::decode_index(col, n, q);
    auto canon = idx;
    std::sort(canon.begin(), canon.end());
    if (canon == idx) continue;
    const std::size_t ref = kron_index(canon, n);
    for (std::size_t r = 0; r < m.rows; ++r) {
      worst = std::max(worst, std::abs(m(r, col) - m(r, ref)));
    }
  }
  return {worst <= tol, worst};
}

/// Column-permutation average: the unique column-symmetric matrix with the
/// same action on all powers x^{(x) q}. Idempotent.
inline Mat csym_project(const Mat& m, std::size_t n, int q) {
  detail::check_csym_shape(m, n, q);
  // Accumulate orbit sums keyed by the sorted tuple, then spread the means.
  std::map<std::size_t, std::pair<Vec, std::size_t>> orbits;
  for (std::size_t col = 0; col < m.cols; ++col) {
    auto canon = detail::decode_index(col, n, q);
    std::sort(canon.begin(), canon.end());
    auto& slot = orbits[kron_index(canon, n)];
    if (slot.first.empty()) slot.first.assign(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) slot.first[r] += m(r, col);
    slot.second += 1;
  }
  Mat out(m.rows, m.cols);
  for (std::size_t col = 0; col < m.cols; ++col) {
    auto canon = detail::decode_index(col, n, q);
    std::sort(canon.begin(), canon.end());
    const auto& slot = orbits[kron_index(canon, n)];
    for (std::size_t r = 0; r < m.rows; ++r) {
      out(r, col) = slot.first[r] / static_cast<double>(slot.second);
    }
  }
  return out;
}

/// Specification of a column-symmetric matrix: M is m x n^q, validated at
/// construction.
struct CSymSpec {
  std::size_t m = 0;
  std::size_t n = 0;
  int q = 1;
  Mat M;

  CSymSpec(Mat mat, std::size_t base_dim, int order, double tol = 1e-12)
      : m(mat.rows), n(base_dim), q(order), M(std::move(mat)) {
    const CSymCheck chk = is_csymmetric(M, n, q, tol);
    if (!chk.ok) {
      throw Error("CSymSpec: column symmetry violated by " +
                  std::to_string(chk.max_violation));
    }
  }
};

/// Recovers the column-symmetric M from the black-box map x -> M x^{(x) q}
/// by polarization differences over basis vectors. Exact for genuinely
/// homogeneous degree-q input; q <= 3.
inline Mat polarize(const std::function<Vec(const Vec&)>& oracle,
                    std::size_t n, int q) {
  if (q < 1 || q > 3) {
    throw OrderError("polarize: order " + std::to_string(q) +
                     " outside supported range 1..3");
  }
  auto unit = [n](std::size_t i) {
    Vec e(n, 0.0);
    e[i] = 1.0;
    return e;
  };
  auto unit2 = [n](std::size_t i, std::size_t j) {
    Vec e(n, 0.0);
    e[i] += 1.0;
    e[j] += 1.0;
    return e;
  };

  const std::size_t cols = detail::pow_sz(n, q);
  Mat out;
  auto place = [&](std::size_t col, const Vec& value) {
    if (out.rows == 0) out = Mat(value.size(), cols);
    if (value.size() != out.rows) {
      throw ShapeError("polarize: oracle output length changed");
    }
    for (std::size_t r = 0; r < out.rows; ++r) out(r, col) = value[r];
  };

  if (q == 1) {
    for (std::size_t i = 0; i < n; ++i) place(i, oracle(unit(i)));
    return out;
  }

  std::vector<Vec> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = oracle(unit(i));

  if (q == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        Vec col = vscale(
            0.5, vsub(vsub(oracle(unit2(i, j)), base[i]), base[j]));
        place(i * n + j, col);
        place(j * n + i, col);
      }
    }
    return out;
  }

  // q == 3: inclusion-exclusion over subsets of {e_i, e_j, e_k}; valid for
  // repeated indices because the identity is algebraic in the symmetric
  // trilinear form.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      for (std::size_t k = j; k < n; ++k) {
        Vec e3(n, 0.0);
        e3[i] += 1.0;
        e3[j] += 1.0;
        e3[k] += 1.0;
        Vec col = oracle(e3);
        col = vsub(col, oracle(unit2(i, j)));
        col = vsub(col, oracle(unit2(i, k)));
        col = vsub(col, oracle(unit2(j, k)));
        col = vadd(col, base[i]);
        col = vadd(col, base[j]);
        col = vadd(col, base[k]);
        col = vscale(1.0 / 6.0, col);
        std::vector<std::size_t> idx{i, j, k};
        do {
          place(kron_index(idx, n), col);
        } while (std::next_permutation(idx.begin(), idx.end()));
      }
    }
  }
  return out;
}

/// Decides whether the quadratic map h -> C h^{(x) 2} is of the scaled
/// projection form (a^T h) h. On success returns a; the candidate comes from
/// the diagonal columns and is validated on a fixed seeded sample. When C is
/// itself column symmetric the exact structural identity
/// C = (a^T (x) E + E (x) a^T) / 2 is also required.
inline std::optional<Vec> extract_linear_form(const Mat& c,
                                              double tol = 1e-10) {
  if (c.cols != c.rows * c.rows) {
    throw ShapeError("extract_linear_form: expected n x n^2 input");
  }
  const std::size_t n = c.rows;
  Vec a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i] = c(i, i * n + i);

  std::mt19937_64 gen(0x5eedf00dULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec h(n);
    for (double& x : h) x = dist(gen);
    const Vec ch2 = c * kron(h, h);
    const Vec want = vscale(dot(a, h), h);
    const double hn2 = dot(h, h);
    if (norm_inf(vsub(ch2, want)) > tol * (1.0 + hn2)) return std::nullopt;
  }

  if (is_csymmetric(c, n, 2, tol).ok) {
    const Mat structure =
        0.5 * (kron(row_mat(a), identity(n)) + kron(identity(n), row_mat(a)));
    if (max_abs(c - structure) > tol) return std::nullopt;
  }
  return a;
}

/// Decides whether w = c (x) c and returns c when it does. The reshaped
/// n x n matrix must be symmetric, positive semidefinite, and rank <= 1
/// within tol; the sign of c is fixed by making its first nonzero component
/// nonnegative.
inline std::optional<Vec> kron_square_root(const Vec& w, double tol = 1e-10) {
  std::size_t n = 0;
  while (n * n < w.size()) ++n;
  if (n * n != w.size()) {
    throw ShapeError("kron_square_root: length " + std::to_string(w.size()) +
                     " is not a perfect square");
  }
  if (norm_inf(w) <= tol) return Vec(n, 0.0);

  Mat wm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) wm(j, i) = w[i * n + j];

  const double scale = 1.0 + max_abs(wm);
  std::size_t p = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (wm(i, i) > wm(p, p)) p = i;
  if (wm(p, p) <= tol * scale) return std::nullopt;  // not c c^T with c != 0

  Vec c(n);
  const double root = std::sqrt(wm(p, p));
  for (std::size_t i = 0; i < n; ++i) c[i] = wm(i, p) / root;

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(wm(i, j) - c[i] * c[j]));
  if (worst > tol * scale) return std::nullopt;

  const double cn = norm_inf(c);
  for (double v : c) {
    if (std::abs(v) > tol * (1.0 + cn)) {
      if (v < 0.0)
        for (double& x : c) x = -x;
      break;
    }
  }
  return c;
}

}  // namespace varjet
