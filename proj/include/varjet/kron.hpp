#pragma once

#include <cstddef>
#include <string>

#include "varjet/errors.hpp"
#include "varjet/mat.hpp"

namespace varjet {

// Flattening convention used throughout: the component (e_i (x) e_j) of
// R^m (x) R^n sits at flat index i*n + j, first factor most significant.
// Higher powers nest the same way.

/// Flat index of e_{i1} (x) ... (x) e_{iq} in R^n tensor powers, indices
/// 0-based.
inline std::size_t kron_index(const std::vector<std::size_t>& idx,
                              std::size_t n) {
  std::size_t flat = 0;
  for (std::size_t i : idx) {
    if (i >= n) throw ShapeError("kron_index: index out of range");
    flat = flat * n + i;
  }
  return flat;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat c(a.rows * b.rows, a.cols * b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t k = 0; k < b.rows; ++k) {
        for (std::size_t l = 0; l < b.cols; ++l) {
          c(i * b.rows + k, j * b.cols + l) = aij * b(k, l);
        }
      }
    }
  }
  return c;
}

inline Vec kron(const Vec& u, const Vec& v) {
  Vec w(u.size() * v.size());
  std::size_t p = 0;
  for (double ui : u)
    for (double vj : v) w[p++] = ui * vj;
  return w;
}

/// v^{(x) k} for k in 1..4.
inline Vec kron_pow(const Vec& v, int k) {
  if (k < 1 || k > 4) {
    throw OrderError("kron_pow: order " + std::to_string(k) +
                     " outside supported range 1..4");
  }
  Vec w = v;
  for (int i = 1; i < k; ++i) w = kron(w, v);
  return w;
}

/// Star product: with B = [B_1 ... B_p] split into p equal column blocks,
/// returns [A (x) B_1  ...  A (x) B_p]. Distinct from A (x) B, which
/// interleaves scaled copies of B instead of keeping blocks contiguous.
inline Mat star(const Mat& a, const Mat& b, std::size_t n_blocks) {
  if (n_blocks == 0 || b.cols % n_blocks != 0) {
    throw ShapeError("star: column count " + std::to_string(b.cols) +
                     " not divisible into " + std::to_string(n_blocks) +
                     " blocks");
  }
  const std::size_t w = b.cols / n_blocks;  // columns per block
  Mat c(a.rows * b.rows, a.cols * b.cols);
  for (std::size_t blk = 0; blk < n_blocks; ++blk) {
    for (std::size_t i = 0; i < a.rows; ++i) {
      for (std::size_t j = 0; j < a.cols; ++j) {
        const double aij = a(i, j);
        if (aij == 0.0) continue;
        for (std::size_t k = 0; k < b.rows; ++k) {
          for (std::size_t l = 0; l < w; ++l) {
            c(i * b.rows + k, blk * a.cols * w + j * w + l) =
                aij * b(k, blk * w + l);
          }
        }
      }
    }
  }
  return c;
}

/// Permutation F with F (u (x) v) = v (x) u for u in R^s, v in R^n.
inline Mat swap_matrix(std::size_t s, std::size_t n) {
  Mat f(s * n, s * n);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < n; ++j) f(j * s + i, i * n + j) = 1.0;
  return f;
}

/// (P (x) P) v without forming the n^2 x n^2 product: reshape v to V with
/// V(j,i) = v[i*n+j], multiply P V P^T, flatten back. O(n^3) instead of
/// O(n^4).
inline Vec apply_kron_pair(const Mat& p, const Vec& v) {
  const std::size_t n = p.cols;
  const std::size_t m = p.rows;
  if (v.size() != n * n) {
    throw ShapeError("apply_kron_pair: vector length " +
                     std::to_string(v.size()) + " is not cols^2");
  }
  Mat vm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) vm(j, i) = v[i * n + j];
  const Mat w = p * vm * transpose(p);
  Vec out(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = w(j, i);
  return out;
}

/// Named entry point for the common inverse-pair use: the caller passes
/// Psi = lu_solve(Dphi, E) and gets (Psi (x) Psi) v. Same kernel as
/// apply_kron_pair; the name records the intent.
inline Vec apply_kron_inv_pair(const Mat& psi, const Vec& v) {
  return apply_kron_pair(psi, v);
}

}  // namespace varjet
