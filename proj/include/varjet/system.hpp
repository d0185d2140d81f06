#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "varjet/csym.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"
#include "varjet/poly.hpp"

namespace varjet {

/// Matrix of polynomials in t, row-major like Mat.
using PolyMat = std::vector<PolyT>;

namespace detail {

inline Mat eval_poly_mat(const PolyMat& entries, std::size_t rows,
                         std::size_t cols, double t) {
  Mat m(rows, cols);
  for (std::size_t k = 0; k < entries.size(); ++k)
    m.entries[k] = entries[k].eval(t);
  return m;
}

inline std::size_t max_degree_bound(const PolyMat& entries) {
  std::size_t d = 0;
  for (const PolyT& p : entries) d = std::max(d, p.degree_bound());
  return d;
}

// Column-symmetrize a polynomial matrix by projecting each power of t
// separately; the result is column symmetric for every t.
inline void project_poly_mat(PolyMat& entries, std::size_t rows,
                             std::size_t cols, std::size_t n, int q) {
  const std::size_t kmax = max_degree_bound(entries);
  for (std::size_t k = 0; k < kmax; ++k) {
    Mat ck(rows, cols);
    for (std::size_t e = 0; e < entries.size(); ++e)
      ck.entries[e] = entries[e].coeff(k);
    ck = csym_project(ck, n, q);
    for (std::size_t e = 0; e < entries.size(); ++e)
      entries[e].set_coeff(k, ck.entries[e]);
  }
  for (PolyT& p : entries) p.trim();
}

inline void require_size(const PolyMat& m, std::size_t want,
                         const char* name) {
  if (m.size() != want) {
    throw ShapeError(std::string(name) + ": expected " +
                     std::to_string(want) + " entries, got " +
                     std::to_string(m.size()));
  }
}

}  // namespace detail

/// Right-hand side f(t,x) = a(t) + B(t)x + C(t)x^2/2 + T3(t)x^3/6 with
/// polynomial-in-t coefficients. C and T3 are column-symmetrized at
/// construction; only the symmetric action enters f, so arbitrary input
/// tensors are accepted.
struct PolySystem {
  std::size_t n = 0;
  PolyMat a;    // n x 1
  PolyMat B;    // n x n
  PolyMat C;    // n x n^2
  PolyMat T3;   // n x n^3

  PolySystem(std::size_t dim, PolyMat a_in, PolyMat b_in, PolyMat c_in,
             PolyMat t3_in)
      : n(dim),
        a(std::move(a_in)),
        B(std::move(b_in)),
        C(std::move(c_in)),
        T3(std::move(t3_in)) {
    if (n == 0) throw DimensionError("PolySystem: dimension must be positive");
    detail::require_size(a, n, "PolySystem a");
    detail::require_size(B, n * n, "PolySystem B");
    detail::require_size(C, n * n * n, "PolySystem C");
    detail::require_size(T3, n * n * n * n, "PolySystem T3");
    detail::project_poly_mat(C, n, n * n, n, 2);
    detail::project_poly_mat(T3, n, n * n * n, n, 3);
  }
};

/// Coefficients of x' = a(t) + B(t)x + (c(t)^T x) x.
struct RiccatiCoeffs {
  std::size_t n = 0;
  PolyMat a;  // n x 1
  PolyMat B;  // n x n
  PolyMat c;  // n x 1

  RiccatiCoeffs(std::size_t dim, PolyMat a_in, PolyMat b_in, PolyMat c_in)
      : n(dim), a(std::move(a_in)), B(std::move(b_in)), c(std::move(c_in)) {
    if (n == 0)
      throw DimensionError("RiccatiCoeffs: dimension must be positive");
    detail::require_size(a, n, "RiccatiCoeffs a");
    detail::require_size(B, n * n, "RiccatiCoeffs B");
    detail::require_size(c, n, "RiccatiCoeffs c");
  }
};

inline Vec eval_f(const PolySystem& sys, double t, const Vec& x) {
  const std::size_t n = sys.n;
  if (x.size() != n) throw ShapeError("eval_f: state dimension mismatch");
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sys.a[i].eval(t);
  const Mat b = detail::eval_poly_mat(sys.B, n, n, t);
  axpy(1.0, b * x, out);
  const Vec x2 = kron(x, x);
  const Mat c = detail::eval_poly_mat(sys.C, n, n * n, t);
  axpy(0.5, c * x2, out);
  const Mat t3 = detail::eval_poly_mat(sys.T3, n, n * n * n, t);
  axpy(1.0 / 6.0, t3 * kron(x2, x), out);
  return out;
}

/// Jacobian B + C(x (x) E) + T3(x^2 (x) E)/2, exact because C and T3 are
/// column symmetric.
inline Mat eval_Df(const PolySystem& sys, double t, const Vec& x) {
  const std::size_t n = sys.n;
  if (x.size() != n) throw ShapeError("eval_Df: state dimension mismatch");
  Mat out = detail::eval_poly_mat(sys.B, n, n, t);
  const Mat c = detail::eval_poly_mat(sys.C, n, n * n, t);
  out = out + c * kron(col_mat(x), identity(n));
  const Mat t3 = detail::eval_poly_mat(sys.T3, n, n * n * n, t);
  out = out + 0.5 * (t3 * kron(col_mat(kron(x, x)), identity(n)));
  return out;
}

/// Second derivative tensor C + T3(x (x) E_{n^2}), column symmetric.
inline Mat eval_D2f(const PolySystem& sys, double t, const Vec& x) {
  const std::size_t n = sys.n;
  if (x.size() != n) throw ShapeError("eval_D2f: state dimension mismatch");
  Mat out = detail::eval_poly_mat(sys.C, n, n * n, t);
  const Mat t3 = detail::eval_poly_mat(sys.T3, n, n * n * n, t);
  return out + t3 * kron(col_mat(x), identity(n * n));
}

/// Third derivative tensor, state independent.
inline Mat eval_D3f(const PolySystem& sys, double t) {
  return detail::eval_poly_mat(sys.T3, sys.n, sys.n * sys.n * sys.n, t);
}

/// Expands the quadratic coupling (c^T x) x into the tensor
/// C = c^T (x) E + E (x) c^T, so that C x^2 / 2 = (c^T x) x.
inline PolySystem riccati_to_system(const RiccatiCoeffs& rc) {
  const std::size_t n = rc.n;
  PolyMat c_tensor(n * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        PolyT entry;
        if (i == k) entry = entry + rc.c[j];
        if (i == j) entry = entry + rc.c[k];
        entry.trim();
        c_tensor[i * n * n + j * n + k] = entry;
      }
    }
  }
  return PolySystem(n, rc.a, rc.B, std::move(c_tensor),
                    PolyMat(n * n * n * n));
}

/// Recognizes the quadratic coupling of a Riccati right-hand side: requires
/// T3 to vanish and every power of t in C to be a scaled projection. The
/// extraction runs per coefficient matrix, which pins down c(t) exactly when
/// it exists.
inline std::optional<RiccatiCoeffs> system_to_riccati(const PolySystem& sys,
                                                      double tol = 1e-10) {
  const std::size_t n = sys.n;
  for (const PolyT& p : sys.T3) {
    if (!p.is_zero(tol)) return std::nullopt;
  }
  const std::size_t kmax = detail::max_degree_bound(sys.C);
  PolyMat c(n);
  for (std::size_t k = 0; k < kmax; ++k) {
    Mat ck(n, n * n);
    for (std::size_t e = 0; e < sys.C.size(); ++e)
      ck.entries[e] = sys.C[e].coeff(k);
    auto lin = extract_linear_form(0.5 * ck, tol);
    if (!lin) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) c[i].set_coeff(k, (*lin)[i]);
  }
  for (PolyT& p : c) p.trim();
  return RiccatiCoeffs(n, sys.a, sys.B, std::move(c));
}

}  // namespace varjet
