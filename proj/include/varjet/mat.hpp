#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "varjet/errors.hpp"

namespace varjet {

using Vec = std::vector<double>;

/// Dense real matrix, row-major. The universal carrier for every tensor in
/// the library: Jacobians are n x n, second derivative tensors n x n^2,
/// third n x n^3.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;  // row-major, length rows*cols

  Mat() = default;

  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), entries(r * c, 0.0) {}

  Mat(std::size_t r, std::size_t c, std::vector<double> data)
      : rows(r), cols(c), entries(std::move(data)) {
    if (entries.size() != rows * cols) {
      throw ShapeError("Mat: entry count " + std::to_string(entries.size()) +
                       " does not match " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
    for (double v : entries) {
      if (!std::isfinite(v)) {
        throw Error("Mat: non-finite entry");
      }
    }
  }

  Mat(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    entries.reserve(rows * cols);
    for (const auto& row : init) {
      if (row.size() != cols) {
        throw ShapeError("Mat: ragged initializer");
      }
      entries.insert(entries.end(), row.begin(), row.end());
    }
  }

  double& operator()(std::size_t i, std::size_t j) {
    return entries[i * cols + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return entries[i * cols + j];
  }

  bool finite() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](double v) { return std::isfinite(v); });
  }
};

inline Mat identity(std::size_t n) {
  Mat e(n, n);
  for (std::size_t i = 0; i < n; ++i) e(i, i) = 1.0;
  return e;
}

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }

/// Column vector as an n x 1 matrix.
inline Mat col_mat(const Vec& v) {
  Mat m(v.size(), 1);
  m.entries = v;
  return m;
}

/// Row vector as a 1 x n matrix.
inline Mat row_mat(const Vec& v) {
  Mat m(1, v.size());
  m.entries = v;
  return m;
}

inline Vec as_vec(const Mat& m) {
  if (m.cols != 1) {
    throw ShapeError("as_vec: expected a single-column matrix");
  }
  return m.entries;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

inline Mat operator+(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError("Mat+: shape mismatch");
  }
  Mat c = a;
  for (std::size_t k = 0; k < c.entries.size(); ++k)
    c.entries[k] += b.entries[k];
  return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError("Mat-: shape mismatch");
  }
  Mat c = a;
  for (std::size_t k = 0; k < c.entries.size(); ++k)
    c.entries[k] -= b.entries[k];
  return c;
}

inline Mat operator*(double s, const Mat& a) {
  Mat c = a;
  for (double& v : c.entries) v *= s;
  return c;
}

inline Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) {
    throw ShapeError("Mat*: inner dimensions " + std::to_string(a.cols) +
                     " and " + std::to_string(b.rows) + " differ");
  }
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) {
        c(i, j) += aik * b(k, j);
      }
    }
  }
  return c;
}

inline Vec operator*(const Mat& a, const Vec& x) {
  if (a.cols != x.size()) {
    throw ShapeError("Mat*Vec: dimension mismatch");
  }
  Vec y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Vec vadd(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("vadd: length mismatch");
  Vec c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

inline Vec vsub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("vsub: length mismatch");
  Vec c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

inline Vec vscale(double s, const Vec& v) {
  Vec c = v;
  for (double& x : c) x *= s;
  return c;
}

/// y += s * x, in place.
inline void axpy(double s, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Max row sum norm.
inline double norm_inf(const Mat& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

inline double norm_inf(const Vec& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

/// Largest absolute entry.
inline double max_abs(const Mat& a) {
  double best = 0.0;
  for (double v : a.entries) best = std::max(best, std::abs(v));
  return best;
}

namespace detail {

// Partial-pivot LU of a square matrix, factor stored in place.
// Throws SingularMatrixError when a pivot falls below tol_scale.
struct Lu {
  Mat lu;
  std::vector<std::size_t> perm;
  double min_pivot = 0.0;
  int sign = 1;
};

inline Lu lu_factor(const Mat& a) {
  if (a.rows != a.cols) {
    throw ShapeError("lu_factor: matrix must be square");
  }
  const std::size_t n = a.rows;
  Lu f{a, std::vector<std::size_t>(n), 1e300, 1};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  const double scale = norm_inf(a);
  const double tol = 1e-13 * scale;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
    }
    const double pivot = std::abs(f.lu(p, k));
    if (pivot <= tol || pivot == 0.0) {
      const double cond =
          pivot > 0.0 ? scale / pivot : std::numeric_limits<double>::infinity();
      throw SingularMatrixError(
          "lu_factor: pivot " + std::to_string(pivot) +
              " below threshold at column " + std::to_string(k),
          cond);
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j)
        std::swap(f.lu(k, j), f.lu(p, j));
      std::swap(f.perm[k], f.perm[p]);
      f.sign = -f.sign;
    }
    f.min_pivot = std::min(f.min_pivot, pivot);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = f.lu(i, k) / f.lu(k, k);
      f.lu(i, k) = m;
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
    }
  }
  return f;
}

inline Mat lu_apply(const Lu& f, const Mat& b) {
  const std::size_t n = f.lu.rows;
  if (b.rows != n) {
    throw ShapeError("lu_apply: right-hand side row count mismatch");
  }
  Mat x(n, b.cols);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) x(i, j) = b(f.perm[i], j);
  // forward substitution (unit lower)
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = f.lu(i, k);
      if (m == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) x(i, j) -= m * x(k, j);
    }
  }
  // back substitution
  for (std::size_t k = n; k-- > 0;) {
    const double d = f.lu(k, k);
    for (std::size_t j = 0; j < b.cols; ++j) x(k, j) /= d;
    for (std::size_t i = 0; i < k; ++i) {
      const double m = f.lu(i, k);
      if (m == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) x(i, j) -= m * x(k, j);
    }
  }
  return x;
}

}  // namespace detail

/// Solve A X = B by partial-pivot LU. A pivot below 1e-13 * ||A||_inf raises
/// SingularMatrixError carrying a condition estimate.
inline Mat lu_solve(const Mat& a, const Mat& b) {
  return detail::lu_apply(detail::lu_factor(a), b);
}

/// Infinity-norm condition number ||A||_inf * ||A^-1||_inf; the inverse is
/// formed explicitly (dimensions here never exceed single digits).
inline double condition_inf(const Mat& a) {
  const Mat inv = lu_solve(a, identity(a.rows));
  return norm_inf(a) * norm_inf(inv);
}

}  // namespace varjet
