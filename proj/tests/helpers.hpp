#pragma once

#include <cmath>
#include <random>

#include "varjet/mat.hpp"
#include "varjet/system.hpp"

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64{seed}; }

inline varjet::Vec random_vec(std::size_t n, std::mt19937_64& gen,
                              double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  varjet::Vec v(n);
  for (double& x : v) x = d(gen);
  return v;
}

inline varjet::Mat random_mat(std::size_t r, std::size_t c,
                              std::mt19937_64& gen) {
  varjet::Mat m(r, c);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& x : m.entries) x = d(gen);
  return m;
}

inline double max_diff(const varjet::Mat& a, const varjet::Mat& b) {
  return varjet::max_abs(a - b);
}

inline double max_diff(const varjet::Vec& a, const varjet::Vec& b) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

// Shared fixture systems.

// f = x in one dimension.
inline varjet::PolySystem scalar_linear() {
  using namespace varjet;
  return PolySystem(1, PolyMat(1), PolyMat{PolyT{1.0}}, PolyMat(1),
                    PolyMat(1));
}

// f = x^2 in one dimension; flow phi = xi / (1 - xi (t - tau)).
inline varjet::PolySystem scalar_square() {
  using namespace varjet;
  return PolySystem(1, PolyMat(1), PolyMat(1), PolyMat{PolyT{2.0}},
                    PolyMat(1));
}

// f = x^3 in one dimension.
inline varjet::PolySystem scalar_cube() {
  using namespace varjet;
  return PolySystem(1, PolyMat(1), PolyMat(1), PolyMat(1),
                    PolyMat{PolyT{6.0}});
}

// Planar rotation f = (x2, -x1); Dphi is rotation by t - tau.
inline varjet::PolySystem rotation() {
  using namespace varjet;
  PolyMat b(4);
  b[1] = PolyT{1.0};
  b[2] = PolyT{-1.0};
  return PolySystem(2, PolyMat(2), std::move(b), PolyMat(8), PolyMat(16));
}

// Componentwise squares f = (x1^2, x2^2): quadratic but not of Riccati form.
inline varjet::PolySystem comp_squares() {
  using namespace varjet;
  PolyMat c(8);
  c[0] = PolyT{2.0};
  c[7] = PolyT{2.0};
  return PolySystem(2, PolyMat(2), PolyMat(4), std::move(c), PolyMat(16));
}

// Dense quadratic+cubic test system with time-varying coefficients, n=2.
inline varjet::PolySystem dense_sys() {
  using namespace varjet;
  PolyMat a(2), b(4), c(8), t3(16);
  a[0] = PolyT{0.3, -0.2};
  a[1] = PolyT{-0.1};
  b[0] = PolyT{0.5};
  b[1] = PolyT{1.0, 0.7};
  b[2] = PolyT{-1.0};
  b[3] = PolyT{0.0, 0.0, 0.25};
  c[0] = PolyT{2.0};
  c[1] = PolyT{0.4, -1.0};
  c[3] = PolyT{-0.6};
  c[4] = PolyT{0.8};
  c[6] = PolyT{0.0, 0.5};
  c[7] = PolyT{1.2};
  t3[0] = PolyT{0.9};
  t3[5] = PolyT{-0.3, 0.1};
  t3[10] = PolyT{0.7};
  t3[15] = PolyT{0.2};
  return PolySystem(2, std::move(a), std::move(b), std::move(c),
                    std::move(t3));
}

// Planar Riccati system x' = a + Bx + (c^T x) x with constant coefficients.
inline varjet::RiccatiCoeffs planar_riccati() {
  using namespace varjet;
  return RiccatiCoeffs(2, PolyMat{PolyT{1.0}, PolyT{}},
                       PolyMat{PolyT{}, PolyT{1.0}, PolyT{-1.0}, PolyT{}},
                       PolyMat{PolyT{1.0}, PolyT{-1.0}});
}

}  // namespace testutil
