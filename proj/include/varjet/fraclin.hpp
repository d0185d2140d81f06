#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "varjet/errors.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"

namespace varjet {

/// Fractional linear map x -> (A x + beta) / (gamma^T x + delta).
/// The pair (gamma, delta) must not vanish jointly; affine maps have
/// gamma = 0, delta = 1.
struct FracLin {
  Mat A;       // n x n
  Vec beta;    // n
  Vec gamma;   // n
  double delta = 1.0;

  FracLin(Mat a, Vec b, Vec g, double d)
      : A(std::move(a)), beta(std::move(b)), gamma(std::move(g)), delta(d) {
    const std::size_t n = A.rows;
    if (A.cols != n || beta.size() != n || gamma.size() != n) {
      throw ShapeError("FracLin: inconsistent block dimensions");
    }
    if (norm_inf(gamma) == 0.0 && delta == 0.0) {
      throw Error("FracLin: gamma and delta must not both vanish");
    }
  }

  std::size_t dim() const { return A.rows; }
};

namespace detail {

inline double fraclin_rho(const FracLin& g, const Vec& x) {
  const double rho = dot(g.gamma, x) + g.delta;
  if (std::abs(rho) <= 1e-12) {
    throw PoleError("fractional linear map evaluated on its pole set");
  }
  return rho;
}

}  // namespace detail

inline Vec fraclin_eval(const FracLin& g, const Vec& x) {
  if (x.size() != g.dim()) throw ShapeError("fraclin_eval: dimension mismatch");
  const double rho = detail::fraclin_rho(g, x);
  return vscale(1.0 / rho, vadd(g.A * x, g.beta));
}

struct FracLinDiffs {
  Vec dg, d2g, d3g;
};

/// First three directional differentials at x along h. The higher ones are
/// scalar multiples of the first:
///   d2g = (-2 gamma^T h / rho) dg,  d3g = 6 (gamma^T h / rho)^2 dg.
inline FracLinDiffs fraclin_differentials(const FracLin& g, const Vec& x,
                                          const Vec& h) {
  const std::size_t n = g.dim();
  if (x.size() != n || h.size() != n) {
    throw ShapeError("fraclin_differentials: dimension mismatch");
  }
  const double rho = detail::fraclin_rho(g, x);
  const double gh = dot(g.gamma, h);
  const Vec gx = fraclin_eval(g, x);
  FracLinDiffs out;
  out.dg = vscale(1.0 / rho, vsub(g.A * h, vscale(gh, gx)));
  out.d2g = vscale(-2.0 * gh / rho, out.dg);
  out.d3g = vscale(6.0 * (gh / rho) * (gh / rho), out.dg);
  return out;
}

/// The fourth-degree combination dg (x) d3g - (3/2) d2g (x) d2g with the
/// direction taken as x itself; identically zero for genuinely fractional
/// linear maps.
inline Vec remark2_residual(const FracLin& g, const Vec& x) {
  const FracLinDiffs d = fraclin_differentials(g, x, x);
  Vec out = kron(d.dg, d.d3g);
  axpy(-1.5, kron(d.d2g, d.d2g), out);
  return out;
}

}  // namespace varjet
