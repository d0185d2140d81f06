#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "varjet/errors.hpp"

namespace varjet {

/// Real polynomial in t, coefficients in ascending powers. An empty
/// coefficient list is the zero polynomial.
struct PolyT {
  std::vector<double> coeffs;

  PolyT() = default;
  PolyT(std::initializer_list<double> c) : coeffs(c) { validate(); }
  explicit PolyT(std::vector<double> c) : coeffs(std::move(c)) { validate(); }

  void validate() const {
    for (double v : coeffs) {
      if (!std::isfinite(v)) throw Error("PolyT: non-finite coefficient");
    }
  }

  double eval(double t) const {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
    return acc;
  }

  double coeff(std::size_t k) const {
    return k < coeffs.size() ? coeffs[k] : 0.0;
  }

  std::size_t degree_bound() const { return coeffs.size(); }

  bool is_zero(double tol = 0.0) const {
    for (double v : coeffs) {
      if (std::abs(v) > tol) return false;
    }
    return true;
  }

  void set_coeff(std::size_t k, double v) {
    if (k >= coeffs.size()) coeffs.resize(k + 1, 0.0);
    coeffs[k] = v;
  }

  /// Drop trailing zero coefficients.
  void trim() {
    while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
  }
};

inline PolyT operator+(const PolyT& p, const PolyT& q) {
  PolyT r;
  r.coeffs.resize(std::max(p.coeffs.size(), q.coeffs.size()), 0.0);
  for (std::size_t i = 0; i < r.coeffs.size(); ++i)
    r.coeffs[i] = p.coeff(i) + q.coeff(i);
  return r;
}

inline PolyT operator*(double s, const PolyT& p) {
  PolyT r = p;
  for (double& c : r.coeffs) c *= s;
  return r;
}

}  // namespace varjet
