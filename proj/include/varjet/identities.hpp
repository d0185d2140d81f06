#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "varjet/errors.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"
#include "varjet/varflow.hpp"

namespace varjet {

/// Both sides of the third-order flow identity, sampled along a
/// trajectory:
///   lhs = u3 (x) u1 + u1 (x) u3 - 3 (u2 (x) u2)
///   rhs = (Dphi (x) Dphi)(I1 + 3 I2)
/// The prefactor multiplies the sum of both accumulators.
struct AllwrightReport {
  std::vector<double> t;
  std::vector<Vec> lhs, rhs;             // n^2 per sample
  std::vector<double> residual_norm;     // inf-norm of lhs - rhs
  std::vector<double> scale;             // inf-norm of lhs plus inf-norm of rhs
};

inline AllwrightReport allwright_sides(const DirTrajectory& traj) {
  AllwrightReport rep;
  rep.t.reserve(traj.samples.size());
  for (const DirJet3& s : traj.samples) {
    Vec lhs = kron(s.u3, s.u1);
    axpy(1.0, kron(s.u1, s.u3), lhs);
    axpy(-3.0, kron(s.u2, s.u2), lhs);
    Vec sum = s.I1;
    axpy(3.0, s.I2, sum);
    Vec rhs = apply_kron_pair(s.Dphi, sum);
    rep.t.push_back(s.t);
    rep.residual_norm.push_back(norm_inf(vsub(lhs, rhs)));
    rep.scale.push_back(norm_inf(lhs) + norm_inf(rhs));
    rep.lhs.push_back(std::move(lhs));
    rep.rhs.push_back(std::move(rhs));
  }
  return rep;
}

/// Verifies the second-order integral formula along an existing jet
/// trajectory: the accumulator
///   Acc' = Psi D2f (Dphi (x) Dphi),  Acc(tau) = 0
/// is re-integrated on the trajectory's own grid and Dphi Acc is compared
/// against the propagated D2phi. Returns the largest relative residual.
inline double eq8_check(const JetTrajectory& traj, const PolySystem& sys) {
  const std::size_t n = sys.n;
  if (traj.xi.size() != n) throw ShapeError("eq8_check: trajectory/system mismatch");
  if (traj.samples.size() < 2) return 0.0;

  IntegratorConfig cfg;
  cfg.step = std::abs(traj.samples[1].t - traj.samples[0].t);
  const double tau = traj.tau;
  const double t_end = traj.samples.back().t;

  const std::size_t n2 = n * n, n3 = n2 * n;
  const std::size_t off_d = n, off_acc = n + n2;
  Vec y0(n + n2 + n3, 0.0);
  std::copy(traj.xi.begin(), traj.xi.end(), y0.begin());
  detail::write_block(y0, off_d, identity(n));

  auto deriv = [&](double t, const Vec& y) {
    const Vec phi(y.begin(), y.begin() + n);
    const Mat dphi = detail::read_block(y, off_d, n, n);
    Mat psi;
    try {
      psi = lu_solve(dphi, identity(n));
    } catch (const SingularMatrixError& e) {
      throw IllConditionedFlowError(
          "fundamental matrix is numerically singular", t,
          e.condition_estimate);
    }
    const double cond = norm_inf(dphi) * norm_inf(psi);
    if (cond > 1e12) {
      throw IllConditionedFlowError("fundamental matrix condition exceeds 1e12",
                                    t, cond);
    }
    Vec dy(y.size());
    const Vec fval = eval_f(sys, t, phi);
    std::copy(fval.begin(), fval.end(), dy.begin());
    const Mat df = eval_Df(sys, t, phi);
    detail::write_block(dy, off_d, df * dphi);
    const Mat d2f = eval_D2f(sys, t, phi);
    detail::write_block(dy, off_acc, psi * (d2f * kron(dphi, dphi)));
    return dy;
  };
  auto escaped = [&](const Vec& y) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(y[i]) || std::abs(y[i]) > cfg.max_norm) return true;
    }
    return false;
  };
  auto raw = detail::rk4_run(deriv, escaped, tau, std::move(y0), t_end, cfg);
  if (raw.size() != traj.samples.size()) {
    throw Error("eq8_check: regenerated grid does not match the trajectory");
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Vec& y = raw[i].second;
    const Mat dphi = detail::read_block(y, off_d, n, n);
    const Mat acc = detail::read_block(y, off_acc, n, n2);
    const Mat& d2 = traj.samples[i].D2phi;
    const double res = max_abs(d2 - dphi * acc) / (1.0 + max_abs(d2));
    worst = std::max(worst, res);
  }
  return worst;
}

/// Endpoint values of the classical scalar formulas: the first variational
/// quantity as exp of a quadrature, the second by an additional quadrature,
/// and the Schwarzian derivative both from jet values and as the integral
/// of f''' exp(2 int f').
struct ScalarFormulas {
  double phi1 = 0.0;             // phi' via exp-quadrature
  double phi2 = 0.0;             // phi'' via nested quadrature
  double schwarzian_lhs = 0.0;   // from jets: phi'''/phi' - 3/2 (phi''/phi')^2
  double schwarzian_rhs = 0.0;   // quadrature of f''' exp(2 int f')
};

inline ScalarFormulas scalar_formulas(const PolySystem& sys, double tau,
                                      double xi, double t_end,
                                      const IntegratorConfig& cfg) {
  if (sys.n != 1) {
    throw DimensionError("scalar_formulas: system must be one dimensional");
  }
  const JetTrajectory jets =
      integrate_jets(sys, tau, Vec{xi}, t_end, cfg);
  const Jet3& end = jets.samples.back();
  const double p1 = end.Dphi(0, 0);
  const double p2 = end.D2phi(0, 0);
  const double p3 = end.D3phi(0, 0);

  // Quadrature companion: y = (phi, J, K, L) with J' = f', K' = f'' e^J,
  // L' = f''' e^{2J}.
  auto deriv = [&](double t, const Vec& y) {
    const Vec phi{y[0]};
    const double fp = eval_Df(sys, t, phi)(0, 0);
    const double fpp = eval_D2f(sys, t, phi)(0, 0);
    const double fppp = eval_D3f(sys, t)(0, 0);
    const double ej = std::exp(y[1]);
    return Vec{eval_f(sys, t, phi)[0], fp, fpp * ej, fppp * ej * ej};
  };
  auto escaped = [&](const Vec& y) {
    return !std::isfinite(y[0]) || std::abs(y[0]) > cfg.max_norm;
  };
  auto raw = detail::rk4_run(deriv, escaped, tau, Vec{xi, 0.0, 0.0, 0.0},
                             t_end, cfg);
  const Vec& yl = raw.back().second;

  ScalarFormulas out;
  out.phi1 = std::exp(yl[1]);
  out.phi2 = out.phi1 * yl[2];
  out.schwarzian_lhs = p3 / p1 - 1.5 * (p2 / p1) * (p2 / p1);
  out.schwarzian_rhs = yl[3];

  // Algebraic consistency of the two third-order packagings.
  const double combo = 2.0 * p1 * p3 - 3.0 * p2 * p2;
  const double alt = 2.0 * p1 * p1 * out.schwarzian_lhs;
  if (std::abs(combo - alt) > 1e-9 * (1.0 + std::abs(combo))) {
    throw Error("scalar_formulas: inconsistent third-order values");
  }
  return out;
}

}  // namespace varjet
