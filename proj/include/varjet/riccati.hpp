#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "varjet/errors.hpp"
#include "varjet/fraclin.hpp"
#include "varjet/identities.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"
#include "varjet/system.hpp"
#include "varjet/varflow.hpp"

namespace varjet {

/// Companion linear system of x' = a + Bx + (c^T x) x: the (n+1)-dimensional
/// coefficient matrix [[B(t), a(t)], [-c^T(t), 0]]. Ratios of its solution
/// components solve the quadratic equation.
inline Mat lift_matrix(const RiccatiCoeffs& rc, double t) {
  const std::size_t n = rc.n;
  Mat l(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) l(i, j) = rc.B[i * n + j].eval(t);
    l(i, n) = rc.a[i].eval(t);
    l(n, i) = -rc.c[i].eval(t);
  }
  return l;
}

struct LiftTrajectory {
  std::vector<double> t;
  std::vector<Mat> Phi;     // (n+1) x (n+1), Phi at the start time is E
  std::vector<double> rho;  // gamma^T xi + delta for the given xi
};

struct FracSolution {
  double tau = 0.0;
  Vec xi;
  LiftTrajectory lift;
  std::vector<FracLin> frac;  // aligned with lift.t
  std::vector<Vec> phi;       // aligned with lift.t
  // Estimated maximal interval around tau with rho bounded away from zero,
  // clipped to the integration window. A flag marks an end that simply hit
  // the window edge (the true interval may extend further).
  double j_lo = 0.0, j_hi = 0.0;
  bool j_lo_at_window = true, j_hi_at_window = true;
};

namespace detail {

inline FracLin fraclin_from_lift(const Mat& phi_mat, std::size_t n) {
  Mat a(n, n);
  Vec beta(n), gamma(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = phi_mat(i, j);
    beta[i] = phi_mat(i, n);
    gamma[i] = phi_mat(n, i);
  }
  return FracLin(std::move(a), std::move(beta), std::move(gamma),
                 phi_mat(n, n));
}

}  // namespace detail

/// Integrates the companion fundamental matrix over [tau, t_end], slices it
/// into fractional linear maps, and evaluates the solution through xi. The
/// denominator rho = gamma^T xi + delta starts at 1; if it reaches zero
/// inside the window the one-sided maximal interval ends there and a
/// pole-crossed error reports the bracketing grid step plus a refined
/// boundary.
inline FracSolution frac_solution(const RiccatiCoeffs& rc, double tau,
                                  const Vec& xi, double t_end,
                                  const IntegratorConfig& cfg) {
  const std::size_t n = rc.n;
  if (xi.size() != n) throw ShapeError("frac_solution: xi has wrong length");
  const std::size_t m = n + 1;

  // The companion system is linear, so the only runaway worth guarding is
  // numeric overflow.
  auto deriv = [&](double t, const Vec& y) {
    const Mat phi_mat = detail::read_block(y, 0, m, m);
    Vec dy(y.size());
    detail::write_block(dy, 0, lift_matrix(rc, t) * phi_mat);
    return dy;
  };
  auto escaped = [](const Vec& y) {
    return !std::all_of(y.begin(), y.end(),
                        [](double v) { return std::isfinite(v); });
  };
  Vec y0(m * m, 0.0);
  detail::write_block(y0, 0, identity(m));
  auto raw = detail::rk4_run(deriv, escaped, tau, std::move(y0), t_end, cfg);

  FracSolution out;
  out.tau = tau;
  out.xi = xi;
  auto rho_of = [&](const Mat& phi_mat) {
    double r = phi_mat(n, n);
    for (std::size_t i = 0; i < n; ++i) r += phi_mat(n, i) * xi[i];
    return r;
  };

  for (std::size_t k = 0; k < raw.size(); ++k) {
    const Mat phi_mat = detail::read_block(raw[k].second, 0, m, m);
    const double rho = rho_of(phi_mat);
    if (std::abs(rho) <= 1e-10) {
      // Grid point essentially on the pole: bracket with the previous one.
      const double lo = k > 0 ? raw[k - 1].first : tau;
      throw PoleCrossedError("solution denominator vanishes in the window",
                             lo, raw[k].first, raw[k].first);
    }
    if (k > 0 && rho * out.lift.rho.front() < 0.0) {
      // Sign change across a step: refine by bisecting the step length.
      const double t0 = raw[k - 1].first;
      const Vec& yprev = raw[k - 1].second;
      const double h_full = raw[k].first - t0;
      double lo = 0.0, hi = std::abs(h_full);
      const double dir = h_full >= 0.0 ? 1.0 : -1.0;
      const double sign0 = out.lift.rho.front() > 0.0 ? 1.0 : -1.0;
      for (int it = 0;
           it < 60 && hi - lo > 1e-13 * (1.0 + std::abs(t0)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const Vec ymid = detail::rk4_step(deriv, t0, yprev, dir * mid);
        const double rmid = rho_of(detail::read_block(ymid, 0, m, m));
        if (rmid * sign0 <= 1e-10)
          hi = mid;
        else
          lo = mid;
      }
      throw PoleCrossedError("solution denominator vanishes in the window",
                             t0, raw[k].first,
                             t0 + dir * 0.5 * (lo + hi));
    }
    FracLin g = detail::fraclin_from_lift(phi_mat, n);
    out.phi.push_back(fraclin_eval(g, xi));
    out.lift.t.push_back(raw[k].first);
    out.lift.Phi.push_back(phi_mat);
    out.lift.rho.push_back(rho);
    out.frac.push_back(std::move(g));
  }
  out.j_lo = std::min(tau, t_end);
  out.j_hi = std::max(tau, t_end);
  out.j_lo_at_window = true;
  out.j_hi_at_window = true;
  return out;
}

/// One probe of the third-order criterion: the largest normalized norm of
///   u3 (x) u1 + u1 (x) u3 - 3 (u2 (x) u2)
/// along a directional trajectory.
struct DetectSample {
  Vec xi, h;
  double window_lo = 0.0, window_hi = 0.0;  // requested window
  double reached = 0.0;                     // end actually integrated to
  bool shrunk = false;                      // window cut back after blow-up
  double worst = 0.0;                       // max normalized lhs norm
};

struct DetectReport {
  bool riccati_consistent = false;
  double max_normalized = 0.0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::vector<DetectSample> samples;
};

/// Sampled check of the pointwise third-order criterion: a quadratic system
/// has the scaled-projection coupling exactly when the combination above
/// vanishes for all initial states and directions. Random (xi, h) pairs over
/// the given windows give a necessary test, not a proof. Blow-up inside a
/// window shrinks that window toward the start and is recorded; it never
/// fails the run.
inline DetectReport detect_flow(const PolySystem& sys, double tau,
                                const std::vector<std::pair<double, double>>&
                                    windows,
                                std::size_t sample_count,
                                const IntegratorConfig& cfg,
                                double tol = 1e-7,
                                std::uint64_t seed = 0x7a11e5ULL) {
  if (sample_count == 0) {
    throw ConfigError("detect_flow: sample_count must be at least 1");
  }
  const std::size_t n = sys.n;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DetectReport rep;
  rep.tol = tol;
  rep.seed = seed;

  for (std::size_t s = 0; s < sample_count; ++s) {
    Vec xi(n), h(n);
    for (double& v : xi) v = box(gen);
    double hn = 0.0;
    do {
      for (double& v : h) v = gauss(gen);
      hn = std::sqrt(dot(h, h));
    } while (hn < 1e-8);
    for (double& v : h) v /= hn;

    for (const auto& [w_lo, w_hi] : windows) {
      DetectSample sample;
      sample.xi = xi;
      sample.h = h;
      sample.window_lo = w_lo;
      sample.window_hi = w_hi;

      // Integrate from tau toward the far window edge; retry on blow-up
      // with the end pulled inside the escape estimate.
      double target = std::abs(w_hi - tau) >= std::abs(w_lo - tau) ? w_hi
                                                                   : w_lo;
      bool done = false;
      for (int attempt = 0; attempt < 4 && !done; ++attempt) {
        try {
          auto traj = integrate_directional(sys, tau, xi, h, target, cfg);
          for (const DirJet3& smp : traj.samples) {
            const double lo = std::min(w_lo, w_hi);
            const double hi = std::max(w_lo, w_hi);
            if (smp.t < lo - 1e-12 || smp.t > hi + 1e-12) continue;
            Vec lhs = kron(smp.u3, smp.u1);
            axpy(1.0, kron(smp.u1, smp.u3), lhs);
            axpy(-3.0, kron(smp.u2, smp.u2), lhs);
            const double scale = norm_inf(kron(smp.u3, smp.u1)) +
                                 norm_inf(kron(smp.u1, smp.u3)) +
                                 3.0 * norm_inf(kron(smp.u2, smp.u2));
            sample.worst = std::max(sample.worst,
                                    norm_inf(lhs) / (1.0 + scale));
          }
          sample.reached = target;
          done = true;
        } catch (const BlowUpError& e) {
          sample.shrunk = true;
          target = tau + 0.8 * (e.t_escape - tau);
        } catch (const IllConditionedFlowError& e) {
          sample.shrunk = true;
          target = tau + 0.8 * (e.t - tau);
        }
      }
      rep.max_normalized = std::max(rep.max_normalized, sample.worst);
      rep.samples.push_back(std::move(sample));
    }
  }
  rep.riccati_consistent = rep.max_normalized <= tol;
  return rep;
}

/// Two-sided numerical check that the companion-matrix solution and the
/// nonlinear flow are the same object:
///  (i) the fractional linear evaluation tracks direct integration of the
///      expanded system;
/// (ii) the directional jets of the nonlinear flow match the differentials
///      of the fractional linear map, which ties the third-order structure
///      to the scalar-multiple identities of the map.
struct RoundTripReport {
  // (i), normalized sup over states and times; (ii), same normalization.
  double flow_residual = 0.0;
  double differential_residual = 0.0;
};

inline RoundTripReport roundtrip_theorem61(const RiccatiCoeffs& rc,
                                           double tau,
                                           const std::vector<Vec>& xi_set,
                                           const std::vector<double>& t_grid,
                                           const IntegratorConfig& cfg) {
  const PolySystem sys = riccati_to_system(rc);
  RoundTripReport rep;
  for (const Vec& xi : xi_set) {
    if (xi.size() != rc.n) {
      throw ShapeError("roundtrip_theorem61: xi has wrong length");
    }
    Vec h = xi;
    if (norm_inf(h) == 0.0) h[0] = 1.0;
    for (double t : t_grid) {
      const FracSolution fs = frac_solution(rc, tau, xi, t, cfg);
      const Vec& phi_frac = fs.phi.back();
      auto jets = integrate_jets(sys, tau, xi, t, cfg);
      const Vec& phi_dir = jets.samples.back().phi;
      rep.flow_residual =
          std::max(rep.flow_residual, norm_inf(vsub(phi_frac, phi_dir)) /
                                          (1.0 + norm_inf(phi_dir)));

      auto dir = integrate_directional(sys, tau, xi, h, t, cfg);
      const DirJet3& end = dir.samples.back();
      const FracLinDiffs d = fraclin_differentials(fs.frac.back(), xi, h);
      const double scale =
          1.0 + norm_inf(end.u1) + norm_inf(end.u2) + norm_inf(end.u3);
      double worst = norm_inf(vsub(end.u1, d.dg));
      worst = std::max(worst, norm_inf(vsub(end.u2, d.d2g)));
      worst = std::max(worst, norm_inf(vsub(end.u3, d.d3g)));
      rep.differential_residual =
          std::max(rep.differential_residual, worst / scale);
    }
  }
  return rep;
}

}  // namespace varjet
