#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varjet/errors.hpp"
#include "varjet/kron.hpp"
#include "varjet/mat.hpp"
#include "varjet/system.hpp"

namespace varjet {

struct IntegratorConfig {
  double step = 1e-3;      // fixed step per unit time
  double max_norm = 1e8;   // blow-up guard on the state norm
  bool richardson = false; // extra half-step pass, defect stored on the
                           // trajectory
};

/// Flow value and its first three derivative tensors with respect to the
/// initial state, at one time.
struct Jet3 {
  double t = 0.0;
  Vec phi;     // n
  Mat Dphi;    // n x n
  Mat D2phi;   // n x n^2
  Mat D3phi;   // n x n^3
};

struct JetTrajectory {
  double tau = 0.0;
  Vec xi;
  std::vector<Jet3> samples;  // every accepted step, endpoints included
  std::optional<double> richardson_defect;
};

/// Directional jet along a fixed direction h, plus the two running
/// integrals that rebuild the third-order combination without ever forming
/// the n x n^3 tensors.
struct DirJet3 {
  double t = 0.0;
  Vec phi;      // n
  Vec u1, u2, u3;  // directional differentials of order 1..3
  Mat Dphi;     // n x n
  Vec I1, I2;   // n^2 accumulators
};

struct DirTrajectory {
  double tau = 0.0;
  Vec xi, h;
  std::vector<DirJet3> samples;
  std::optional<double> richardson_defect;
};

namespace detail {

inline void check_config(const IntegratorConfig& cfg, double tau,
                         double t_end) {
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) {
    throw ConfigError("integrator step must be positive");
  }
  if (!std::isfinite(tau) || !std::isfinite(t_end)) {
    throw ConfigError("integration endpoints must be finite");
  }
}

inline Mat read_block(const Vec& y, std::size_t off, std::size_t r,
                      std::size_t c) {
  Mat m(r, c);
  std::copy(y.begin() + off, y.begin() + off + r * c, m.entries.begin());
  return m;
}

inline void write_block(Vec& y, std::size_t off, const Mat& m) {
  std::copy(m.entries.begin(), m.entries.end(), y.begin() + off);
}

template <typename Deriv>
Vec rk4_step(Deriv& deriv, double t, const Vec& y, double h) {
  const Vec k1 = deriv(t, y);
  Vec y2 = y;
  axpy(0.5 * h, k1, y2);
  const Vec k2 = deriv(t + 0.5 * h, y2);
  Vec y3 = y;
  axpy(0.5 * h, k2, y3);
  const Vec k3 = deriv(t + 0.5 * h, y3);
  Vec y4 = y;
  axpy(h, k3, y4);
  const Vec k4 = deriv(t + h, y4);
  Vec out = y;
  axpy(h / 6.0, k1, out);
  axpy(h / 3.0, k2, out);
  axpy(h / 3.0, k3, out);
  axpy(h / 6.0, k4, out);
  return out;
}

/// Fixed-step 4th-order run from tau to t_end (either direction), sampling
/// every accepted step. `escaped` is tested after each step; on escape the
/// final step is bisected to bracket the escape time.
template <typename Deriv, typename Escaped>
std::vector<std::pair<double, Vec>> rk4_run(Deriv&& deriv, Escaped&& escaped,
                                            double tau, Vec y0, double t_end,
                                            const IntegratorConfig& cfg) {
  check_config(cfg, tau, t_end);
  if (escaped(y0)) {
    throw BlowUpError("state escapes the guard at the initial time", tau, tau,
                      tau);
  }
  std::vector<std::pair<double, Vec>> out;
  out.emplace_back(tau, y0);
  const double span = t_end - tau;
  if (span == 0.0) return out;
  const double dir = span > 0.0 ? 1.0 : -1.0;
  const double total = std::abs(span);
  const auto full = static_cast<std::size_t>(total / cfg.step);

  auto advance = [&](double t, const Vec& y, double h) {
    Vec next = rk4_step(deriv, t, y, h);
    if (escaped(next)) {
      // Bisect the step length to localize the escape.
      double lo = 0.0, hi = std::abs(h);
      for (int it = 0; it < 60 && hi - lo > 1e-13 * (1.0 + std::abs(t));
           ++it) {
        const double mid = 0.5 * (lo + hi);
        if (escaped(rk4_step(deriv, t, y, dir * mid)))
          hi = mid;
        else
          lo = mid;
      }
      throw BlowUpError("state norm exceeds the blow-up guard",
                        t + dir * 0.5 * (lo + hi), t + dir * lo, t + dir * hi);
    }
    return next;
  };

  Vec y = std::move(y0);
  double t = tau;
  for (std::size_t k = 0; k < full; ++k) {
    y = advance(t, y, dir * cfg.step);
    t = tau + static_cast<double>(k + 1) * dir * cfg.step;
    out.emplace_back(t, y);
  }
  const double rem = t_end - t;
  if (std::abs(rem) > 1e-12 * (1.0 + std::abs(t_end))) {
    y = advance(t, y, rem);
    out.emplace_back(t_end, y);
  } else if (out.size() == 1) {
    out.emplace_back(t_end, y);  // degenerate span below one part in 1e12
  } else {
    out.back().first = t_end;    // absorb roundoff in the last grid point
  }
  return out;
}

}  // namespace detail

/// Propagates the flow together with its first three derivative tensors:
///   phi'   = f
///   Dphi'  = Df Dphi
///   D2phi' = Df D2phi + D2f (Dphi (x) Dphi)
///   D3phi' = Df D3phi + D2f (Dphi (x) D2phi)
///          + D2f (Dphi * D2phi + D2phi (x) Dphi) + D3f (Dphi)^{(x) 3}
/// starting from Dphi = E, D2phi = D3phi = 0 at tau.
inline JetTrajectory integrate_jets(const PolySystem& sys, double tau,
                                    const Vec& xi, double t_end,
                                    const IntegratorConfig& cfg) {
  const std::size_t n = sys.n;
  if (xi.size() != n) throw ShapeError("integrate_jets: xi has wrong length");
  const std::size_t n2 = n * n, n3 = n2 * n, n4 = n3 * n;
  const std::size_t off_d = n, off_d2 = n + n2, off_d3 = n + n2 + n3;

  Vec y0(n + n2 + n3 + n4, 0.0);
  std::copy(xi.begin(), xi.end(), y0.begin());
  detail::write_block(y0, off_d, identity(n));

  auto deriv = [&](double t, const Vec& y) {
    const Vec phi(y.begin(), y.begin() + n);
    const Mat dphi = detail::read_block(y, off_d, n, n);
    const Mat d2phi = detail::read_block(y, off_d2, n, n2);
    const Mat d3phi = detail::read_block(y, off_d3, n, n3);

    const Mat df = eval_Df(sys, t, phi);
    const Mat d2f = eval_D2f(sys, t, phi);
    const Mat d3f = eval_D3f(sys, t);

    Vec dy(y.size());
    const Vec fval = eval_f(sys, t, phi);
    std::copy(fval.begin(), fval.end(), dy.begin());
    detail::write_block(dy, off_d, df * dphi);
    detail::write_block(dy, off_d2, df * d2phi + d2f * kron(dphi, dphi));
    const Mat mixed =
        kron(dphi, d2phi) + star(dphi, d2phi, n) + kron(d2phi, dphi);
    detail::write_block(
        dy, off_d3,
        df * d3phi + d2f * mixed + d3f * kron(kron(dphi, dphi), dphi));
    return dy;
  };
  auto escaped = [&](const Vec& y) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(y[i]) || std::abs(y[i]) > cfg.max_norm) return true;
    }
    return !std::all_of(y.begin(), y.end(),
                        [](double v) { return std::isfinite(v); });
  };

  auto raw = detail::rk4_run(deriv, escaped, tau, std::move(y0), t_end, cfg);
  JetTrajectory traj;
  traj.tau = tau;
  traj.xi = xi;
  traj.samples.reserve(raw.size());
  for (const auto& [t, y] : raw) {
    Jet3 jet;
    jet.t = t;
    jet.phi.assign(y.begin(), y.begin() + n);
    jet.Dphi = detail::read_block(y, off_d, n, n);
    jet.D2phi = detail::read_block(y, off_d2, n, n2);
    jet.D3phi = detail::read_block(y, off_d3, n, n3);
    traj.samples.push_back(std::move(jet));
  }
  if (cfg.richardson) {
    IntegratorConfig half = cfg;
    half.step = 0.5 * cfg.step;
    half.richardson = false;
    const JetTrajectory fine = integrate_jets(sys, tau, xi, t_end, half);
    const Jet3& a = traj.samples.back();
    const Jet3& b = fine.samples.back();
    double d = norm_inf(vsub(a.phi, b.phi));
    d = std::max(d, max_abs(a.Dphi - b.Dphi));
    d = std::max(d, max_abs(a.D2phi - b.D2phi));
    d = std::max(d, max_abs(a.D3phi - b.D3phi));
    traj.richardson_defect = d;
  }
  return traj;
}

/// Propagates directional jets along h plus the two accumulators
///   I1' = (Psi (x) Psi)(D3f (x) E + E (x) D3f) u1^{(x) 4}
///   I2' = (Psi (x) Psi)(D2f (x) E - E (x) D2f)
///         (u2 (x) u1 (x) u1 - u1 (x) u1 (x) u2)
/// with Psi = Dphi^{-1} computed fresh at every stage. The Kronecker factors
/// are never formed; the integrands reduce to rank-structured pieces fed
/// through apply_kron_inv_pair.
inline DirTrajectory integrate_directional(const PolySystem& sys, double tau,
                                           const Vec& xi, const Vec& h,
                                           double t_end,
                                           const IntegratorConfig& cfg) {
  const std::size_t n = sys.n;
  if (xi.size() != n || h.size() != n) {
    throw ShapeError("integrate_directional: xi or h has wrong length");
  }
  const std::size_t n2 = n * n;
  const std::size_t off_d = n;         // Dphi
  const std::size_t off_u1 = n + n2;
  const std::size_t off_u2 = off_u1 + n;
  const std::size_t off_u3 = off_u2 + n;
  const std::size_t off_i1 = off_u3 + n;
  const std::size_t off_i2 = off_i1 + n2;

  Vec y0(off_i2 + n2, 0.0);
  std::copy(xi.begin(), xi.end(), y0.begin());
  detail::write_block(y0, off_d, identity(n));
  std::copy(h.begin(), h.end(), y0.begin() + off_u1);

  auto deriv = [&](double t, const Vec& y) {
    const Vec phi(y.begin(), y.begin() + n);
    const Mat dphi = detail::read_block(y, off_d, n, n);
    const Vec u1(y.begin() + off_u1, y.begin() + off_u1 + n);
    const Vec u2(y.begin() + off_u2, y.begin() + off_u2 + n);
    const Vec u3(y.begin() + off_u3, y.begin() + off_u3 + n);

    const Mat df = eval_Df(sys, t, phi);
    const Mat d2f = eval_D2f(sys, t, phi);
    const Mat d3f = eval_D3f(sys, t);

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
    detail::write_block(dy, off_d, df * dphi);

    const Vec du1 = df * u1;
    Vec du2 = df * u2;
    axpy(1.0, d2f * kron(u1, u1), du2);
    Vec du3 = df * u3;
    axpy(3.0, d2f * kron(u2, u1), du3);
    const Vec w = d3f * kron_pow(u1, 3);
    axpy(1.0, w, du3);
    std::copy(du1.begin(), du1.end(), dy.begin() + off_u1);
    std::copy(du2.begin(), du2.end(), dy.begin() + off_u2);
    std::copy(du3.begin(), du3.end(), dy.begin() + off_u3);

    // (D3f (x) E + E (x) D3f) u1^4 = w (x) u1 + u1 (x) w.
    const Vec i1_core = vadd(kron(w, u1), kron(u1, w));
    Vec i1 = apply_kron_inv_pair(psi, i1_core);
    std::copy(i1.begin(), i1.end(), dy.begin() + off_i1);

    // (D2f (x) E - E (x) D2f)(u2 (x) u1 (x) u1 - u1 (x) u1 (x) u2)
    // expands into four rank-structured terms.
    const Vec v21 = d2f * kron(u2, u1);
    const Vec v11 = d2f * kron(u1, u1);
    const Vec v12 = d2f * kron(u1, u2);
    Vec i2_core = kron(v21, u1);
    axpy(-1.0, kron(v11, u2), i2_core);
    axpy(-1.0, kron(u2, v11), i2_core);
    axpy(1.0, kron(u1, v12), i2_core);
    Vec i2 = apply_kron_inv_pair(psi, i2_core);
    std::copy(i2.begin(), i2.end(), dy.begin() + off_i2);
    return dy;
  };
  auto escaped = [&](const Vec& y) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(y[i]) || std::abs(y[i]) > cfg.max_norm) return true;
    }
    return !std::all_of(y.begin(), y.end(),
                        [](double v) { return std::isfinite(v); });
  };

  auto raw = detail::rk4_run(deriv, escaped, tau, std::move(y0), t_end, cfg);
  DirTrajectory traj;
  traj.tau = tau;
  traj.xi = xi;
  traj.h = h;
  traj.samples.reserve(raw.size());
  for (const auto& [t, y] : raw) {
    DirJet3 s;
    s.t = t;
    s.phi.assign(y.begin(), y.begin() + n);
    s.Dphi = detail::read_block(y, off_d, n, n);
    s.u1.assign(y.begin() + off_u1, y.begin() + off_u1 + n);
    s.u2.assign(y.begin() + off_u2, y.begin() + off_u2 + n);
    s.u3.assign(y.begin() + off_u3, y.begin() + off_u3 + n);
    s.I1.assign(y.begin() + off_i1, y.begin() + off_i1 + n2);
    s.I2.assign(y.begin() + off_i2, y.begin() + off_i2 + n2);
    traj.samples.push_back(std::move(s));
  }
  if (cfg.richardson) {
    IntegratorConfig half = cfg;
    half.step = 0.5 * cfg.step;
    half.richardson = false;
    const DirTrajectory fine =
        integrate_directional(sys, tau, xi, h, t_end, half);
    const DirJet3& a = traj.samples.back();
    const DirJet3& b = fine.samples.back();
    double d = norm_inf(vsub(a.phi, b.phi));
    d = std::max(d, norm_inf(vsub(a.u1, b.u1)));
    d = std::max(d, norm_inf(vsub(a.u2, b.u2)));
    d = std::max(d, norm_inf(vsub(a.u3, b.u3)));
    d = std::max(d, norm_inf(vsub(a.I1, b.I1)));
    d = std::max(d, norm_inf(vsub(a.I2, b.I2)));
    d = std::max(d, max_abs(a.Dphi - b.Dphi));
    traj.richardson_defect = d;
  }
  return traj;
}

struct FdJets {
  Mat Dphi;   // n x n
  Mat D2phi;  // n x n^2
  Mat D3phi;  // n x n^3
};

/// Independent derivative estimates: central finite differences of the flow
/// map xi -> phi(t_end, tau, xi), each stencil point integrated separately
/// with the plain state-only integrator. Step sizes widen with the
/// derivative order to balance truncation against cancellation.
inline FdJets fd_jets(const PolySystem& sys, double tau, const Vec& xi,
                      double t_end, const IntegratorConfig& cfg, double eps) {
  const std::size_t n = sys.n;
  if (xi.size() != n) throw ShapeError("fd_jets: xi has wrong length");
  if (!(eps > 0.0)) throw ConfigError("fd_jets: eps must be positive");

  auto flow = [&](const Vec& y0) {
    auto deriv = [&](double t, const Vec& y) { return eval_f(sys, t, y); };
    auto escaped = [&](const Vec& y) {
      for (double v : y) {
        if (!std::isfinite(v) || std::abs(v) > cfg.max_norm) return true;
      }
      return false;
    };
    return detail::rk4_run(deriv, escaped, tau, y0, t_end, cfg).back().second;
  };
  auto at = [&](std::initializer_list<std::pair<std::size_t, double>> bumps) {
    Vec y = xi;
    for (auto [j, dv] : bumps) y[j] += dv;
    return flow(y);
  };

  FdJets out{Mat(n, n), Mat(n, n * n), Mat(n, n * n * n)};
  const double h1 = eps;
  for (std::size_t j = 0; j < n; ++j) {
    const Vec d =
        vscale(1.0 / (2.0 * h1), vsub(at({{j, h1}}), at({{j, -h1}})));
    for (std::size_t i = 0; i < n; ++i) out.Dphi(i, j) = d[i];
  }
  const double h2 = std::pow(eps, 2.0 / 3.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      Vec acc(n, 0.0);
      for (int sj : {1, -1}) {
        for (int sk : {1, -1}) {
          axpy(sj * sk / (4.0 * h2 * h2), at({{j, sj * h2}, {k, sk * h2}}),
               acc);
        }
      }
      for (std::size_t i = 0; i < n; ++i) out.D2phi(i, j * n + k) = acc[i];
    }
  }
  const double h3 = std::sqrt(eps);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        Vec acc(n, 0.0);
        for (int sj : {1, -1}) {
          for (int sk : {1, -1}) {
            for (int sl : {1, -1}) {
              axpy(sj * sk * sl / (8.0 * h3 * h3 * h3),
                   at({{j, sj * h3}, {k, sk * h3}, {l, sl * h3}}), acc);
            }
          }
        }
        for (std::size_t i = 0; i < n; ++i)
          out.D3phi(i, (j * n + k) * n + l) = acc[i];
      }
    }
  }
  return out;
}

}  // namespace varjet
