#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "varjet/fraclin.hpp"
#include "varjet/identities.hpp"

using namespace varjet;
using testutil::comp_squares;
using testutil::max_diff;
using testutil::planar_riccati;
using testutil::random_vec;
using testutil::rotation;
using testutil::scalar_cube;
using testutil::scalar_square;

namespace {

IntegratorConfig fine_cfg() {
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  return cfg;
}

FracLin reciprocal() {
  // g(x) = 1 / (x + 1).
  return FracLin(Mat(1, 1), Vec{1.0}, Vec{1.0}, 1.0);
}

}  // namespace

TEST_CASE("fractional linear evaluation and differentials", "[identities]") {
  FracLin g = reciprocal();
  CHECK(fraclin_eval(g, {0.0}) == Vec{1.0});
  auto d = fraclin_differentials(g, {0.0}, {1.0});
  CHECK(d.dg[0] == Catch::Approx(-1.0));
  CHECK(d.d2g[0] == Catch::Approx(2.0));
  CHECK(d.d3g[0] == Catch::Approx(-6.0));

  // Affine maps have vanishing higher differentials.
  FracLin aff(Mat{{2.0, 0.0}, {1.0, 1.0}}, Vec{0.5, -0.5}, Vec(2, 0.0), 1.0);
  auto da = fraclin_differentials(aff, {0.3, 0.4}, {1.0, -1.0});
  CHECK(norm_inf(da.d2g) == 0.0);
  CHECK(norm_inf(da.d3g) == 0.0);

  CHECK_THROWS_AS(fraclin_eval(g, {-1.0}), PoleError);
  CHECK_THROWS_AS(fraclin_differentials(g, {-1.0}, {1.0}), PoleError);
  CHECK_THROWS_AS(FracLin(Mat(2, 2), Vec(2, 0.0), Vec(2, 0.0), 0.0), Error);
  CHECK_THROWS_AS(FracLin(Mat(2, 2), Vec(1, 0.0), Vec(2, 0.0), 1.0),
                  ShapeError);
}

TEST_CASE("fractional linear differentials match finite differences",
          "[identities]") {
  auto gen = testutil::rng(1212);
  FracLin g(Mat{{0.4, -1.1}, {0.9, 0.3}}, Vec{0.2, -0.7}, Vec{0.5, 0.25},
            1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec x = random_vec(2, gen, -0.4, 0.4);
    const Vec h = random_vec(2, gen);
    auto d = fraclin_differentials(g, x, h);
    auto bump = [&](double s) {
      Vec y = x;
      axpy(s, h, y);
      return fraclin_eval(g, y);
    };

    const double e1 = 1e-6;
    Vec fd1 = vscale(1.0 / (2.0 * e1), vsub(bump(e1), bump(-e1)));
    CHECK(max_diff(fd1, d.dg) < 1e-5 * (1.0 + norm_inf(d.dg)));

    const double e2 = 1e-4;
    Vec fd2 = bump(e2);
    axpy(-2.0, bump(0.0), fd2);
    axpy(1.0, bump(-e2), fd2);
    fd2 = vscale(1.0 / (e2 * e2), fd2);
    CHECK(max_diff(fd2, d.d2g) < 1e-5 * (1.0 + norm_inf(d.d2g)));

    const double e3 = 1e-3;
    Vec fd3 = bump(2.0 * e3);
    axpy(-2.0, bump(e3), fd3);
    axpy(2.0, bump(-e3), fd3);
    axpy(-1.0, bump(-2.0 * e3), fd3);
    fd3 = vscale(1.0 / (2.0 * e3 * e3 * e3), fd3);
    CHECK(max_diff(fd3, d.d3g) < 1e-5 * (1.0 + norm_inf(d.d3g)));
  }
}

TEST_CASE("fourth-degree residual vanishes for fractional linear maps",
          "[identities]") {
  auto gen = testutil::rng(1313);
  FracLin g(Mat{{0.4, -1.1}, {0.9, 0.3}}, Vec{0.2, -0.7}, Vec{0.5, 0.25},
            1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const Vec x = random_vec(2, gen);
    if (std::abs(dot(g.gamma, x) + g.delta) < 0.1) continue;
    auto d = fraclin_differentials(g, x, x);
    const double scale =
        norm_inf(kron(d.dg, d.d3g)) + 1.5 * norm_inf(kron(d.d2g, d.d2g));
    CHECK(norm_inf(remark2_residual(g, x)) <= 1e-9 * (1.0 + scale));
  }

  FracLin aff(Mat{{1.0, 0.5}, {0.0, 2.0}}, Vec{0.1, 0.2}, Vec(2, 0.0), 1.0);
  CHECK(norm_inf(remark2_residual(aff, {1.0, 1.0})) == 0.0);
}

TEST_CASE("perturbing a fractional linear map breaks the residual",
          "[identities]") {
  // g~(x) = g(x) + x1^2 e_1 with h = x: the differentials shift by
  // 2 x1 h1 e_1, 2 h1^2 e_1 and 0.
  FracLin g(Mat{{0.4, -1.1}, {0.9, 0.3}}, Vec{0.2, -0.7}, Vec{0.5, 0.25},
            1.0);
  const Vec x{1.0, 1.0};
  auto d = fraclin_differentials(g, x, x);
  Vec dg = d.dg, d2g = d.d2g;
  dg[0] += 2.0 * x[0] * x[0];
  d2g[0] += 2.0 * x[0] * x[0];
  Vec res = kron(dg, d.d3g);
  axpy(-1.5, kron(d2g, d2g), res);
  CHECK(norm_inf(res) > 1e-3);
}

TEST_CASE("third-order identity on a linear system", "[identities]") {
  auto traj = integrate_directional(rotation(), 0.0, {1.0, 0.5}, {0.3, -0.2},
                                    0.5, fine_cfg());
  auto rep = allwright_sides(traj);
  REQUIRE(rep.t.size() == traj.samples.size());
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    CHECK(rep.residual_norm[i] == 0.0);
    CHECK(rep.scale[i] == 0.0);
  }
}

TEST_CASE("third-order identity on a planar Riccati flow", "[identities]") {
  PolySystem sys = riccati_to_system(planar_riccati());
  auto traj = integrate_directional(sys, 0.0, {0.1, 0.2}, {1.0, 1.0}, 0.5,
                                    fine_cfg());
  auto rep = allwright_sides(traj);
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    worst = std::max(worst,
                     rep.residual_norm[i] / (1.0 + rep.scale[i]));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("third-order identity on a non-Riccati quadratic system",
          "[identities]") {
  PolySystem sys = comp_squares();
  const Vec xi{0.1, 0.2};
  const Vec h{1.0, 1.0};
  IntegratorConfig cfg = fine_cfg();
  auto traj = integrate_directional(sys, 0.0, xi, h, 0.5, cfg);
  auto rep = allwright_sides(traj);

  // Independent oracle for the left side: contract finite-difference
  // derivative tensors with h. Agreement is coarse (third differences).
  auto fd = fd_jets(sys, 0.0, xi, 0.5, cfg, 1e-6);
  Vec u1 = fd.Dphi * h;
  Vec u2 = fd.D2phi * kron(h, h);
  Vec u3 = fd.D3phi * kron_pow(h, 3);
  Vec lhs_fd = kron(u3, u1);
  axpy(1.0, kron(u1, u3), lhs_fd);
  axpy(-3.0, kron(u2, u2), lhs_fd);
  CHECK(max_diff(lhs_fd, rep.lhs.back()) <
        0.05 * (1.0 + norm_inf(rep.lhs.back())));

  double worst = 0.0, max_scale = 0.0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    worst = std::max(worst, rep.residual_norm[i] / (1.0 + rep.scale[i]));
    max_scale = std::max(max_scale, rep.scale[i]);
  }
  CHECK(worst <= 1e-6);
  CHECK(max_scale > 1e-4);  // identity holds with genuinely active sides
}

TEST_CASE("third-order identity reduces to the scalar formula", "[identities]") {
  PolySystem sys = scalar_cube();
  auto traj = integrate_directional(sys, 0.0, {0.5}, {1.0}, 0.4, fine_cfg());
  auto rep = allwright_sides(traj);
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    worst = std::max(worst, rep.residual_norm[i] / (1.0 + rep.scale[i]));
    // Scalars Kronecker-commute, so the commutator integral stays zero.
    CHECK(norm_inf(traj.samples[i].I2) < 1e-14);
  }
  CHECK(worst <= 1e-6);

  // With h = 1 the left side is the classical combination of the scalar
  // variational values.
  auto jets = integrate_jets(sys, 0.0, {0.5}, 0.4, fine_cfg());
  const Jet3& j = jets.samples.back();
  const double s = 2.0 * j.Dphi(0, 0) * j.D3phi(0, 0) -
                   3.0 * j.D2phi(0, 0) * j.D2phi(0, 0);
  CHECK(rep.lhs.back()[0] == Catch::Approx(s).epsilon(1e-8));
}

TEST_CASE("second-order integral formula residuals", "[identities]") {
  IntegratorConfig cfg = fine_cfg();

  auto lin = integrate_jets(rotation(), 0.0, {1.0, 0.0}, 0.8, cfg);
  CHECK(eq8_check(lin, rotation()) == 0.0);

  auto sq = integrate_jets(scalar_square(), 0.0, {1.0}, 0.5, cfg);
  CHECK(eq8_check(sq, scalar_square()) <= 1e-7);

  PolySystem ric = riccati_to_system(planar_riccati());
  auto rt = integrate_jets(ric, 0.0, {0.1, 0.2}, 0.5, cfg);
  CHECK(eq8_check(rt, ric) <= 1e-7);

  PolySystem dense = testutil::dense_sys();
  auto dt = integrate_jets(dense, 0.0, {0.3, -0.2}, 0.5, cfg);
  CHECK(eq8_check(dt, dense) <= 1e-6);
}

TEST_CASE("scalar formulas on the linear flow", "[identities]") {
  auto out = scalar_formulas(testutil::scalar_linear(), 0.0, 2.0, 1.0,
                             fine_cfg());
  CHECK(out.phi1 == Catch::Approx(std::exp(1.0)).epsilon(1e-8));
  CHECK(out.schwarzian_lhs == 0.0);
  CHECK(out.schwarzian_rhs == 0.0);
}

TEST_CASE("scalar formulas on the quadratic flow", "[identities]") {
  // phi = 1/(1-t) family at xi=1: phi' = (1-t)^-2, phi'' = 2t(1-t)^-3.
  auto out = scalar_formulas(scalar_square(), 0.0, 1.0, 0.5, fine_cfg());
  CHECK(out.phi1 == Catch::Approx(4.0).epsilon(1e-8));
  CHECK(out.phi2 == Catch::Approx(8.0).epsilon(1e-8));
  CHECK(std::abs(out.schwarzian_lhs) < 1e-9);
  CHECK(std::abs(out.schwarzian_rhs) < 1e-9);
}

TEST_CASE("scalar formulas on the cubic flow", "[identities]") {
  auto out = scalar_formulas(scalar_cube(), 0.0, 0.5, 0.4, fine_cfg());
  CHECK(out.schwarzian_lhs != 0.0);
  CHECK(out.schwarzian_lhs ==
        Catch::Approx(out.schwarzian_rhs).epsilon(1e-6));
  CHECK_THROWS_AS(scalar_formulas(rotation(), 0.0, 1.0, 0.5, fine_cfg()),
                  DimensionError);
}
