#include <cmath>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "varjet/identities.hpp"
#include "varjet/riccati.hpp"
#include "varjet/system.hpp"
#include "varjet/varflow.hpp"

using namespace varjet;

namespace {

// Scalar x' = x^2, i.e. a=0, B=0, c=1. Closed forms: Phi(t,0)=[[1,0],[-t,1]],
// phi = xi/(1 - xi t), pole of the xi=1 solution at t=1.
RiccatiCoeffs scalar_square_rc() {
  return RiccatiCoeffs(1, PolyMat{PolyT{}}, PolyMat{PolyT{}},
                       PolyMat{PolyT{1.0}});
}

// Linear system x' = a + Bx written as a Riccati with c = 0.
RiccatiCoeffs linear_rc() {
  return RiccatiCoeffs(2, PolyMat{PolyT{0.1}, PolyT{-0.3}},
                       PolyMat{PolyT{}, PolyT{1.0}, PolyT{-1.0}, PolyT{}},
                       PolyMat{PolyT{}, PolyT{}});
}

// Time-varying planar coefficients for the entrywise lift oracle.
RiccatiCoeffs varying_rc() {
  return RiccatiCoeffs(
      2, PolyMat{PolyT{0.5, -1.0}, PolyT{0.0, 0.25}},
      PolyMat{PolyT{1.0, 2.0}, PolyT{0.0, -0.5}, PolyT{3.0}, PolyT{}},
      PolyMat{PolyT{-1.0, 1.0}, PolyT{2.0}});
}

}  // namespace

TEST_CASE("lift matrix assembles coefficient blocks", "[riccati]") {
  SECTION("scalar square system") {
    const Mat l = lift_matrix(scalar_square_rc(), 0.7);
    CHECK(l.rows == 2);
    CHECK(l(0, 0) == 0.0);
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == -1.0);
    CHECK(l(1, 1) == 0.0);
  }
  SECTION("zero coupling makes the lift block upper-triangular") {
    const Mat l = lift_matrix(linear_rc(), 0.3);
    CHECK(l(2, 0) == 0.0);
    CHECK(l(2, 1) == 0.0);
    CHECK(l(2, 2) == 0.0);
    CHECK(l(0, 2) == 0.1);
    CHECK(l(1, 2) == -0.3);
  }
  SECTION("time-varying entries evaluated per call") {
    const RiccatiCoeffs rc = varying_rc();
    for (double t : {0.0, 1.0}) {
      const Mat l = lift_matrix(rc, t);
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          CHECK(l(i, j) == rc.B[i * 2 + j].eval(t));
        }
        CHECK(l(i, 2) == rc.a[i].eval(t));
        CHECK(l(2, i) == -rc.c[i].eval(t));
      }
      CHECK(l(2, 2) == 0.0);
    }
  }
}

TEST_CASE("fractional linear solution matches scalar closed form",
          "[riccati]") {
  const RiccatiCoeffs rc = scalar_square_rc();
  IntegratorConfig cfg;

  SECTION("fundamental matrix and solution values") {
    const FracSolution fs = frac_solution(rc, 0.0, {0.5}, 0.8, cfg);
    const Mat& end = fs.lift.Phi.back();
    const double t = fs.lift.t.back();
    CHECK(t == Catch::Approx(0.8).margin(1e-12));
    CHECK(end(0, 0) == Catch::Approx(1.0).margin(1e-10));
    CHECK(end(0, 1) == Catch::Approx(0.0).margin(1e-10));
    CHECK(end(1, 0) == Catch::Approx(-t).margin(1e-10));
    CHECK(end(1, 1) == Catch::Approx(1.0).margin(1e-10));
    for (std::size_t k = 0; k < fs.lift.t.size(); ++k) {
      const double tk = fs.lift.t[k];
      CHECK(fs.phi[k][0] ==
            Catch::Approx(0.5 / (1.0 - 0.5 * tk)).epsilon(1e-9));
      CHECK(fs.lift.rho[k] == Catch::Approx(1.0 - 0.5 * tk).margin(1e-10));
    }
  }

  SECTION("initial sample is exact") {
    const FracSolution fs = frac_solution(rc, 0.25, {0.5}, 0.75, cfg);
    CHECK(fs.lift.rho.front() == 1.0);
    CHECK(fs.phi.front()[0] == 0.5);
    CHECK(testutil::max_diff(fs.lift.Phi.front(), identity(2)) == 0.0);
  }

  SECTION("pole of the xi=1 solution is located near t=1") {
    bool crossed = false;
    try {
      frac_solution(rc, 0.0, {1.0}, 1.2, cfg);
    } catch (const PoleCrossedError& e) {
      crossed = true;
      CHECK(e.boundary == Catch::Approx(1.0).margin(2.0 * cfg.step));
      CHECK(e.bracket_lo < e.boundary);
      CHECK(e.bracket_hi >= e.boundary);
      CHECK(e.bracket_hi - e.bracket_lo <= cfg.step * 1.0001);
    }
    CHECK(crossed);
  }

  SECTION("window short of the pole is returned in full") {
    const FracSolution fs = frac_solution(rc, 0.0, {1.0}, 0.9, cfg);
    CHECK(fs.j_lo == 0.0);
    CHECK(fs.j_hi == 0.9);
    CHECK(fs.j_hi_at_window);
    CHECK(fs.phi.back()[0] == Catch::Approx(1.0 / (1.0 - 0.9)).epsilon(1e-8));
  }
}

TEST_CASE("zero coupling gives an affine solution map", "[riccati]") {
  const RiccatiCoeffs rc = linear_rc();
  IntegratorConfig cfg;
  const FracSolution fs = frac_solution(rc, 0.0, {0.4, -0.2}, 0.7, cfg);
  for (std::size_t k = 0; k < fs.frac.size(); ++k) {
    CHECK(fs.frac[k].delta == 1.0);
    CHECK(norm_inf(fs.frac[k].gamma) == 0.0);
    CHECK(fs.lift.rho[k] == 1.0);
  }
  // Affine evaluation agrees with direct integration of the expanded system.
  const PolySystem sys = riccati_to_system(rc);
  const auto jets = integrate_jets(sys, 0.0, {0.4, -0.2}, 0.7, cfg);
  CHECK(testutil::max_diff(fs.phi.back(), jets.samples.back().phi) < 1e-12);
}

TEST_CASE("planar solver agrees with direct integration", "[riccati]") {
  IntegratorConfig cfg;
  const RiccatiCoeffs rc = testutil::planar_riccati();
  const PolySystem sys = riccati_to_system(rc);
  const Vec xi = {0.3, -0.4};
  const FracSolution fs = frac_solution(rc, 0.0, xi, 0.6, cfg);
  const auto jets = integrate_jets(sys, 0.0, xi, 0.6, cfg);
  REQUIRE(fs.phi.size() == jets.samples.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < fs.phi.size(); ++k) {
    const double rel = norm_inf(vsub(fs.phi[k], jets.samples[k].phi)) /
                       (1.0 + norm_inf(jets.samples[k].phi));
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("fundamental matrix composes over subintervals", "[riccati]") {
  IntegratorConfig cfg;
  const RiccatiCoeffs rc = varying_rc();
  const Vec xi = {0.1, 0.05};
  const FracSolution whole = frac_solution(rc, 0.0, xi, 0.5, cfg);
  const FracSolution first = frac_solution(rc, 0.0, xi, 0.25, cfg);
  const FracSolution second = frac_solution(rc, 0.25, xi, 0.5, cfg);
  const Mat composed = second.lift.Phi.back() * first.lift.Phi.back();
  const double rel = testutil::max_diff(composed, whole.lift.Phi.back()) /
                     (1.0 + norm_inf(whole.lift.Phi.back()));
  CHECK(rel < 1e-8);
}

TEST_CASE("flow detector accepts expanded quadratic couplings", "[riccati]") {
  IntegratorConfig cfg;
  const std::vector<std::pair<double, double>> windows = {{0.0, 0.3}};

  SECTION("scalar square system") {
    const PolySystem sys = riccati_to_system(scalar_square_rc());
    const DetectReport rep = detect_flow(sys, 0.0, windows, 4, cfg);
    CHECK(rep.riccati_consistent);
    CHECK(rep.max_normalized <= 1e-7);
  }
  SECTION("planar system") {
    const PolySystem sys = riccati_to_system(testutil::planar_riccati());
    const DetectReport rep = detect_flow(sys, 0.0, windows, 4, cfg);
    CHECK(rep.riccati_consistent);
    CHECK(rep.max_normalized <= 1e-7);
  }
}

TEST_CASE("flow detector rejects the planted negatives", "[riccati]") {
  IntegratorConfig cfg;
  const std::vector<std::pair<double, double>> windows = {{0.0, 0.3}};

  SECTION("componentwise squares") {
    const PolySystem sys = testutil::comp_squares();
    // The flow decouples into scalar Riccati components phi_i =
    // xi_i/(1 - xi_i t), so single-component probes satisfy the identity;
    // the violation sits in the cross entries. For h=(1,1) the (0,1) entry
    // of the combination is 6 t^2 (s1-s2)^2 / (s1 s2)^4 with
    // s_i = 1 - xi_i t, nonzero whenever xi_1 != xi_2.
    const Vec xi = {0.5, -0.5};
    const auto traj =
        integrate_directional(sys, 0.0, xi, {1.0, 1.0}, 0.3, cfg);
    const DirJet3& end = traj.samples.back();
    Vec lhs = kron(end.u3, end.u1);
    axpy(1.0, kron(end.u1, end.u3), lhs);
    axpy(-3.0, kron(end.u2, end.u2), lhs);
    const double s1 = 1.0 - xi[0] * end.t;
    const double s2 = 1.0 - xi[1] * end.t;
    const double cross = 6.0 * end.t * end.t * (s1 - s2) * (s1 - s2) /
                         std::pow(s1 * s2, 4);
    CHECK(lhs[1] == Catch::Approx(cross).epsilon(1e-6));
    const double scale = norm_inf(kron(end.u3, end.u1)) +
                         norm_inf(kron(end.u1, end.u3)) +
                         3.0 * norm_inf(kron(end.u2, end.u2));
    CHECK(norm_inf(lhs) / (1.0 + scale) > 1e-3);

    const DetectReport rep = detect_flow(sys, 0.0, windows, 8, cfg);
    CHECK_FALSE(rep.riccati_consistent);
    CHECK(rep.max_normalized > 1e-3);
  }
  SECTION("scalar cubic") {
    const PolySystem sys = testutil::scalar_cube();
    const DetectReport rep = detect_flow(sys, 0.0, windows, 8, cfg);
    CHECK_FALSE(rep.riccati_consistent);
    CHECK(rep.max_normalized > 1e-3);
  }
}

TEST_CASE("detector verdict is seed invariant", "[riccati]") {
  IntegratorConfig cfg;
  const std::vector<std::pair<double, double>> windows = {{0.0, 0.3}};
  const std::vector<std::uint64_t> seeds = {1u, 0xabcdefULL, 20260822u};

  const PolySystem pos = riccati_to_system(testutil::planar_riccati());
  const PolySystem neg1 = testutil::comp_squares();
  const PolySystem neg2 = testutil::scalar_cube();
  for (std::uint64_t seed : seeds) {
    CHECK(detect_flow(pos, 0.0, windows, 4, cfg, 1e-7, seed)
              .riccati_consistent);
    CHECK_FALSE(detect_flow(neg1, 0.0, windows, 4, cfg, 1e-7, seed)
                    .riccati_consistent);
    CHECK_FALSE(detect_flow(neg2, 0.0, windows, 4, cfg, 1e-7, seed)
                    .riccati_consistent);
  }
}

TEST_CASE("structural and flow detections agree on fixtures", "[riccati]") {
  IntegratorConfig cfg;
  const std::vector<std::pair<double, double>> windows = {{0.0, 0.3}};

  const PolySystem pos = riccati_to_system(testutil::planar_riccati());
  CHECK(system_to_riccati(pos).has_value());
  CHECK(detect_flow(pos, 0.0, windows, 4, cfg).riccati_consistent);

  for (const PolySystem& neg :
       {testutil::comp_squares(), testutil::scalar_cube()}) {
    CHECK_FALSE(system_to_riccati(neg).has_value());
    CHECK_FALSE(detect_flow(neg, 0.0, windows, 4, cfg).riccati_consistent);
  }
}

TEST_CASE("detector shrinks a window on blow-up instead of failing",
          "[riccati]") {
  IntegratorConfig cfg;
  // Every solution of x' = x^2 starting in (0, 1] escapes before t = 11,
  // and xi near 1 escapes inside the window below.
  const PolySystem sys = riccati_to_system(scalar_square_rc());
  const std::vector<std::pair<double, double>> windows = {{0.0, 3.0}};
  const DetectReport rep = detect_flow(sys, 0.0, windows, 8, cfg);
  bool any_shrunk = false;
  for (const DetectSample& s : rep.samples) any_shrunk |= s.shrunk;
  CHECK(any_shrunk);
  CHECK(rep.riccati_consistent);
}

TEST_CASE("round trip through the companion solution", "[riccati]") {
  IntegratorConfig cfg;

  SECTION("scalar square system") {
    const RiccatiCoeffs rc = scalar_square_rc();
    const RoundTripReport rep =
        roundtrip_theorem61(rc, 0.0, {{0.5}, {-0.8}}, {0.3, 0.6}, cfg);
    CHECK(rep.flow_residual <= 1e-8);
    CHECK(rep.differential_residual <= 1e-8);
  }
  SECTION("linear system is reproduced to integrator accuracy") {
    const RoundTripReport rep = roundtrip_theorem61(
        linear_rc(), 0.0, {{0.4, -0.2}, {0.0, 0.0}}, {0.35, 0.7}, cfg);
    CHECK(rep.flow_residual <= 1e-12);
    CHECK(rep.differential_residual <= 1e-12);
  }
  SECTION("planar system") {
    const RoundTripReport rep = roundtrip_theorem61(
        testutil::planar_riccati(), 0.0, {{0.3, -0.4}, {-0.2, 0.1}},
        {0.3, 0.6}, cfg);
    CHECK(rep.flow_residual <= 1e-6);
    CHECK(rep.differential_residual <= 1e-6);
  }
}
