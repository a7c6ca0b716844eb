#include <doctest.h>

#include <cmath>
#include <sstream>

#include "concentra/ansatz.hpp"

using namespace concentra;

namespace {

// closed-form 1D ground state ((p+1)/2)^(1/(p-1)) sech^(2/(p-1))((p-1) r / 2)
double exact_1d(double p, double r) {
  return std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0)) *
         std::pow(1.0 / std::cosh(0.5 * (p - 1.0) * r), 2.0 / (p - 1.0));
}

} // namespace

TEST_CASE("ground state n=1 p=3 matches sqrt(2) sech") {
  const RadialProfile prof = solve_ground_state(1, 3.0, 1e-8, 20.0);
  CHECK(prof.peak == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  double sup = 0.0;
  for (double r = 0.0; r <= 10.0; r += 0.01)
    sup = std::max(sup, std::abs(prof.value_at(r) - std::sqrt(2.0) / std::cosh(r)));
  CHECK(sup < 1e-6);
  CHECK(prof.decay_rate == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("ground state n=1 p=2 matches (3/2) sech^2(r/2)") {
  const RadialProfile prof = solve_ground_state(1, 2.0, 1e-8, 20.0);
  CHECK(prof.peak == doctest::Approx(1.5).epsilon(1e-10));
  for (double r = 0.0; r <= 8.0; r += 0.25)
    CHECK(prof.value_at(r) == doctest::Approx(exact_1d(2.0, r)).epsilon(1e-5));
}

TEST_CASE("ground state n=3 p=3 peak matches the frozen fine-grid oracle") {
  const RadialProfile prof = solve_ground_state(3, 3.0, 1e-8, 20.0);
  // independent high-resolution shooting fixture
  CHECK(prof.peak == doctest::Approx(4.337387679977).epsilon(1e-6));
}

TEST_CASE("ground-state uniqueness proxy: perturbed brackets agree") {
  const double tol = 1e-8;
  const RadialProfile a = solve_ground_state(1, 3.0, tol, 20.0, {8.0, 8192, 60});
  const RadialProfile b = solve_ground_state(1, 3.0, tol, 20.0, {3.1, 8192, 60});
  CHECK(std::abs(a.peak - b.peak) < 10.0 * tol);
}

TEST_CASE("ground state rejects bad inputs") {
  CHECK_THROWS_AS(solve_ground_state(3, 6.0, 1e-8, 20.0), ValidationError); // supercritical
  CHECK_THROWS_AS(solve_ground_state(1, 3.0, 1e-2, 20.0), ValidationError); // tol out of range
  CHECK_THROWS_AS(solve_ground_state(1, 3.0, 1e-8, 20.0, {1.0 + 1e-10, 8192, 60}),
                  SolverError); // bracket without sign change
}

TEST_CASE("profile serialization round trip") {
  const RadialProfile prof = solve_ground_state(1, 3.0, 1e-8, 16.0);
  std::stringstream ss;
  prof.save(ss);
  const std::string first_line = ss.str().substr(0, 2);
  CHECK(first_line == "# ");
  const RadialProfile back = RadialProfile::load(ss);
  CHECK(back.n == prof.n);
  CHECK(back.p == doctest::Approx(prof.p));
  CHECK(back.peak == doctest::Approx(prof.peak));
  CHECK(back.decay_rate == doctest::Approx(prof.decay_rate));
  CHECK(back.values.size() == prof.values.size());
  CHECK(back.value_at(1.2345) == doctest::Approx(prof.value_at(1.2345)).epsilon(1e-12));
}

TEST_CASE("scaling coefficients") {
  ProblemSpec spec;
  spec.n = 1;
  spec.p = 3.0;
  spec.epsilon = 0.1;

  SUBCASE("V=0, K=1 gives identity") {
    const auto [a, b] = scaling_coefficients(spec, make_point(0.0));
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(1.0));
  }
  SUBCASE("V=3, K=1, p=3 gives (2,2)") {
    spec.V = [](const Point&) { return 3.0; };
    const auto [a, b] = scaling_coefficients(spec, make_point(0.0));
    CHECK(a == doctest::Approx(2.0));
    CHECK(b == doctest::Approx(2.0));
  }
  SUBCASE("V=0, K=4, p=3 gives (1/2, 1)") {
    spec.K = [](const Point&) { return 4.0; };
    const auto [a, b] = scaling_coefficients(spec, make_point(0.0));
    CHECK(a == doctest::Approx(0.5));
    CHECK(b == doctest::Approx(1.0));
  }
  SUBCASE("1+V <= 0 raises a domain error") {
    spec.V = [](const Point&) { return -2.0; };
    CHECK_THROWS_AS(scaling_coefficients(spec, make_point(0.0)), DomainError);
  }
}

TEST_CASE("build_ansatz samples the profile and solves the frozen equation") {
  const RadialProfile prof = solve_ground_state(1, 3.0, 1e-8, 20.0);
  ProblemSpec spec;
  spec.n = 1;
  spec.p = 3.0;
  spec.epsilon = 0.1;
  const CartesianGrid g = make_grid(1, 12.0, 385);

  SUBCASE("xi = 0 reproduces U(|x|)") {
    const GridFunction z = build_ansatz(prof, spec, make_point(0.0), g);
    for (std::int64_t j = 0; j < g.node_count(); j += 16)
      CHECK(z[j] == doctest::Approx(prof.value_at(std::abs(g.coord(j)[0]))).epsilon(1e-12));
  }

  SUBCASE("frozen-equation residual is O(h^2)") {
    spec.V = [](const Point& x) { return x[0] * x[0]; };
    const Point xi = make_point(1.0);
    const GridFunction z = build_ansatz(prof, spec, xi, g);
    const double vq = spec.V_at(make_point(spec.epsilon * xi[0]));
    const GridFunction lap = laplacian_apply(z);
    double res = 0.0;
    for (std::int64_t j = 4; j < g.node_count() - 4; ++j)
      res = std::max(res, std::abs(-lap[j] + z[j] + vq * z[j] - std::pow(z[j], 3.0)));
    const double peak = prof.peak * std::pow(1.0 + vq, 1.0 / (spec.p - 1.0));
    CHECK(res <= 10.0 * g.spacing * g.spacing * peak * peak * peak);
  }

  SUBCASE("frozen-equation residual halves x4 under refinement") {
    const auto residual_at = [&](int M) {
      const CartesianGrid gg = make_grid(1, 12.0, M);
      const GridFunction z = build_ansatz(prof, spec, make_point(0.0), gg);
      const GridFunction lap = laplacian_apply(z);
      double res = 0.0;
      for (std::int64_t j = 4; j < gg.node_count() - 4; ++j)
        res = std::max(res, std::abs(-lap[j] + z[j] - std::pow(z[j], 3.0)));
      return res;
    };
    const double r1 = residual_at(193), r2 = residual_at(385);
    CHECK(r1 / r2 > 3.0);
    CHECK(r1 / r2 < 5.0);
  }

  SUBCASE("translation equivariance on lattice-aligned shifts") {
    const double shift = 32 * g.spacing;
    const GridFunction z0 = build_ansatz(prof, spec, make_point(0.0), g);
    const GridFunction zs = build_ansatz(prof, spec, make_point(shift), g);
    for (std::int64_t j = 40; j < g.node_count(); ++j)
      CHECK(zs[j] == doctest::Approx(z0[j - 32]).epsilon(1e-13));
  }

  SUBCASE("xi too close to the boundary is a placement error") {
    CHECK_THROWS_AS(build_ansatz(prof, spec, make_point(11.5), g), PlacementError);
  }
}

TEST_CASE("magnetic ansatz") {
  const RadialProfile prof = solve_ground_state(2, 3.0, 1e-8, 20.0);
  ProblemSpec spec;
  spec.n = 2;
  spec.p = 3.0;
  spec.epsilon = 0.1;
  const CartesianGrid g = make_grid(2, 10.0, 129);

  SUBCASE("A = 0 and sigma = 0 reduces to the real ansatz") {
    const GridFunction zr = build_ansatz(prof, spec, make_point(0.0, 0.0), g);
    const GridFunction zc = build_magnetic_ansatz(prof, spec, make_point(0.0, 0.0), 0.0, g);
    for (std::int64_t j = 0; j < g.node_count(); j += 7) {
      CHECK(zc.cval(j).real() == doctest::Approx(zr[j]).epsilon(1e-13));
      CHECK(zc.cval(j).imag() == 0.0);
    }
  }

  SUBCASE("modulus independent of sigma") {
    spec.A[0] = [](const Point&) { return 1.0; };
    const GridFunction zr = build_ansatz(prof, spec, make_point(0.0, 0.0), g);
    for (double sigma : {0.0, 1.1, 3.9}) {
      const GridFunction zc = build_magnetic_ansatz(prof, spec, make_point(0.0, 0.0), sigma, g);
      double err = 0.0;
      for (std::int64_t j = 0; j < g.node_count(); ++j)
        err = std::max(err, std::abs(std::abs(zc.cval(j)) - zr[j]));
      CHECK(err < 1e-13);
    }
  }

  SUBCASE("phase gradient equals A(eps xi) at xi") {
    spec.A[0] = [](const Point&) { return 1.0; };
    spec.A[1] = [](const Point&) { return 0.0; };
    const GridFunction zc = build_magnetic_ansatz(prof, spec, make_point(0.0, 0.0), 0.25, g);
    // centered difference of arg(z) along x at the origin node
    const std::int64_t c = g.node_count() / 2;
    const std::int64_t sx = g.stride(0), sy = g.stride(1);
    const double dpx =
        std::arg(zc.cval(c + sx) * std::conj(zc.cval(c - sx))) / (2.0 * g.spacing);
    const double dpy =
        std::arg(zc.cval(c + sy) * std::conj(zc.cval(c - sy))) / (2.0 * g.spacing);
    CHECK(dpx == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(dpy) < 1e-10);
  }

  SUBCASE("global phase rotation leaves gauge-invariant quantities unchanged") {
    const GridFunction z0 = build_magnetic_ansatz(prof, spec, make_point(0.0, 0.0), 0.0, g);
    const GridFunction z1 = build_magnetic_ansatz(prof, spec, make_point(0.0, 0.0), 2.0, g);
    const std::complex<double> rot = std::polar(1.0, 2.0);
    for (std::int64_t j = 0; j < g.node_count(); j += 11)
      CHECK(std::abs(z1.cval(j) - rot * z0.cval(j)) < 1e-13);
  }
}
