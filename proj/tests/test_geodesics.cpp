#include <doctest.h>

#include <cmath>

#include "concentra/geodesics.hpp"

using namespace concentra;

namespace {

LoopState great_circle(int N, double r) {
  LoopState loop;
  loop.r = r;
  loop.p.assign(N + 1, 0.0);
  loop.q.assign(N + 1, 0.0);
  loop.p[0] = 1.0;
  loop.q[1] = 1.0;
  return loop;
}

constexpr double kTwoPiSq = 2.0 * M_PI * M_PI;

} // namespace

TEST_CASE("melnikov_gamma: zero, conformal closed form, O(2) invariance") {
  const int N = 2;

  SUBCASE("h = 0 gives 0") {
    MetricPerturbation h = conformal_perturbation(N, [](double) { return 0.0; });
    CHECK(melnikov_gamma(great_circle(N, 0.7), h) == 0.0);
  }

  SUBCASE("conformal h = phi g0 gives 2 pi^2 phi(r)") {
    MetricPerturbation h =
        conformal_perturbation(N, [](double s) { return s * std::exp(-s * s); });
    for (double r : {-1.0, 0.3, 0.71}) {
      const double expected = kTwoPiSq * r * std::exp(-r * r);
      CHECK(melnikov_gamma(great_circle(N, r), h) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("rank-one h depends on (p,q); trapezoid matches dense quadrature") {
    // h(s,xi)[a,b] = phi(s) (a.e1)(b.e1) on the ambient tangent (e1 = first
    // sphere coordinate)
    MetricPerturbation h;
    h.N = N;
    h.h = [](double s, const std::vector<double>&, std::vector<double>& H) {
      H.assign(16, 0.0);
      H[1 * 4 + 1] = std::exp(-0.5 * s * s);
    };
    LoopState loop = great_circle(N, 0.4);
    loop.quad_nodes = 128;
    const double coarse = melnikov_gamma(loop, h);
    loop.quad_nodes = 4096;
    const double fine = melnikov_gamma(loop, h);
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-12));
    // z = p cos + q sin with p = e1: zdot.e1 = -2 pi sin(2 pi t):
    // Gamma = 1/2 phi(r) (2 pi)^2 /2 = pi^2 phi(r)
    CHECK(fine == doctest::Approx(M_PI * M_PI * std::exp(-0.5 * 0.16)).epsilon(1e-12));
  }

  SUBCASE("O(2) invariance: phase shifts and reflection") {
    MetricPerturbation h;
    h.N = N;
    h.h = [](double s, const std::vector<double>& xi, std::vector<double>& H) {
      H.assign(16, 0.0);
      const double w = std::exp(-s * s) * (1.0 + 0.5 * xi[0]);
      for (int a = 0; a < 4; ++a) H[a * 4 + a] = w;
      H[1 * 4 + 2] = H[2 * 4 + 1] = 0.25 * std::exp(-s * s);
    };
    const LoopState base = great_circle(N, 0.6);
    const double g0 = melnikov_gamma(base, h);
    for (double tau : {0.2, 1.1, 2.9}) {
      LoopState rot = base;
      const double c = std::cos(2.0 * M_PI * tau), s = std::sin(2.0 * M_PI * tau);
      for (size_t i = 0; i < rot.p.size(); ++i) {
        rot.p[i] = base.p[i] * c + base.q[i] * s;
        rot.q[i] = -base.p[i] * s + base.q[i] * c;
      }
      CHECK(std::abs(melnikov_gamma(rot, h) - g0) < 1e-12 * (1.0 + std::abs(g0)));
    }
    LoopState refl = base;
    for (double& v : refl.q) v = -v;
    CHECK(std::abs(melnikov_gamma(refl, h) - g0) < 1e-12 * (1.0 + std::abs(g0)));
  }

  SUBCASE("asymmetric perturbation sample is rejected") {
    MetricPerturbation h;
    h.N = N;
    h.h = [](double, const std::vector<double>&, std::vector<double>& H) {
      H.assign(16, 0.0);
      H[1] = 1.0; // H[0][1] != H[1][0]
    };
    CHECK_THROWS_AS(melnikov_gamma(great_circle(N, 0.0), h), ValidationError);
  }

  SUBCASE("loop invariants are validated") {
    LoopState bad = great_circle(N, 0.0);
    bad.p[0] = 1.1;
    MetricPerturbation h = conformal_perturbation(N, [](double) { return 1.0; });
    CHECK_THROWS_AS(melnikov_gamma(bad, h), ValidationError);
  }
}

TEST_CASE("find_geodesic_candidates on the conformal family") {
  const int N = 2;
  MetricPerturbation h =
      conformal_perturbation(N, [](double s) { return s * std::exp(-s * s); });

  const auto candidates = find_geodesic_candidates(h, N, 10);
  REQUIRE(candidates.size() == 2);
  const double root = 1.0 / std::sqrt(2.0);
  CHECK(candidates[0].r == doctest::Approx(-root).epsilon(1e-3));
  CHECK(candidates[1].r == doctest::Approx(root).epsilon(1e-3));
  const double gval = kTwoPiSq * root * std::exp(-0.5);
  CHECK(candidates[1].gamma == doctest::Approx(gval).epsilon(1e-6));
  CHECK(candidates[0].gamma == doctest::Approx(-gval).epsilon(1e-6));
  CHECK(candidates[0].pq_degenerate);
  CHECK(candidates[1].pq_degenerate);
  // r-critical with degenerate (p,q) directions: the only signed direction
  // is r itself
  CHECK(candidates[0].classification == GeodesicCandidate::Class::minimum);
  CHECK(candidates[1].classification == GeodesicCandidate::Class::maximum);

  // canonical representative has maximal p.e1 and exact Stiefel constraints
  for (const auto& c : candidates) {
    double pn = 0.0, qn = 0.0, pq = 0.0;
    for (size_t i = 0; i < c.p.size(); ++i) {
      pn += c.p[i] * c.p[i];
      qn += c.q[i] * c.q[i];
      pq += c.p[i] * c.q[i];
    }
    CHECK(std::abs(pn - 1.0) < 1e-10);
    CHECK(std::abs(qn - 1.0) < 1e-10);
    CHECK(std::abs(pq) < 1e-10);
  }
}

TEST_CASE("find_geodesic_candidates: flat and sign-structured cases") {
  const int N = 2;

  SUBCASE("h = 0 yields no candidates") {
    MetricPerturbation h = conformal_perturbation(N, [](double) { return 0.0; });
    CHECK(find_geodesic_candidates(h, N, 6).empty());
  }

  SUBCASE("tanh-modulated conformal factor separates the Gamma signs") {
    MetricPerturbation h = conformal_perturbation(
        N, [](double s) { return std::tanh(s) * std::exp(-s * s / 10.0); });
    GeodesicSearchOptions opts;
    opts.r_max = 10.0;
    // Gamma > 0 for large positive r, < 0 for large negative r
    CHECK(melnikov_gamma(great_circle(N, 3.0), h) > 0.0);
    CHECK(melnikov_gamma(great_circle(N, -3.0), h) < 0.0);
    const auto candidates = find_geodesic_candidates(h, N, 10, opts);
    REQUIRE(candidates.size() == 2);
    CHECK(candidates[0].gamma < 0.0);
    CHECK(candidates[1].gamma > 0.0);
  }

  SUBCASE("decay: Gamma vanishes for large |r|") {
    MetricPerturbation h =
        conformal_perturbation(N, [](double s) { return s * std::exp(-s * s); });
    double gmax = 0.0;
    for (double r = -2.0; r <= 2.0; r += 0.1)
      gmax = std::max(gmax, std::abs(melnikov_gamma(great_circle(N, r), h)));
    CHECK(std::abs(melnikov_gamma(great_circle(N, 8.0), h)) <= 1e-3 * gmax);
    CHECK(std::abs(melnikov_gamma(great_circle(N, -8.0), h)) <= 1e-3 * gmax);
  }
}

TEST_CASE("refine_closed_geodesic") {
  const int N = 2;
  MetricPerturbation h =
      conformal_perturbation(N, [](double s) { return s * std::exp(-s * s); });
  const auto candidates = find_geodesic_candidates(h, N, 8);
  REQUIRE(candidates.size() == 2);
  const GeodesicCandidate& cand = candidates[1]; // r near +1/sqrt(2)

  SUBCASE("eps = 0 leaves the candidate unchanged") {
    const RefinedLoop loop = refine_closed_geodesic(cand, h, 0.0, 6);
    CHECK(loop.grad_norm <= 1e-6);
    CHECK(loop.r_center == doctest::Approx(cand.r).epsilon(1e-10));
    CHECK(loop.energy == doctest::Approx(kTwoPiSq).epsilon(1e-10));
    for (int j = 0; j < int(loop.t.size()); j += 16)
      CHECK(loop.r[j] == doctest::Approx(cand.r).epsilon(1e-10));
  }

  SUBCASE("conformal metric at a critical r: the great circle stays exactly critical") {
    // for h = phi g0 with phi'(r*) = 0 the great circle solves the perturbed
    // problem identically, so E = b + eps Gamma with no remainder
    const RefinedLoop loop = refine_closed_geodesic(cand, h, 0.01, 6);
    CHECK(loop.grad_norm <= 1e-6);
    CHECK(std::abs(loop.r_center - cand.r) <= 1e-8);
    CHECK(std::abs(loop.energy - kTwoPiSq - 0.01 * cand.gamma) <= 1e-10);
  }
}

TEST_CASE("refined-loop energy expands as b + eps Gamma + o(eps) for anisotropic h") {
  // h(s,xi)[a,b] = phi(s) (a.e1)(b.e1): the great circle through e1 is
  // geometrically geodesic but needs an O(eps) reparameterization, so the
  // energy picks up a genuine second-order remainder
  const int N = 2;
  MetricPerturbation h;
  h.N = N;
  h.h = [](double s, const std::vector<double>&, std::vector<double>& H) {
    H.assign(16, 0.0);
    H[1 * 4 + 1] = std::exp(-s * s);
  };
  GeodesicCandidate cand;
  cand.r = 0.0;
  cand.p = {1.0, 0.0, 0.0};
  cand.q = {0.0, 1.0, 0.0};
  cand.gamma = M_PI * M_PI; // 1/2 phi(0) int (zdot.e1)^2 = pi^2

  std::vector<double> eps_list{0.04, 0.02, 0.01};
  std::vector<double> gap;
  for (double eps : eps_list) {
    const RefinedLoop loop = refine_closed_geodesic(cand, h, eps, 8);
    CHECK(loop.grad_norm <= 1e-6);
    CHECK(std::abs(loop.r_center) <= 1e-6); // symmetric in r
    CHECK(loop.energy <= kTwoPiSq + eps * cand.gamma + 1e-12); // optimization lowers
    gap.push_back(std::abs(loop.energy - kTwoPiSq - eps * cand.gamma));
  }
  CHECK(gap[2] < gap[0]);
  const double slope = std::log(gap[0] / gap[2]) / std::log(eps_list[0] / eps_list[2]);
  CHECK(slope > 1.5);
  CHECK(slope < 2.7);
  const RefinedLoop loop = refine_closed_geodesic(cand, h, 0.01, 8);
  CHECK((loop.energy - kTwoPiSq) / 0.01 == doctest::Approx(cand.gamma).epsilon(0.05));
}
