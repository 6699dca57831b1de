#include <doctest.h>

#include <cmath>

#include "polyma/spectral.hpp"

using namespace polyma;

TEST_SUITE("spectral") {

TEST_CASE("arc eigenvalues are exact") {
    EigenResult q = lambda1_arc(M_PI / 2);
    CHECK(q.lambda1 == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(q.exponent_mu == doctest::Approx(2.0).epsilon(1e-15));

    double mu = 1.0 / 3.0;
    EigenResult w = lambda1_arc(mu * M_PI);
    CHECK(w.exponent_mu == doctest::Approx(1.0 / mu).epsilon(1e-14));

    EigenResult h = lambda1_arc(M_PI);
    CHECK(h.lambda1 == doctest::Approx(1.0));
    CHECK(h.exponent_mu == doctest::Approx(1.0));

    CHECK_THROWS_WITH_AS(lambda1_arc(0.0), doctest::Contains("OpeningOutOfRange"), Error);
    CHECK_THROWS_WITH_AS(lambda1_arc(7.0), doctest::Contains("OpeningOutOfRange"), Error);
}

TEST_CASE("exponent_from_lambda") {
    CHECK(exponent_from_lambda(2 * 5, 5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(exponent_from_lambda(4, 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(exponent_from_lambda(12, 3) == doctest::Approx(3.0).epsilon(1e-14));
    // round trip over a range of exponents
    for (int n : {2, 3, 4}) {
        for (double mu = 0.25; mu <= 10.0; mu += 0.37) {
            double lam = mu * (mu + n - 2);
            CHECK(exponent_from_lambda(lam, n) == doctest::Approx(mu).epsilon(1e-12));
        }
    }
}

TEST_CASE("quarter-space lune: lambda1 = 6 within 1 percent") {
    TangentCone c = cone_from_normals(Vec::Zero(3), {vec3(1, 0, 0), vec3(0, 1, 0)});
    EigenResult r = lambda1_spherical(SphericalDomain::from_cone(c), 0.1);
    CHECK(std::abs(r.lambda1 - 6.0) / 6.0 < 0.01);
    CHECK(r.exponent_mu == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("octant: lambda1 = 12 within 1 percent") {
    EigenResult r = lambda1_spherical(SphericalDomain::from_cone(orthant_cone(3)), 0.1);
    CHECK(std::abs(r.lambda1 - 12.0) / 12.0 < 0.01);
}

TEST_CASE("lune of opening pi/3 matches the separable harmonic") {
    TangentCone w = wedge_cone(1.0 / 3.0, 3);
    EigenResult r = lambda1_spherical(SphericalDomain::from_cone(w), 0.1);
    CHECK(r.exponent_mu == doctest::Approx(3.0).epsilon(0.01));
    // cross-check against the exact arc formula: lambda = (1/mu)(1/mu + 1)
    EigenResult arc = lambda1_arc(M_PI / 3.0);
    double lam_exact = arc.exponent_mu * (arc.exponent_mu + 1);
    CHECK(std::abs(r.lambda1 - lam_exact) / lam_exact < 0.01);
}

TEST_CASE("mesh refinement decreases lambda1 monotonically") {
    auto ladder = lambda1_ladder(SphericalDomain::from_cone(orthant_cone(3)), 0.25, 3);
    REQUIRE(ladder.size() == 3);
    CHECK(ladder[0].lambda1 > ladder[1].lambda1);
    CHECK(ladder[1].lambda1 > ladder[2].lambda1);
    CHECK(ladder[2].lambda1 > 12.0);  // conforming elements overestimate
}

TEST_CASE("domain monotonicity on nested lunes") {
    double prev = 1e9;
    for (double mu : {0.25, 0.35, 0.45, 0.55}) {
        TangentCone w = wedge_cone(mu, 3);
        EigenResult r = lambda1_spherical(SphericalDomain::from_cone(w), 0.12);
        CHECK(r.lambda1 < prev);
        prev = r.lambda1;
    }
}

TEST_CASE("eigenvalue gap check") {
    SUBCASE("narrow wedge cone applicable") {
        GapCheck g = eigenvalue_gap_check(wedge_cone(1.0 / 3.0, 3), 0.1);
        CHECK(g.exponent_mu == doctest::Approx(3.0).epsilon(0.01));
        CHECK(g.theorem_applicable);
    }
    SUBCASE("quarter space is the boundary case") {
        TangentCone c = cone_from_normals(Vec::Zero(3), {vec3(1, 0, 0), vec3(0, 1, 0)});
        GapCheck g = eigenvalue_gap_check(c, 0.1);
        CHECK(std::abs(g.exponent_mu - 2.0) < 0.01);
        CHECK_FALSE(g.theorem_applicable);
    }
    SUBCASE("octant applicable with gap 6") {
        GapCheck g = eigenvalue_gap_check(orthant_cone(3), 0.1);
        CHECK(g.gap == doctest::Approx(6.0).epsilon(0.02));
        CHECK(g.theorem_applicable);
    }
    SUBCASE("planar quarter plane is exact") {
        GapCheck g = eigenvalue_gap_check(orthant_cone(2));
        CHECK(g.lambda1 == doctest::Approx(4.0));
        CHECK(g.gap == doctest::Approx(0.0));
        CHECK_FALSE(g.theorem_applicable);
    }
}

TEST_CASE("second eigenvalue sanity flag on a lune") {
    // separable modes on a lune of opening mu*pi: exponents k/mu, k = 1, 2, ...
    TangentCone w = wedge_cone(0.45, 3);
    EigenResult r = lambda1_spherical(SphericalDomain::from_cone(w), 0.1);
    CHECK(r.lambda2 > r.lambda1);
    double mu2 = exponent_from_lambda(r.lambda2, 3);
    CHECK(mu2 > 3.0);  // second singular exponent exceeds the cubic threshold
}

}  // TEST_SUITE
