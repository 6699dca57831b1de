#include <doctest.h>

#include <cmath>
#include <random>

#include "polyma/constructions.hpp"

using namespace polyma;

namespace {

std::map<int, SecondOrderJet> cube_vertex_quadratics(const Polytope& P) {
    // mixed terms +1/2 in the local inward frame of every vertex
    std::map<int, SecondOrderJet> out;
    for (const Face& vf : P.face_lattice[0]) {
        int id = vf.vertex_ids[0];
        const Vec& p = P.vertices[id];
        Vec s(3);
        for (int a = 0; a < 3; ++a) s(a) = p(a) < 0.5 ? 1.0 : -1.0;
        Mat H = 0.5 * Mat::Identity(3, 3) + 0.5 * s * s.transpose();
        out[id] = SecondOrderJet::quadratic(p, H);
    }
    return out;
}

}  // namespace

TEST_SUITE("constructions") {

TEST_CASE("vertex bump profile") {
    double eps0 = 0.37;
    Piecewise1D g = vertex_bump_profile(eps0);
    SUBCASE("pinned values") {
        CHECK(g.value(eps0 / 2) == doctest::Approx(-eps0 / 2).epsilon(1e-15));
        CHECK(g.value(3 * eps0) == doctest::Approx(-5 * eps0 / 4).epsilon(1e-15));
        CHECK(g.value(10 * eps0) == doctest::Approx(-5 * eps0 / 4).epsilon(1e-15));
        CHECK(g.value(-1.0) == doctest::Approx(1.0));  // left piece extends as -t
    }
    SUBCASE("second derivative is nonnegative at 1000 sample points") {
        CHECK(g.min_second(1000) >= -1e-12);
    }
    SUBCASE("monotone down to the plateau") {
        for (double t = 0.01; t < 2 * eps0; t += 0.01) CHECK(g.derivative(t) < 0);
        CHECK(g.derivative(2.5 * eps0) == 0.0);
    }
    SUBCASE("exact C2 continuity at the breakpoints") {
        CHECK(g.continuity_defect() <= 1e-12);
    }
}

TEST_CASE("cube sub-solution scaffold") {
    Polytope P = unit_cube();
    auto quads = cube_vertex_quadratics(P);
    SubsolutionParams params;
    // defaults exercise the shipped parameter choices
    SubsolutionReport rep;
    BarrierFunction u = simple_subsolution_3d(P, quads, params, &rep);
    SUBCASE("strong condition verified at all 8 vertices") {
        CHECK(rep.strong_a_ok);
        CHECK(rep.worst_theta < M_PI / 2);
    }
    SUBCASE("convex on the sample grid") {
        CHECK(rep.convex_ok);
    }
    SUBCASE("analytic derivatives match finite differences") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> U(0.15, 0.85);
        double hfd = 1e-4;
        for (int trial = 0; trial < 40; ++trial) {
            Vec x = vec3(U(rng), U(rng), U(rng));
            Vec g = u.gradient(x);
            Mat H = u.hessian(x);
            for (int a = 0; a < 3; ++a) {
                Vec e = Vec::Zero(3);
                e(a) = hfd;
                double gfd = (u.value(x + e) - u.value(x - e)) / (2 * hfd);
                CHECK(g(a) == doctest::Approx(gfd).epsilon(1e-5));
                for (int b = 0; b < 3; ++b) {
                    Vec eb = Vec::Zero(3);
                    eb(b) = hfd;
                    double hfd2 = (u.gradient(x + eb)(a) - u.gradient(x - eb)(a)) / (2 * hfd);
                    CHECK(H(a, b) == doctest::Approx(hfd2).epsilon(1e-4).scale(1.0));
                }
            }
        }
    }
}

TEST_CASE("sub-solution scaffold rejections") {
    SUBCASE("boundary-case quadratics fail the strong condition") {
        Polytope P = unit_cube();
        std::map<int, SecondOrderJet> quads;
        for (const Face& vf : P.face_lattice[0]) {
            int id = vf.vertex_ids[0];
            quads[id] = SecondOrderJet::quadratic(P.vertices[id], Mat::Identity(3, 3));
        }
        CHECK_THROWS_WITH_AS(simple_subsolution_3d(P, quads, {}),
                             doctest::Contains("ACheckFailed"), Error);
    }
    SUBCASE("non-simple polytope is rejected") {
        Polytope P = regular_octahedron();
        std::map<int, SecondOrderJet> quads;
        for (const Face& vf : P.face_lattice[0]) {
            int id = vf.vertex_ids[0];
            quads[id] = SecondOrderJet::quadratic(P.vertices[id], Mat::Identity(3, 3));
        }
        CHECK_THROWS_WITH_AS(simple_subsolution_3d(P, quads, {}),
                             doctest::Contains("ACheckFailed"), Error);
    }
    SUBCASE("too-small C0 reported") {
        Polytope P = unit_cube();
        auto quads = cube_vertex_quadratics(P);
        SubsolutionParams params;
        params.C0 = 0.001;
        CHECK_THROWS_WITH_AS(simple_subsolution_3d(P, quads, params),
                             doctest::Contains("C0TooSmall"), Error);
    }
}

TEST_CASE("counterexample right-hand sides") {
    CounterexampleRhs rhs = counterexample_rhs(12);
    SUBCASE("dyadic anchors are exact") {
        for (int k = 1; k <= 10; ++k) {
            double t = 3.0 * std::ldexp(1.0, -(k + 2));
            double expected = 1.0 - 3.0 * std::ldexp(1.0, -(k + 2));
            CHECK(rhs.G.value(t) == expected);
            CHECK(rhs.G_tilde.value(t) == expected);
        }
    }
    SUBCASE("ordering and range") {
        for (int m = 0; m <= 10000; ++m) {
            double t = 0.5 * m / 10000.0;
            double g = rhs.G.value(t), gt = rhs.G_tilde.value(t);
            CHECK(g <= gt + 1e-15);
            CHECK(g >= 0.5 - 1e-15);
            CHECK(gt <= 1.0 + 1e-15);
        }
    }
    SUBCASE("lipschitz constants") {
        double lip_g = 0, lip_gt = 0;
        for (int m = 0; m < 20000; ++m) {
            double t = 0.5 * (m + 0.5) / 20000.0;
            lip_g = std::max(lip_g, std::abs(rhs.G.derivative(t)));
            lip_gt = std::max(lip_gt, std::abs(rhs.G_tilde.derivative(t)));
        }
        CHECK(lip_g <= 2.0 + 1e-12);
        CHECK(lip_gt <= 3.0 + 1e-12);
    }
    SUBCASE("window opening fractions approach one half") {
        for (int k = 6; k <= 40; ++k) {
            double mu = counterexample_window_mu(k);
            CHECK(mu > 1.0 / 3.0);
            CHECK(mu < 0.5);
        }
        CHECK(counterexample_window_mu(60) == doctest::Approx(0.5).epsilon(1e-4));
    }
}

TEST_CASE("h profile") {
    double delta = 0.4;
    double a = delta * delta * delta;
    Piecewise1D h = capped_curvature_profile(delta);
    CHECK(h.second(0.0) == 1.0);
    CHECK(h.second(a) == doctest::Approx(0.0));
    CHECK(h.second(a * 2) == 0.0);
    for (double t = 0; t <= a / 2; t += a / 16)
        CHECK(h.value(t) == doctest::Approx(t * t / 2).epsilon(1e-15));
    CHECK(h.continuity_defect() <= 1e-15);
    // h' non-decreasing, h'' within [0,1]
    double prev = -1;
    for (double t = 0; t <= 2 * a; t += a / 64) {
        CHECK(h.derivative(t) >= prev - 1e-15);
        prev = h.derivative(t);
        CHECK(h.second(t) >= -1e-15);
        CHECK(h.second(t) <= 1.0 + 1e-15);
    }
}

TEST_CASE("no-sub-solution barrier on the square") {
    Polytope P = unit_square();
    std::map<int, SecondOrderJet> jets;
    for (const Face& vf : P.face_lattice[0]) {
        int id = vf.vertex_ids[0];
        SecondOrderJet j = SecondOrderJet::quadratic(P.vertices[id], Mat::Identity(2, 2));
        j.value = 0.5 * P.vertices[id].squaredNorm();
        j.gradient = P.vertices[id];
        jets[id] = j;
    }
    auto phi = ScalarField::from([](const Vec& x) { return 0.5 * x.squaredNorm(); });
    BarrierParams params;
    params.delta = 0.65;
    params.omega = 0.05;
    SUBCASE("small right-hand side passes both checks") {
        BarrierReport rep;
        BarrierFunction u0 =
            no_subsolution_barrier(P, jets, ScalarField::constant(0.01), phi, params, &rep);
        CHECK(rep.uniform_convexity_c > 0);
        CHECK(rep.boundary_ok);
        CHECK(rep.determinant_ok);
        // analytic hessian sanity at a bulk point
        Mat H = u0.hessian(vec2(0.6, 0.55));
        CHECK(H.determinant() >= 0.01);
    }
    SUBCASE("large right-hand side fails the determinant check") {
        CHECK_THROWS_WITH_AS(
            no_subsolution_barrier(P, jets, ScalarField::constant(0.9), phi, params, nullptr),
            doctest::Contains("DeterminantDominationFailed"), Error);
    }
}

TEST_CASE("no-sub-solution barrier on a 3-D box with vertex-concentrated data") {
    Polytope P = unit_cube();
    // boundary data with the edge-adapted mixed term at the distinguished vertex;
    // the compatibility root there is 0.5, so f must approach 0.75 at that corner
    double c = 0.5;
    auto phi = ScalarField::from(
        [c](const Vec& x) { return 0.5 * x.squaredNorm() + c * x(0) * x(1); });
    std::map<int, SecondOrderJet> jets;
    std::vector<Vec> vertices;
    for (const Face& vf : P.face_lattice[0]) {
        int id = vf.vertex_ids[0];
        Mat H = Mat::Identity(3, 3);
        H(0, 1) = H(1, 0) = c;
        SecondOrderJet j = SecondOrderJet::quadratic(P.vertices[id], H);
        const Vec& p = P.vertices[id];
        j.value = phi(p);
        j.gradient = p + c * vec3(p(1), p(0), 0.0);
        jets[id] = j;
        vertices.push_back(p);
    }
    // f spikes tightly near the vertices (reaching the compatible value at the
    // distinguished one) and stays far below the delta^6 floor in the bulk
    auto f = ScalarField::from([vertices, c](const Vec& x) {
        double v = 1e-4;
        for (const auto& p : vertices) {
            double amp = p.norm() < 0.5 ? 1.0 - c * c - 1e-4 : 0.3;
            v += amp * std::exp(-(x - p).squaredNorm() / (2 * 0.003 * 0.003));
        }
        return v;
    });
    BarrierParams params;
    params.delta = 0.5;
    params.omega = 0.01;
    params.grid_samples = 24;
    BarrierReport rep;
    no_subsolution_barrier(P, jets, f, phi, params, &rep);
    CHECK(rep.boundary_ok);
    CHECK(rep.determinant_ok);
}

}  // TEST_SUITE
