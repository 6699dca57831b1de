#include <doctest.h>

#include <cmath>
#include <random>

#include "polyma/solver.hpp"

using namespace polyma;

namespace {

ScalarField half_norm2() {
    return ScalarField::from([](const Vec& x) { return 0.5 * x.squaredNorm(); });
}

double max_nodal_error(const DiscreteSolution& sol,
                       const std::function<double(const Vec&)>& exact) {
    double worst = 0;
    for (int k = 0; k < sol.shape[2]; ++k)
        for (int j = 0; j < sol.shape[1]; ++j)
            for (int i = 0; i < sol.shape[0]; ++i) {
                auto id = sol.index(i, j, k);
                if (sol.state[id] != 1) continue;
                worst = std::max(worst, std::abs(sol.values[id] - exact(sol.point(i, j, k))));
            }
    return worst;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("exact quadratic on the unit square") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 32;
    DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm);
    double err = max_nodal_error(sol, [](const Vec& x) { return 0.5 * x.squaredNorm(); });
    CHECK(err < 5 * prm.h * prm.h);
    CHECK(err < 1e-7);  // scheme is exact on quadratics, only the Newton tol remains
    CHECK(sol.residual < 1e-8);
    CHECK(sol.convexity_violations == 0);
}

TEST_CASE("quadratic with mixed term: det = 3/4") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 32;
    auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.5 * x(0) * x(1); };
    DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(0.75),
                                           ScalarField::from(quad), prm);
    CHECK(max_nodal_error(sol, quad) < 1e-7);
}

TEST_CASE("wedge solve with exact quadratic") {
    auto dom = ComputationalDomain::wedge(1.0 / 3.0, 2.0, -2.0, 2.0);
    SolverParams prm;
    prm.h = 0.25;
    DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm);
    double err = max_nodal_error(sol, [](const Vec& x) { return 0.5 * x.squaredNorm(); });
    CHECK(err < 1e-7);
    CHECK(sol.dim == 3);
}

TEST_CASE("truncated-cone sandwich bound") {
    // det = 3/4 on the quarter plane: the solution stays below the mixed quadratic
    TangentCone quarter = orthant_cone(2);
    SolverParams prm;
    prm.h = 0.125;
    auto res = solve_truncated_cone(quarter, 4.0, 0.75, prm);
    double worst = -1e9;
    for (int j = 0; j < res.sol.shape[1]; ++j)
        for (int i = 0; i < res.sol.shape[0]; ++i) {
            auto id = res.sol.index(i, j, 0);
            if (res.sol.state[id] != 1) continue;
            Vec x = res.sol.point(i, j, 0);
            double bound = 0.5 * x.squaredNorm() + 0.5 * x(0) * x(1);
            worst = std::max(worst, res.sol.values[id] - bound);
        }
    CHECK(worst <= 2 * prm.h);
}

TEST_CASE("rank-one comparison function dominates the c = 1 solve") {
    TangentCone quarter = orthant_cone(2);
    auto dom = ComputationalDomain::cone_ball(quarter, 4.0);
    SolverParams prm;
    prm.h = 0.125;
    auto outer = [](const Vec& x, int label) {
        double base = 0.5 * x.squaredNorm();
        return label == 1 ? base + x(0) * x(1) : base;
    };
    DiscreteSolution sol = solve_dirichlet_labeled(dom, ScalarField::constant(1.0), outer, prm);
    double worst = -1e9;
    for (int j = 0; j < sol.shape[1]; ++j)
        for (int i = 0; i < sol.shape[0]; ++i) {
            auto id = sol.index(i, j, 0);
            if (sol.state[id] != 1) continue;
            Vec x = sol.point(i, j, 0);
            worst = std::max(worst, sol.values[id] - (0.5 * x.squaredNorm() + x(0) * x(1)));
        }
    CHECK(worst <= 2 * prm.h);
}

TEST_CASE("pinned conic solve dips below the model quadratic") {
    TangentCone quarter = orthant_cone(2);
    SolverParams prm;
    prm.h = 0.125;
    PinSpec pin;
    pin.p0 = vec2(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    pin.a = 0.0;
    pin.tol = 5e-4;
    auto res = solve_truncated_cone(quarter, 4.0, 1.0, prm, pin);
    CHECK(std::abs(res.sol.value_at(pin.p0) - 0.0) <= 1e-3);
    CHECK(res.shift < 0);
    double dip = 1e9;
    for (int j = 0; j < res.sol.shape[1]; ++j)
        for (int i = 0; i < res.sol.shape[0]; ++i) {
            auto id = res.sol.index(i, j, 0);
            if (res.sol.state[id] != 1) continue;
            Vec x = res.sol.point(i, j, 0);
            dip = std::min(dip, res.sol.values[id] - 0.5 * x.squaredNorm());
        }
    CHECK(dip < -0.1);
}

TEST_CASE("pin infeasible when the target exceeds 1/2") {
    TangentCone quarter = orthant_cone(2);
    SolverParams prm;
    prm.h = 0.25;
    PinSpec pin;
    pin.p0 = vec2(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    pin.a = 0.7;
    CHECK_THROWS_WITH_AS(solve_truncated_cone(quarter, 4.0, 1.0, prm, pin),
                         doctest::Contains("PinInfeasible"), Error);
}

TEST_CASE("hessian_probe on exact fields") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 32;
    SUBCASE("pure second derivative of the round quadratic") {
        DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm);
        auto p = hessian_probe(sol, vec2(0.5, 0.5), 0, 0);
        CHECK(p.value == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(p.order == 2);
    }
    SUBCASE("mixed derivative of the tilted quadratic") {
        auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm() + 0.5 * x(0) * x(1); };
        DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(0.75),
                                               ScalarField::from(quad), prm);
        auto p = hessian_probe(sol, vec2(0.5, 0.5), 0, 1);
        CHECK(p.value == doctest::Approx(0.5).epsilon(1e-6));
        // one-sided probe near the boundary stays within O(h) of the exact value
        auto q = hessian_probe(sol, vec2(prm.h, 0.5), 0, 1);
        CHECK(q.value == doctest::Approx(0.5).epsilon(0.1));
        Mat H = hessian_probe_matrix(sol, vec2(0.5, 0.5));
        CHECK(H(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(H(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("probe outside the domain is rejected") {
        DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm);
        CHECK_THROWS_WITH_AS(hessian_probe(sol, vec2(-0.5, 0.5), 0, 0),
                             doctest::Contains("OutOfDomain"), Error);
    }
}

TEST_CASE("residual report on a refinement ladder") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    std::vector<DiscreteSolution> ladder;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        SolverParams prm;
        prm.h = h;
        ladder.push_back(solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm));
    }
    ResidualReport rep = residual_report(ladder);
    CHECK(rep.max_residual < 1e-8);
    CHECK(rep.convexity_violations == 0);
}

TEST_CASE("discrete comparison principle") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 16;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.2, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        double f1 = U(rng) + 0.5, f2 = f1 - 0.3;
        double shift = 0.2 * U(rng);
        auto phi1 = half_norm2();
        auto phi2 = ScalarField::from(
            [shift](const Vec& x) { return 0.5 * x.squaredNorm() + shift; });
        DiscreteSolution u1 = solve_dirichlet(dom, ScalarField::constant(f1), phi1, prm);
        DiscreteSolution u2 = solve_dirichlet(dom, ScalarField::constant(f2), phi2, prm);
        double tau = 10 * prm.h * prm.h;
        for (size_t id = 0; id < u1.values.size(); ++id)
            if (u1.state[id] == 1) CHECK(u1.values[id] <= u2.values[id] + tau);
    }
}

TEST_CASE("sub-solution domination") {
    // quadratic with larger determinant and equal boundary data stays below
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 16;
    auto sub = [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.4 * x(0) * x(1); };  // det 0.84
    DiscreteSolution u = solve_dirichlet(dom, ScalarField::constant(0.75),
                                         ScalarField::from(sub), prm);
    double tau = 10 * prm.h * prm.h;
    for (int j = 0; j < u.shape[1]; ++j)
        for (int i = 0; i < u.shape[0]; ++i) {
            auto id = u.index(i, j, 0);
            if (u.state[id] != 1) continue;
            CHECK(u.values[id] >= sub(u.point(i, j, 0)) - tau);
        }
}

TEST_CASE("affine covariance of the solve") {
    // shear the square: solving the transformed problem matches the pullback
    Mat S(2, 2);
    S << 1.0, 0.4, 0.0, 1.0;  // det 1
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 16;
    auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.2 * x(0) * x(1); };
    DiscreteSolution u = solve_dirichlet(dom, ScalarField::constant(0.96),
                                         ScalarField::from(quad), prm);

    ComputationalDomain sheared = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    AffineMap M;
    M.linear = S;
    M.shift = Vec::Zero(2);
    sheared.affine_precompose = M;
    DiscreteSolution v = solve_dirichlet(sheared, ScalarField::constant(0.96),
                                         ScalarField::from(quad), prm);
    // v(y) should equal u(Sy) up to discretization error
    double worst = 0;
    for (int j = 1; j + 1 < v.shape[1]; ++j)
        for (int i = 1; i + 1 < v.shape[0]; ++i) {
            auto id = v.index(i, j, 0);
            if (v.state[id] != 1) continue;
            Vec y = v.point(i, j, 0);
            Vec x = S * y;
            if (x(0) < 0 || x(0) > 1 || x(1) < 0 || x(1) > 1) continue;
            worst = std::max(worst, std::abs(v.values[id] - u.value_at(x)));
        }
    CHECK(worst < 20 * prm.h * prm.h);
}

TEST_CASE("solution round trip through the text format") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 8;
    DiscreteSolution sol = solve_dirichlet(dom, ScalarField::constant(1.0), half_norm2(), prm);
    save_solution(sol, "/tmp/polyma_sol_test.csv");
    DiscreteSolution back = load_solution("/tmp/polyma_sol_test.csv");
    CHECK(back.dim == sol.dim);
    CHECK(back.shape == sol.shape);
    double worst = 0;
    for (size_t i = 0; i < sol.values.size(); ++i)
        worst = std::max(worst, std::abs(sol.values[i] - back.values[i]));
    CHECK(worst == 0.0);
}

TEST_CASE("positive right-hand side required") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 8;
    CHECK_THROWS_WITH_AS(solve_dirichlet(dom, ScalarField::constant(0.0), half_norm2(), prm),
                         doctest::Contains("InconsistentInput"), Error);
}

}  // TEST_SUITE
