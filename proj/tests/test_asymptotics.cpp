#include <doctest.h>

#include <cmath>
#include <random>

#include "polyma/asymptotics.hpp"
#include "polyma/constructions.hpp"

using namespace polyma;

TEST_SUITE("asymptotics") {

TEST_CASE("mixed_root_big") {
    SUBCASE("planar normal form") {
        auto jet = SecondOrderJet::quadratic(vec2(0, 0), Mat::Identity(2, 2));
        CHECK(mixed_root_big(jet, 0.75).value == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(mixed_root_big(jet, 1.0).value == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("three dimensions with a heavier tail entry") {
        Mat H = Mat::Identity(3, 3);
        H(2, 2) = 2.0;
        auto jet = SecondOrderJet::quadratic(vec3(0, 0, 0), H);
        CHECK(mixed_root_big(jet, 1.5).value == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("no real root when f is too large") {
        auto jet = SecondOrderJet::quadratic(vec2(0, 0), Mat::Identity(2, 2));
        CHECK_THROWS_WITH_AS(mixed_root_big(jet, 2.0), doctest::Contains("NoRealRoot"), Error);
    }
    SUBCASE("degenerate quadratic returns the linear root with a flag") {
        Mat H(3, 3);
        H << 1, 0, 1, 0, 1, 1, 1, 1, 0;  // det linear in the (1,2) entry
        auto jet = SecondOrderJet::quadratic(vec3(0, 0, 0), H);
        MixedRoot r = mixed_root_big(jet, 0.5);
        CHECK(r.degenerate);
        CHECK(r.value == doctest::Approx(1.25).epsilon(1e-12));  // 2t - 2 = 0.5
    }
}

TEST_CASE("corner extraction on the exact sub-solution case") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 64;
    auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.5 * x(0) * x(1); };
    DiscreteSolution sol =
        solve_dirichlet(dom, ScalarField::constant(0.75), ScalarField::from(quad), prm);
    CornerExtractOptions opt;
    opt.solver = prm;
    DichotomyVerdict v =
        corner_jet_extract(sol, vec2(0, 0), 0.75, AffineMap::identity(2), opt);
    CHECK(v.cls == DichotomyClass::EqualsSubsolution);
    CHECK(v.estimated_u12 == doctest::Approx(-0.5).epsilon(0.05));
    CHECK(v.zoom_levels == 0);
    CHECK(v.direction_spread < 0.05);
}

TEST_CASE("corner extraction rejects too-coarse grids") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 8;
    auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
    DiscreteSolution sol =
        solve_dirichlet(dom, ScalarField::constant(1.0), ScalarField::from(quad), prm);
    CornerExtractOptions opt;
    opt.solver = prm;
    CHECK_THROWS_WITH_AS(corner_jet_extract(sol, vec2(0, 0), 1.0, AffineMap::identity(2), opt),
                         doctest::Contains("WindowTooSmall"), Error);
}

TEST_CASE("edge expansion fit on oracle fields") {
    double mu = 0.4;
    auto dom = ComputationalDomain::wedge(mu, 2.0, -2.0, 2.0);
    double h = 1.0 / 24;
    auto mode = [mu](const Vec& x) {
        double r = std::hypot(x(0), x(1));
        double th = std::atan2(x(1), x(0));
        return std::pow(r, 1.0 / mu) * std::sin(th / mu);
    };
    SUBCASE("planted coefficient is recovered") {
        auto field = [&](const Vec& x) { return 0.5 * x.squaredNorm() + 0.3 * mode(x); };
        DiscreteSolution sol = sample_field(dom, h, field);
        ExpansionFit fit = edge_expansion_fit(sol, mu, {0.0, 0.5, -0.5});
        CHECK(fit.coefficient_c == doctest::Approx(0.3).epsilon(1e-3));
        for (auto [x3, c] : fit.coefficient_samples) CHECK(c == doctest::Approx(0.3).epsilon(1e-3));
        CHECK(fit.exponent == doctest::Approx(1.0 / mu));
        CHECK(fit.residual_decay_rate > 1.0 / mu);
    }
    SUBCASE("cubic contamination does not bias the coefficient") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int trial = 0; trial < 3; ++trial) {
            double c0 = U(rng), q0 = U(rng);
            auto field = [&](const Vec& x) {
                double r = std::hypot(x(0), x(1));
                return 0.5 * x.squaredNorm() + c0 * mode(x) + q0 * r * r * r;
            };
            DiscreteSolution sol = sample_field(dom, h, field);
            ExpansionFit fit = edge_expansion_fit(sol, mu, {0.0});
            CHECK(fit.coefficient_c == doctest::Approx(c0).epsilon(1e-3));
        }
    }
    SUBCASE("window too small is reported") {
        DiscreteSolution sol = sample_field(dom, h, [](const Vec& x) { return x.squaredNorm(); });
        EdgeFitOptions opt;
        opt.r_min = 0.5;
        opt.r_max = 0.55;
        CHECK_THROWS_WITH_AS(edge_expansion_fit(sol, mu, {0.0}, opt),
                             doctest::Contains("WindowTooSmall"), Error);
    }
}

TEST_CASE("wedge solution decreases when the right-hand side increases") {
    // the two ordered dyadic profiles drive ordered solutions: F <= F_tilde
    // pointwise forces u_tilde <= u nodewise under the monotone scheme
    CounterexampleRhs rhs = counterexample_rhs(6);
    auto dom = ComputationalDomain::wedge(0.4, 2.0, -2.0, 2.0);
    SolverParams prm;
    prm.h = 0.25;
    auto lift = [](const Piecewise1D& p) {
        return ScalarField::from([&p](const Vec& x) {
            double t = std::clamp((x(2) + 2.0) / 8.0, 0.0, 0.5);
            return p.value(t);
        });
    };
    ScalarField fG = lift(rhs.G), fGt = lift(rhs.G_tilde);
    auto phi = ScalarField::from([](const Vec& x) { return 0.5 * x.squaredNorm(); });
    DiscreteSolution uG = solve_dirichlet(dom, fG, phi, prm);
    DiscreteSolution uGt = solve_dirichlet(dom, fGt, phi, prm);
    double tau = 10 * prm.h * prm.h;
    double worst = -1e30;
    for (size_t id = 0; id < uG.values.size(); ++id)
        if (uG.state[id] == 1) worst = std::max(worst, uGt.values[id] - uG.values[id]);
    CHECK(worst <= tau);
}

TEST_CASE("dichotomy estimate agrees with the compatibility root by construction") {
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm;
    prm.h = 1.0 / 64;
    auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm() - 0.5 * x(0) * x(1); };
    DiscreteSolution sol =
        solve_dirichlet(dom, ScalarField::constant(0.75), ScalarField::from(quad), prm);
    CornerExtractOptions opt;
    opt.solver = prm;
    DichotomyVerdict v = corner_jet_extract(sol, vec2(0, 0), 0.75, AffineMap::identity(2), opt);
    auto jet = SecondOrderJet::quadratic(vec2(0, 0), Mat::Identity(2, 2));
    CHECK(v.predicted_root == doctest::Approx(mixed_root_big(jet, 0.75).value).epsilon(1e-14));
    if (v.cls == DichotomyClass::PlusRootBranch)
        CHECK(std::abs(v.estimated_u12 - v.predicted_root) <= 0.05);
}

TEST_CASE("interpolation bound formulas") {
    InterpolationBound b = interpolation_bound(1.0, 1.0, 1.0);
    CHECK(b.sup_bound == doctest::Approx(6.0));
    CHECK(interpolation_bound(1.0, 8.0, 1.0).sup_bound ==
          doctest::Approx(6.0 * std::sqrt(8.0)).epsilon(1e-14));
    CHECK_THROWS_WITH_AS(interpolation_bound(2.0, 1.0, 1.0),
                         doctest::Contains("HypothesisViolated"), Error);
    CHECK_THROWS_WITH_AS(interpolation_bound(1.0, 2.0, 1.5),
                         doctest::Contains("HypothesisViolated"), Error);
}

TEST_CASE("interpolation bound holds on sampled polynomials") {
    // measure the norms of random degree <= 5 polynomials on [0,1] and verify the
    // stated inequalities never fail
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int grid = 2001;
    for (int trial = 0; trial < 25; ++trial) {
        double coef[6];
        for (double& c : coef) c = U(rng);
        double alpha = trial % 2 == 0 ? 1.0 : 0.5;
        auto f = [&](double x) {
            double acc = 0;
            for (int k = 5; k >= 0; --k) acc = acc * x + coef[k];
            return acc;
        };
        auto fp = [&](double x) {
            double acc = 0;
            for (int k = 5; k >= 1; --k) acc = acc * x + k * coef[k];
            return acc;
        };
        double A = 0, sup_fp = 0;
        for (int m = 0; m < grid; ++m) {
            double x = static_cast<double>(m) / (grid - 1);
            A = std::max(A, std::abs(f(x)));
            sup_fp = std::max(sup_fp, std::abs(fp(x)));
        }
        double sem = 0, sem_half = 0;
        for (int m = 0; m < grid; m += 10)
            for (int l = m + 1; l < grid; l += 10) {
                double x = static_cast<double>(m) / (grid - 1);
                double y = static_cast<double>(l) / (grid - 1);
                double d = std::abs(fp(x) - fp(y));
                sem = std::max(sem, d / std::pow(y - x, alpha));
                sem_half = std::max(sem_half, d / std::pow(y - x, alpha / 2));
            }
        double B = sup_fp + sem;
        if (A <= 0 || B <= 0 || A > B) continue;
        InterpolationBound bound = interpolation_bound(A, B, alpha);
        CHECK(sup_fp <= bound.sup_bound);
        CHECK(sem_half <= bound.holder_half_bound);
    }
}

}  // TEST_SUITE
