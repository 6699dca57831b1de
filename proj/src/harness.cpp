#include "polyma/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace polyma {

namespace {

using Clock = std::chrono::steady_clock;

double now_seconds(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ScalarField field_from(const Json& j) {
    if (j.is_number()) return ScalarField::constant(j.get<double>());
    if (j.is_string()) return Expression::parse(j.get<std::string>()).as_field();
    fail("InconsistentInput", "field spec must be a number or an expression string");
}

Polytope polytope_from(const Json& d) {
    std::string type = d.value("type", "square");
    if (type == "square") return unit_square();
    if (type == "cube") return unit_cube();
    if (type == "octahedron") return regular_octahedron();
    if (type == "tetrahedron") return regular_tetrahedron();
    if (type == "polygon" || type == "polytope") {
        std::vector<Vec> pts;
        for (const auto& row : d.at("vertices")) {
            Vec v(row.size());
            for (size_t i = 0; i < row.size(); ++i) v(i) = row[i].get<double>();
            pts.push_back(v);
        }
        return build_polytope_from_vertices(pts);
    }
    fail("InconsistentInput", "unknown polytope type '" + type + "'");
}

TangentCone cone_from(const Json& d) {
    std::string type = d.value("type", "quarter2d");
    if (type == "quarter2d") return orthant_cone(2);
    if (type == "octant") return orthant_cone(3);
    if (type == "quarterspace3d")
        return cone_from_normals(Vec::Zero(3), {vec3(1, 0, 0), vec3(0, 1, 0)});
    if (type == "wedge") return wedge_cone(d.at("mu").get<double>(), d.value("dim", 3));
    if (type == "normals") {
        std::vector<Vec> normals;
        for (const auto& row : d.at("normals")) {
            Vec v(row.size());
            for (size_t i = 0; i < row.size(); ++i) v(i) = row[i].get<double>();
            normals.push_back(v);
        }
        return cone_from_normals(Vec::Zero(normals[0].size()), normals);
    }
    fail("InconsistentInput", "unknown cone type '" + type + "'");
}

ComputationalDomain domain_from(const Json& d) {
    std::string type = d.value("type", "square");
    if (type == "square") return ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    if (type == "box") {
        const auto& lo = d.at("lo");
        const auto& hi = d.at("hi");
        Vec l(lo.size()), h(hi.size());
        for (size_t i = 0; i < lo.size(); ++i) l(i) = lo[i].get<double>();
        for (size_t i = 0; i < hi.size(); ++i) h(i) = hi[i].get<double>();
        return ComputationalDomain::box(l, h);
    }
    if (type == "polygon") return ComputationalDomain::polygon(polytope_from(d));
    if (type == "wedge")
        return ComputationalDomain::wedge(d.at("mu").get<double>(), d.value("radius", 2.0),
                                          d.value("z0", -2.0), d.value("z1", 2.0));
    if (type == "cone")
        return ComputationalDomain::cone_ball(cone_from(d.at("cone")), d.value("radius", 4.0));
    fail("InconsistentInput", "unknown domain type '" + type + "'");
}

SolverParams solver_params_from(const Json& cfg, double h) {
    SolverParams prm;
    prm.h = h;
    if (cfg.contains("solver")) {
        const Json& s = cfg["solver"];
        prm.directions = s.value("directions", prm.directions);
        prm.newton_tol = s.value("newton_tol", prm.newton_tol);
        prm.max_damping = s.value("max_damping", prm.max_damping);
        prm.newton_max_iter = s.value("max_iter", prm.newton_max_iter);
    }
    return prm;
}

std::vector<double> grid_ladder(const Json& cfg) {
    const Json& g = cfg.at("grid");
    std::vector<double> hs;
    if (g.contains("ladder"))
        for (const auto& v : g["ladder"]) hs.push_back(v.get<double>());
    else
        hs.push_back(g.at("h").get<double>());
    return hs;
}

void push_verdict(ResultDocument& doc, const std::string& name, bool pass, double value,
                  double threshold, const std::string& note = "") {
    doc.verdicts.push_back({name, pass, value, threshold, note});
}

double max_error_vs(const DiscreteSolution& sol, const ScalarField& ref) {
    double worst = 0;
    for (int k = 0; k < sol.shape[2]; ++k)
        for (int j = 0; j < sol.shape[1]; ++j)
            for (int i = 0; i < sol.shape[0]; ++i) {
                auto id = sol.index(i, j, k);
                if (sol.state[id] != 1) continue;
                worst = std::max(worst, std::abs(sol.values[id] - ref(sol.point(i, j, k))));
            }
    return worst;
}

double max_excess_over(const DiscreteSolution& sol, const ScalarField& upper) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < sol.shape[2]; ++k)
        for (int j = 0; j < sol.shape[1]; ++j)
            for (int i = 0; i < sol.shape[0]; ++i) {
                auto id = sol.index(i, j, k);
                if (sol.state[id] != 1) continue;
                worst = std::max(worst, sol.values[id] - upper(sol.point(i, j, k)));
            }
    return worst;
}

Json solution_stats(const DiscreteSolution& sol) {
    Json j;
    j["h"] = sol.h;
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["interior_nodes"] = sol.interior_count;
    j["convexity_violations"] = sol.convexity_violations;
    j["min_second_difference"] = sol.min_second_difference;
    j["scheme"] = sol.monotone_scheme_id;
    return j;
}

// ---------------------------------------------------------------------------
// experiment kinds
// ---------------------------------------------------------------------------

void run_solve(const Json& cfg, ResultDocument& doc) {
    ComputationalDomain dom = domain_from(cfg.at("domain"));
    ScalarField f = field_from(cfg.at("f"));
    ScalarField phi = field_from(cfg.at("phi"));
    std::vector<double> hs = grid_ladder(cfg);
    std::vector<DiscreteSolution> ladder;
    CsvTable refinement;
    refinement.header = {"h", "residual", "rate"};
    for (double h : hs) {
        SolverParams prm = solver_params_from(cfg, h);
        auto t0 = Clock::now();
        ladder.push_back(solve_dirichlet(dom, f, phi, prm));
        Json st = solution_stats(ladder.back());
        st["seconds"] = now_seconds(t0);
        doc.report["grids"].push_back(st);
        if (cfg.contains("reference")) {
            ScalarField ref = field_from(cfg["reference"]);
            double err = max_error_vs(ladder.back(), ref);
            double factor = cfg.value("reference_factor", 5.0);
            push_verdict(doc, "max-error-h" + std::to_string(h), err <= factor * h * h, err,
                         factor * h * h);
        }
        if (cfg.contains("upper")) {
            ScalarField up = field_from(cfg["upper"]);
            double slack = cfg.value("upper_slack_h", 2.0) * h;
            double excess = max_excess_over(ladder.back(), up);
            push_verdict(doc, "upper-bound-h" + std::to_string(h), excess <= slack, excess, slack);
        }
        ResidualReport rr = residual_report(ladder);
        refinement.rows.push_back({h, ladder.back().residual, rr.grid_convergence_rate});
    }
    doc.series["refinement"] = refinement;
    if (cfg.contains("save_solution")) save_solution(ladder.back(), cfg["save_solution"]);
}

void run_truncated_cone(const Json& cfg, ResultDocument& doc) {
    TangentCone cone = cone_from(cfg.at("cone"));
    double R = cfg.value("radius", 4.0);
    double c = cfg.value("c", 1.0);
    SolverParams prm = solver_params_from(cfg, cfg.at("grid").at("h").get<double>());
    std::optional<PinSpec> pin;
    if (cfg.contains("pin")) {
        PinSpec p;
        const auto& pj = cfg["pin"];
        Vec p0(pj.at("p0").size());
        for (size_t i = 0; i < pj.at("p0").size(); ++i) p0(i) = pj["p0"][i].get<double>();
        p.p0 = p0;
        p.a = pj.value("a", 0.0);
        p.tol = pj.value("tol", 5e-4);
        pin = p;
    }
    auto res = solve_truncated_cone(cone, R, c, prm, pin);
    doc.report["solve"] = solution_stats(res.sol);
    doc.report["shift"] = res.shift;
    doc.report["outer_solves"] = res.outer_solves;

    if (pin) {
        double v = res.sol.value_at(pin->p0);
        double tol = cfg["pin"].value("verdict_tol", 1e-3);
        push_verdict(doc, "pin-value", std::abs(v - pin->a) <= tol, v, pin->a, "value at p0");
    }
    if (cfg.value("check_dip", false)) {
        double dip = -max_excess_over(res.sol, ScalarField::from([](const Vec& x) {
                         return 0.5 * x.squaredNorm();
                     }));
        // dip = min of u - |x|^2/2 (negated excess of the reversed comparison)
        double dmin = 1e30;
        for (int k = 0; k < res.sol.shape[2]; ++k)
            for (int j = 0; j < res.sol.shape[1]; ++j)
                for (int i = 0; i < res.sol.shape[0]; ++i) {
                    auto id = res.sol.index(i, j, k);
                    if (res.sol.state[id] != 1) continue;
                    Vec x = res.sol.point(i, j, k);
                    dmin = std::min(dmin, res.sol.values[id] - 0.5 * x.squaredNorm());
                }
        (void)dip;
        double thr = cfg.value("dip_threshold", -0.1);
        push_verdict(doc, "dip-below-model", dmin < thr, dmin, thr);
    }
    if (cfg.contains("upper")) {
        ScalarField up = field_from(cfg["upper"]);
        double slack = cfg.value("upper_slack_h", 2.0) * prm.h;
        double excess = max_excess_over(res.sol, up);
        push_verdict(doc, "upper-bound", excess <= slack, excess, slack);
    }
}

void run_corner(const Json& cfg, ResultDocument& doc) {
    ComputationalDomain dom = domain_from(cfg.at("domain"));
    ScalarField f = field_from(cfg.at("f"));
    ScalarField phi = field_from(cfg.at("phi"));
    double h = cfg.at("grid").at("h").get<double>();
    SolverParams prm = solver_params_from(cfg, h);
    auto t0 = Clock::now();
    DiscreteSolution sol = solve_dirichlet(dom, f, phi, prm);
    doc.report["solve"] = solution_stats(sol);
    doc.report["solve"]["seconds"] = now_seconds(t0);

    Vec corner = Vec::Zero(dom.dim);
    if (cfg.contains("corner"))
        for (size_t i = 0; i < cfg["corner"].size(); ++i) corner(i) = cfg["corner"][i].get<double>();
    double f0 = f(corner);
    CornerExtractOptions opt;
    opt.solver = prm;
    if (cfg.contains("extract")) {
        const Json& e = cfg["extract"];
        opt.max_zoom = e.value("max_zoom", opt.max_zoom);
        opt.tau_c2 = e.value("tau_c2", opt.tau_c2);
        opt.tau_root = e.value("tau_root", opt.tau_root);
        opt.tau_flat = e.value("tau_flat", opt.tau_flat);
        opt.spread_divergence = e.value("spread_divergence", opt.spread_divergence);
    }
    DichotomyVerdict v = corner_jet_extract(sol, corner, f0, AffineMap::identity(dom.dim), opt);
    doc.report["corner"] = {{"class", v.cls == DichotomyClass::EqualsSubsolution
                                          ? "EqualsSubsolution"
                                          : v.cls == DichotomyClass::PlusRootBranch
                                                ? "PlusRootBranch"
                                                : "NotC2"},
                            {"estimated_u12", v.estimated_u12},
                            {"direction_spread", v.direction_spread},
                            {"zoom_levels", v.zoom_levels},
                            {"predicted_root", v.predicted_root}};
    CsvTable trace;
    trace.header = {"level", "u12_mid"};
    for (size_t l = 0; l < v.level_trace.size(); ++l)
        trace.rows.push_back({static_cast<double>(l), v.level_trace[l]});
    doc.series["corner-level-trace"] = trace;
    CsvTable probes;
    probes.header = {"r", "direction", "estimate"};
    for (const auto& row : v.final_probes)
        probes.rows.push_back({row[0], row[1], row[2]});
    doc.series["corner-u12-vs-r"] = probes;

    std::string expected = cfg.value("expected_class", "");
    std::string got = doc.report["corner"]["class"].get<std::string>();
    if (!expected.empty())
        push_verdict(doc, "corner-class", got == expected, 0, 0, "got " + got);
    if (cfg.contains("expected_u12")) {
        double tol = cfg.value("u12_tol", 0.05);
        double target = cfg["expected_u12"].get<double>();
        push_verdict(doc, "corner-u12", std::abs(v.estimated_u12 - target) <= tol,
                     v.estimated_u12, target);
    }
    if (cfg.contains("min_spread"))
        push_verdict(doc, "corner-spread", v.direction_spread > cfg["min_spread"].get<double>(),
                     v.direction_spread, cfg["min_spread"].get<double>());
}

void run_edge_fit(const Json& cfg, ResultDocument& doc) {
    double mu = cfg.at("mu").get<double>();
    double radius = cfg.value("radius", 2.0);
    double z0 = cfg.value("z0", -2.0), z1 = cfg.value("z1", 2.0);
    auto dom = ComputationalDomain::wedge(mu, radius, z0, z1);
    double h = cfg.at("grid").at("h").get<double>();

    DiscreteSolution sol;
    std::string mode = cfg.value("mode", "solve");
    auto t0 = Clock::now();
    if (mode == "oracle") {
        double c = cfg.value("planted_c", 0.3);
        double q = cfg.value("planted_q", 0.0);
        double inv_mu = 1.0 / mu;
        sol = sample_field(dom, h, [c, q, inv_mu](const Vec& x) {
            double r = std::hypot(x(0), x(1));
            double th = std::atan2(x(1), x(0));
            return 0.5 * x.squaredNorm() + c * std::pow(r, inv_mu) * std::sin(th * inv_mu) +
                   q * r * r * r;
        });
    } else {
        SolverParams prm = solver_params_from(cfg, h);
        double cp = cfg.value("outer_coeff", 0.0);
        double inv_mu = 1.0 / mu;
        auto phi = [cp, inv_mu, z1, z0](const Vec& x, int label) {
            double base = 0.5 * x.squaredNorm();
            if (label != 1 || cp == 0.0) return base;
            double r = std::hypot(x(0), x(1));
            double th = std::atan2(x(1), x(0));
            // taper the excitation near the caps so the data stays near the
            // quadratic where the fit window ends
            double zmargin = std::min(z1 - x(2), x(2) - z0);
            double taper = std::clamp(zmargin / 0.5, 0.0, 1.0);
            return base + cp * std::pow(r, inv_mu) * std::sin(th * inv_mu) * taper;
        };
        sol = solve_dirichlet_labeled(dom, field_from(cfg.at("f")), phi, prm);
        doc.report["solve"] = solution_stats(sol);
    }
    doc.report["solve_seconds"] = now_seconds(t0);

    std::vector<double> x3s;
    if (cfg.contains("x3_samples"))
        for (const auto& v : cfg["x3_samples"]) x3s.push_back(v.get<double>());
    else
        x3s = {0.0};
    EdgeFitOptions fopt;
    fopt.r_min = cfg.value("r_min", 0.0);
    fopt.r_max = cfg.value("r_max", 0.0);
    ExpansionFit fit = edge_expansion_fit(sol, mu, x3s, fopt);
    doc.report["fit"] = {{"exponent", fit.exponent},
                         {"coefficient", fit.coefficient_c},
                         {"residual_decay_rate", fit.residual_decay_rate},
                         {"window", {fit.fit_window_lo, fit.fit_window_hi}}};
    CsvTable ct;
    ct.header = {"x3", "c"};
    for (auto [z, c] : fit.coefficient_samples) ct.rows.push_back({z, c});
    doc.series["edge-coefficient"] = ct;

    if (cfg.contains("expected_c")) {
        double tol = cfg.value("c_tol", 1e-3);
        double target = cfg["expected_c"].get<double>();
        push_verdict(doc, "coefficient-near", std::abs(fit.coefficient_c - target) <= tol,
                     fit.coefficient_c, target);
    }
    if (cfg.contains("abs_floor"))
        push_verdict(doc, "coefficient-small",
                     std::abs(fit.coefficient_c) <= cfg["abs_floor"].get<double>(),
                     fit.coefficient_c, cfg["abs_floor"].get<double>());
    if (cfg.contains("below"))
        push_verdict(doc, "coefficient-below", fit.coefficient_c < cfg["below"].get<double>(),
                     fit.coefficient_c, cfg["below"].get<double>());
    if (cfg.value("check_rate", false))
        push_verdict(doc, "residual-rate", fit.residual_decay_rate > fit.exponent,
                     fit.residual_decay_rate, fit.exponent);
}

void run_eigen(const Json& cfg, ResultDocument& doc) {
    const Json& d = cfg.at("spectrum");
    std::string type = d.value("type", "arc");
    EigenResult r;
    CsvTable tbl;
    tbl.header = {"mesh_h", "lambda1"};
    if (type == "arc") {
        r = lambda1_arc(d.at("opening").get<double>());
        tbl.rows.push_back({0.0, r.lambda1});
    } else {
        TangentCone cone = cone_from(d.at("cone"));
        double mesh_h = d.value("mesh_h", 0.1);
        auto ladder = lambda1_ladder(SphericalDomain::from_cone(cone), mesh_h,
                                     d.value("levels", 2));
        for (const auto& lr : ladder) tbl.rows.push_back({lr.mesh_size, lr.lambda1});
        r = lambda1_spherical(SphericalDomain::from_cone(cone), mesh_h);
    }
    doc.series["eigen-vs-mesh"] = tbl;
    doc.report["eigen"] = {{"lambda1", r.lambda1},
                           {"exponent_mu", r.exponent_mu},
                           {"mesh_size", r.mesh_size},
                           {"estimated_error", r.estimated_error},
                           {"lambda2", r.lambda2},
                           {"vertices", r.vertex_count},
                           {"exact", r.exact}};
    if (cfg.contains("expected_lambda1")) {
        double target = cfg["expected_lambda1"].get<double>();
        double rel = cfg.value("rel_tol", 0.01);
        push_verdict(doc, "lambda1", std::abs(r.lambda1 - target) <= rel * target, r.lambda1,
                     target);
    }
    if (cfg.contains("expected_mu")) {
        double target = cfg["expected_mu"].get<double>();
        double rel = cfg.value("rel_tol", 0.01);
        push_verdict(doc, "exponent", std::abs(r.exponent_mu - target) <= rel * target,
                     r.exponent_mu, target);
    }
}

void run_conditions(const Json& cfg, ResultDocument& doc) {
    Polytope P = polytope_from(cfg.at("domain"));
    // uniform or per-point hessian of the boundary data
    Mat H;
    if (cfg.contains("phi_hessian")) {
        const auto& hj = cfg["phi_hessian"];
        int n = static_cast<int>(hj.size());
        H = Mat(n, n);
        for (int i = 0; i < n; ++i)
            for (int j2 = 0; j2 < n; ++j2) H(i, j2) = hj[i][j2].get<double>();
    } else {
        H = Mat::Identity(P.dim, P.dim);
    }
    bool flip = cfg.value("flip_mixed_by_vertex_parity", false);
    auto phi_H = [H, flip, &P](const Vec& x) {
        if (!flip) return H;
        Mat out = H;
        Vec c = Vec::Zero(P.dim);
        for (const auto& v : P.vertices) c += v;
        c /= static_cast<double>(P.vertices.size());
        for (int i = 0; i < P.dim; ++i)
            for (int j = 0; j < P.dim; ++j)
                if (i != j) {
                    double si = x(i) < c(i) ? 1.0 : -1.0;
                    double sj = x(j) < c(j) ? 1.0 : -1.0;
                    out(i, j) *= si * sj;
                }
        return out;
    };
    ScalarField f = field_from(cfg.at("f"));
    auto f_fn = [&f](const Vec& x) { return f(x); };

    std::optional<std::function<Mat(const Vec&)>> sub;
    if (cfg.contains("sub_hessian")) {
        const auto& hj = cfg["sub_hessian"];
        int n = static_cast<int>(hj.size());
        Mat Hs(n, n);
        for (int i = 0; i < n; ++i)
            for (int j2 = 0; j2 < n; ++j2) Hs(i, j2) = hj[i][j2].get<double>();
        sub = [Hs](const Vec&) { return Hs; };
    }
    SkeletonJets jets = sample_skeleton_jets(P, phi_H, f_fn, sub ? &*sub : nullptr,
                                             cfg.value("per_edge", 33));
    ConditionReportDoc rep = condition_report(P, jets);
    doc.report["conditions"] = rep.to_json();
    if (cfg.contains("expected")) {
        for (const auto& [k, v] : cfg["expected"].items()) {
            bool want = v.get<bool>();
            bool got = false;
            for (const auto& e : rep.entries)
                if (e.name == k) got = e.pass;
            push_verdict(doc, "condition-" + k, got == want, got, want);
        }
    }
    if (cfg.value("expect_simple", true) != rep.simple)
        push_verdict(doc, "simple-flag", false, rep.simple, cfg.value("expect_simple", true));
}

void run_construct_bump(const Json& cfg, ResultDocument& doc) {
    double eps0 = cfg.value("eps0", 0.25);
    Piecewise1D g = vertex_bump_profile(eps0);
    double defect = g.continuity_defect();
    double min2 = g.min_second(1000);
    doc.report["bump"] = {{"eps0", eps0}, {"continuity_defect", defect}, {"min_second", min2}};
    push_verdict(doc, "continuity", defect <= 1e-12, defect, 1e-12);
    push_verdict(doc, "convexity", min2 >= -1e-12, min2, -1e-12);
    push_verdict(doc, "left-pin", g.value(eps0 / 2) == -eps0 / 2, g.value(eps0 / 2), -eps0 / 2);
    push_verdict(doc, "plateau-pin", std::abs(g.value(3 * eps0) + 1.25 * eps0) <= 1e-15,
                 g.value(3 * eps0), -1.25 * eps0);
}

void run_construct_subsolution(const Json& cfg, ResultDocument& doc) {
    Polytope P = polytope_from(cfg.value("domain", Json{{"type", "cube"}}));
    double mixed = cfg.value("mixed", 0.5);
    std::map<int, SecondOrderJet> quads;
    Vec c = Vec::Zero(P.dim);
    for (const auto& v : P.vertices) c += v;
    c /= static_cast<double>(P.vertices.size());
    for (const Face& vf : P.face_lattice[0]) {
        int id = vf.vertex_ids[0];
        const Vec& p = P.vertices[id];
        Vec s(P.dim);
        for (int a = 0; a < P.dim; ++a) s(a) = p(a) < c(a) ? 1.0 : -1.0;
        Mat H = (1.0 - mixed) * Mat::Identity(P.dim, P.dim) + mixed * s * s.transpose();
        quads[id] = SecondOrderJet::quadratic(p, H);
    }
    SubsolutionParams params;
    params.lambda0 = cfg.value("lambda0", params.lambda0);
    SubsolutionReport rep;
    BarrierFunction u = simple_subsolution_3d(P, quads, params, &rep);
    doc.report["subsolution"] = {{"worst_theta", rep.worst_theta},
                                 {"strong_a_ok", rep.strong_a_ok},
                                 {"min_hessian_eigenvalue", rep.min_hessian_eigenvalue},
                                 {"convex_ok", rep.convex_ok},
                                 {"description", u.description}};
    push_verdict(doc, "strong-a-at-vertices", rep.strong_a_ok, rep.worst_theta, M_PI / 2);
    push_verdict(doc, "convex-sample", rep.convex_ok, rep.min_hessian_eigenvalue, -1e-9);

    // derivative consistency on random probes
    std::mt19937 rng(cfg.value("seed", 1234));
    std::uniform_real_distribution<double> U(0.1, 0.9);
    int probes = cfg.value("probes", 1000);
    double hfd = 1e-4, worst = 0;
    for (int m = 0; m < probes; ++m) {
        Vec x(P.dim);
        for (int a = 0; a < P.dim; ++a) x(a) = U(rng);
        Mat Hm = u.hessian(x);
        for (int a = 0; a < P.dim; ++a) {
            Vec e = Vec::Zero(P.dim);
            e(a) = hfd;
            Vec gp = u.gradient(x + e), gm = u.gradient(x - e);
            for (int b = 0; b < P.dim; ++b)
                worst = std::max(worst, std::abs(Hm(a, b) - (gp(b) - gm(b)) / (2 * hfd)));
        }
    }
    doc.report["subsolution"]["fd_worst"] = worst;
    push_verdict(doc, "derivative-consistency", worst <= 1e-6, worst, 1e-6);
}

void run_construct_h(const Json& cfg, ResultDocument& doc) {
    double delta = cfg.value("delta", 0.4);
    Piecewise1D h = capped_curvature_profile(delta);
    double defect = h.continuity_defect();
    doc.report["h_profile"] = {{"delta", delta},
                               {"continuity_defect", defect},
                               {"second_at_zero", h.second(0.0)},
                               {"second_at_a", h.second(delta * delta * delta)}};
    push_verdict(doc, "continuity-exact", defect <= 1e-15, defect, 1e-15);
    push_verdict(doc, "curvature-cap", h.second(0.0) == 1.0, h.second(0.0), 1.0);
    double min2 = h.min_second(2000);
    push_verdict(doc, "convexity", min2 >= -1e-15, min2, 0.0);
}

void run_construct_barrier(const Json& cfg, ResultDocument& doc) {
    Polytope P = polytope_from(cfg.at("domain"));
    ScalarField f = field_from(cfg.at("f"));
    ScalarField phi = field_from(cfg.at("phi"));
    double mixed = cfg.value("jet_mixed", 0.0);
    std::map<int, SecondOrderJet> jets;
    double step = 1e-6;
    for (const Face& vf : P.face_lattice[0]) {
        int id = vf.vertex_ids[0];
        const Vec& p = P.vertices[id];
        Mat H = Mat::Identity(P.dim, P.dim);
        H(0, 1) = H(1, 0) = mixed;
        SecondOrderJet j = SecondOrderJet::quadratic(p, H);
        j.value = phi(p);
        for (int a = 0; a < P.dim; ++a) {
            Vec e = Vec::Zero(P.dim);
            e(a) = step;
            j.gradient(a) = (phi(p + e) - phi(p - e)) / (2 * step);
        }
        jets[id] = j;
    }
    BarrierParams params;
    params.delta = cfg.value("delta", 0.65);
    params.omega = cfg.value("omega", 0.05);
    params.grid_samples = cfg.value("grid_samples", 32);
    BarrierReport rep;
    bool threw = false;
    std::string code;
    try {
        no_subsolution_barrier(P, jets, f, phi, params, cfg.value("expect_pass", true) ? &rep : nullptr);
    } catch (const Error& e) {
        threw = true;
        code = e.code();
    }
    doc.report["barrier"] = {{"boundary_ok", rep.boundary_ok},
                             {"determinant_ok", rep.determinant_ok},
                             {"boundary_margin", rep.boundary_margin},
                             {"determinant_margin", rep.determinant_margin},
                             {"uniform_convexity_c", rep.uniform_convexity_c},
                             {"threw", threw},
                             {"error", code}};
    if (cfg.value("expect_pass", true)) {
        push_verdict(doc, "boundary-domination", rep.boundary_ok, rep.boundary_margin, 0.0);
        push_verdict(doc, "determinant-domination", rep.determinant_ok, rep.determinant_margin,
                     0.0);
    } else {
        std::string expect_code = cfg.value("expect_error", "DeterminantDominationFailed");
        push_verdict(doc, "expected-failure", threw && code == expect_code, threw ? 1 : 0, 1,
                     code);
    }
}

void run_counterexample(const Json& cfg, ResultDocument& doc) {
    int k_max = cfg.value("k_max", 12);
    CounterexampleRhs rhs = counterexample_rhs(k_max);
    bool anchors = true;
    double worst_anchor = 0;
    for (int k = 1; k <= std::min(k_max - 2, 10); ++k) {
        double t = 3.0 * std::ldexp(1.0, -(k + 2));
        double expect = 1.0 - 3.0 * std::ldexp(1.0, -(k + 2));
        worst_anchor = std::max({worst_anchor, std::abs(rhs.G.value(t) - expect),
                                 std::abs(rhs.G_tilde.value(t) - expect)});
        anchors = anchors && rhs.G.value(t) == expect && rhs.G_tilde.value(t) == expect;
    }
    push_verdict(doc, "dyadic-anchors-exact", anchors, worst_anchor, 0.0);
    bool ordered = true;
    double lip_g = 0, lip_gt = 0;
    CsvTable tbl;
    tbl.header = {"t", "G", "G_tilde"};
    for (int m = 0; m <= 10000; ++m) {
        double t = 0.5 * m / 10000.0;
        double a = rhs.G.value(t), b = rhs.G_tilde.value(t);
        ordered = ordered && a <= b + 1e-15 && a >= 0.5 - 1e-15 && b <= 1.0 + 1e-15;
        if (m % 50 == 0) tbl.rows.push_back({t, a, b});
        if (m < 10000) {
            double tm = 0.5 * (m + 0.5) / 10000.0;
            lip_g = std::max(lip_g, std::abs(rhs.G.derivative(tm)));
            lip_gt = std::max(lip_gt, std::abs(rhs.G_tilde.derivative(tm)));
        }
    }
    doc.series["rhs-profile"] = tbl;
    push_verdict(doc, "ordering-and-range", ordered, ordered ? 1 : 0, 1);
    push_verdict(doc, "lipschitz-G", lip_g <= 2.0 + 1e-12, lip_g, 2.0);
    push_verdict(doc, "lipschitz-Gt", lip_gt <= 3.0 + 1e-12, lip_gt, 3.0);
    // rescaled-window opening fractions for the record
    CsvTable mus;
    mus.header = {"k", "mu_k"};
    for (int k = 4; k <= 20; ++k) mus.rows.push_back({double(k), counterexample_window_mu(k)});
    doc.series["window-mu"] = mus;
    // the bundle: domain + right-hand sides + boundary data for the solver
    doc.report["bundle"] = {
        {"domain",
         {{"type", "polytope"},
          {"vertices",
           {{0, 0, 0}, {5, 0, 10}, {0, 5, 10}, {0, 0, 10}}}}},
        {"phi", "0.5*(x1^2+x2^2+x3^2)"},
        {"f", "G(x3) near the edge, extended positively"},
        {"note", "rescaled windows use mu_k from the window-mu series"}};
}

void run_interpolation(const Json& cfg, ResultDocument& doc) {
    int count = cfg.value("count", 100);
    int seed = cfg.value("seed", 17);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int grid = 2001;
    int violations = 0, tested = 0;
    double worst_ratio = 0;
    for (int trial = 0; trial < count; ++trial) {
        double coef[6];
        for (double& cc : coef) cc = U(rng);
        double alpha = (trial % 3 == 0) ? 0.5 : 1.0;
        auto fv = [&](double x) {
            double acc = 0;
            for (int k = 5; k >= 0; --k) acc = acc * x + coef[k];
            return acc;
        };
        auto fp = [&](double x) {
            double acc = 0;
            for (int k = 5; k >= 1; --k) acc = acc * x + k * coef[k];
            return acc;
        };
        double A = 0, supfp = 0;
        for (int m = 0; m < grid; ++m) {
            double x = double(m) / (grid - 1);
            A = std::max(A, std::abs(fv(x)));
            supfp = std::max(supfp, std::abs(fp(x)));
        }
        double sem = 0, sem_half = 0;
        for (int m = 0; m < grid; m += 8)
            for (int l = m + 1; l < grid; l += 8) {
                double x = double(m) / (grid - 1), y = double(l) / (grid - 1);
                double d = std::abs(fp(x) - fp(y));
                sem = std::max(sem, d / std::pow(y - x, alpha));
                sem_half = std::max(sem_half, d / std::pow(y - x, alpha / 2));
            }
        double B = supfp + sem;
        if (!(A > 0) || !(B > 0) || A > B) continue;
        ++tested;
        InterpolationBound bound = interpolation_bound(A, B, alpha);
        if (supfp > bound.sup_bound || sem_half > bound.holder_half_bound) ++violations;
        worst_ratio = std::max(worst_ratio,
                               std::max(supfp / bound.sup_bound,
                                        sem_half / bound.holder_half_bound));
    }
    doc.report["interpolation"] = {{"tested", tested},
                                   {"violations", violations},
                                   {"worst_ratio", worst_ratio}};
    push_verdict(doc, "zero-violations", violations == 0 && tested > count / 2, violations, 0);
}

void run_comparison_suite(const Json& cfg, ResultDocument& doc) {
    int count = cfg.value("count", 50);
    int seed = cfg.value("seed", 11);
    double h = cfg.value("h", 1.0 / 16);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    SolverParams prm = solver_params_from(cfg, h);
    int failures = 0;
    double worst = -1e30;
    for (int trial = 0; trial < count; ++trial) {
        double f1 = 0.6 + U(rng), gap = 0.1 + 0.4 * U(rng);
        double shift = 0.3 * U(rng);
        double b = 0.4 * (U(rng) - 0.5);
        auto phi1 = ScalarField::from(
            [b](const Vec& x) { return 0.5 * x.squaredNorm() + b * x(0) * x(1); });
        auto phi2 = ScalarField::from([b, shift](const Vec& x) {
            return 0.5 * x.squaredNorm() + b * x(0) * x(1) + shift;
        });
        DiscreteSolution u1 = solve_dirichlet(dom, ScalarField::constant(f1), phi1, prm);
        DiscreteSolution u2 = solve_dirichlet(dom, ScalarField::constant(f1 - gap), phi2, prm);
        double tau = 10 * h * h;
        double w = -1e30;
        for (size_t id = 0; id < u1.values.size(); ++id)
            if (u1.state[id] == 1) w = std::max(w, u1.values[id] - u2.values[id]);
        worst = std::max(worst, w);
        if (w > tau) ++failures;
    }
    doc.report["comparison"] = {{"pairs", count}, {"failures", failures}, {"worst_gap", worst}};
    push_verdict(doc, "monotone-data-comparison", failures == 0, failures, 0);
}

void run_c11_witness(const Json& cfg, ResultDocument& doc) {
    // the strict-sub-solution corner problem across three refinements: the largest
    // probed hessian eigenvalue must not trend upward
    auto dom = ComputationalDomain::box(vec2(0, 0), vec2(1, 1));
    double b = cfg.value("mixed", 0.4);
    auto quad = ScalarField::from(
        [b](const Vec& x) { return 0.5 * x.squaredNorm() - b * x(0) * x(1); });
    ScalarField f = ScalarField::constant(cfg.value("f", 0.75));
    CsvTable tbl;
    tbl.header = {"h", "max_eig"};
    std::vector<double> maxes;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        SolverParams prm = solver_params_from(cfg, h);
        DiscreteSolution sol = solve_dirichlet(dom, f, quad, prm);
        double mx = 0;
        for (int j = 2; j < sol.shape[1] - 2; ++j)
            for (int i = 2; i < sol.shape[0] - 2; ++i) {
                if (sol.state[sol.index(i, j, 0)] != 1) continue;
                if ((i * 7 + j * 13) % 11 != 0) continue;  // deterministic subsample
                Mat H = hessian_probe_matrix(sol, sol.point(i, j, 0));
                Eigen::SelfAdjointEigenSolver<Mat> es(H);
                mx = std::max(mx, es.eigenvalues().maxCoeff());
            }
        maxes.push_back(mx);
        tbl.rows.push_back({h, mx});
    }
    doc.series["c11-witness"] = tbl;
    bool ok = maxes.back() <= maxes.front() * 1.05;
    doc.report["c11"] = {{"max_eigs", maxes}};
    push_verdict(doc, "no-growth-trend", ok, maxes.back(), maxes.front() * 1.05);
}

void run_normalize_invariance(const Json& cfg, ResultDocument& doc) {
    int count = cfg.value("count", 100);
    std::mt19937 rng(cfg.value("seed", 7));
    std::normal_distribution<double> N(0, 1);
    Polytope P = unit_square();
    auto rand_mat = [&](int n) {
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = N(rng);
        return A;
    };
    double worst_orth = 0, worst_affine = 0, worst_scale = 0;
    for (int it = 0; it < count; ++it) {
        Mat A = rand_mat(2);
        Mat H = A * A.transpose() + 0.3 * Mat::Identity(2, 2);
        auto jet = SecondOrderJet::quadratic(vec2(0, 0), H);
        TangentCone cone = tangent_cone(P, vec2(0, 0));
        double canon = theta_functionals(jet, cone).theta_max;
        // orthogonal freedom
        Mat Q = Eigen::HouseholderQR<Mat>(rand_mat(2)).householderQ();
        Mat T = hessian_normalizer(H).linear * Q;
        worst_orth = std::max(worst_orth,
                              std::abs(canon - dihedral_angles(map_cone(cone, T.inverse()))
                                                   .theta_max));
        // affine covariance
        Mat S = rand_mat(2);
        while (std::abs(S.determinant()) < 0.2) S = rand_mat(2);
        std::vector<Vec> tv;
        Mat Sinv = S.inverse();
        for (const auto& v : P.vertices) tv.push_back(Sinv * v);
        Polytope Q2 = build_polytope_from_vertices(tv);
        auto tjet = SecondOrderJet::quadratic(Vec::Zero(2), S.transpose() * H * S);
        worst_affine = std::max(worst_affine,
                                std::abs(canon - theta_functionals(tjet, Q2).theta_max));
        // scaling invariance
        auto sjet = SecondOrderJet::quadratic(vec2(0, 0), Mat(37.5 * H));
        worst_scale =
            std::max(worst_scale, std::abs(canon - theta_functionals(sjet, cone).theta_max));
    }
    doc.report["invariance"] = {{"count", count},
                                {"worst_orthogonal", worst_orth},
                                {"worst_affine", worst_affine},
                                {"worst_scaling", worst_scale}};
    push_verdict(doc, "orthogonal-invariance", worst_orth < 1e-10, worst_orth, 1e-10);
    push_verdict(doc, "affine-covariance", worst_affine < 1e-7, worst_affine, 1e-7);
    push_verdict(doc, "scaling-invariance", worst_scale < 1e-10, worst_scale, 1e-10);
}

void run_geometry_suite(const Json& cfg, ResultDocument& doc) {
    (void)cfg;
    push_verdict(doc, "cube-simple", is_simple(unit_cube()), 1, 1);
    push_verdict(doc, "octahedron-not-simple", !is_simple(regular_octahedron()), 0, 0);
    push_verdict(doc, "octahedron-simplicial", is_simplicial(regular_octahedron()), 1, 1);
    push_verdict(doc, "cube-not-simplicial", !is_simplicial(unit_cube()), 0, 0);
    double worst = 0;
    Polytope P = unit_square();
    for (double b : {-0.5, 0.0, 0.5}) {
        Mat H(2, 2);
        H << 1, b, b, 1;
        double theta = theta_functionals(SecondOrderJet::quadratic(vec2(0, 0), H), P).theta_max;
        worst = std::max(worst, std::abs(theta - std::acos(b)));
    }
    doc.report["theta_vs_arccos_worst"] = worst;
    push_verdict(doc, "theta-arccos", worst <= 1e-9, worst, 1e-9);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string CsvTable::to_string() const {
    std::ostringstream ss;
    for (size_t i = 0; i < header.size(); ++i) ss << (i ? "," : "") << header[i];
    ss << "\n";
    ss.setf(std::ios::fmtflags(0), std::ios::floatfield);
    ss.precision(17);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) ss << (i ? "," : "") << row[i];
        ss << "\n";
    }
    return ss.str();
}

bool ResultDocument::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

Json ResultDocument::to_json() const {
    Json j;
    j["id"] = id;
    j["config"] = config_echo;
    j["report"] = report;
    j["wall_seconds"] = wall_seconds;
    j["all_pass"] = all_pass();
    for (const auto& v : verdicts)
        j["verdicts"].push_back({{"name", v.name},
                                 {"pass", v.pass},
                                 {"value", v.value},
                                 {"threshold", v.threshold},
                                 {"note", v.note}});
    for (const auto& [name, tbl] : series) j["series"].push_back(name);
    return j;
}

ResultDocument run_experiment(const Json& config) {
    ResultDocument doc;
    doc.id = config.value("id", "experiment");
    doc.config_echo = config;
    auto t0 = Clock::now();
    std::string kind = config.value("kind", "solve");
    if (kind == "solve") run_solve(config, doc);
    else if (kind == "truncated-cone") run_truncated_cone(config, doc);
    else if (kind == "corner") run_corner(config, doc);
    else if (kind == "edge-fit") run_edge_fit(config, doc);
    else if (kind == "eigen") run_eigen(config, doc);
    else if (kind == "conditions") run_conditions(config, doc);
    else if (kind == "construct-bump") run_construct_bump(config, doc);
    else if (kind == "construct-subsolution") run_construct_subsolution(config, doc);
    else if (kind == "construct-h") run_construct_h(config, doc);
    else if (kind == "construct-barrier") run_construct_barrier(config, doc);
    else if (kind == "counterexample") run_counterexample(config, doc);
    else if (kind == "interpolation") run_interpolation(config, doc);
    else if (kind == "comparison-suite") run_comparison_suite(config, doc);
    else if (kind == "c11-witness") run_c11_witness(config, doc);
    else if (kind == "normalize-invariance") run_normalize_invariance(config, doc);
    else if (kind == "geometry-suite") run_geometry_suite(config, doc);
    else fail("InconsistentInput", "unknown experiment kind '" + kind + "'");
    doc.wall_seconds = now_seconds(t0);
    return doc;
}

CsvTable emit_plot_data(const ResultDocument& result, const std::string& kind) {
    auto it = result.series.find(kind);
    if (it == result.series.end())
        fail("SeriesMissing", "result has no series '" + kind + "'");
    return it->second;
}

void write_result(const ResultDocument& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/config.json");
        out << result.config_echo.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir + "/summary.json");
        out << result.to_json().dump(2) << "\n";
    }
    for (const auto& [name, tbl] : result.series) {
        std::ofstream out(out_dir + "/" + name + ".csv");
        out << tbl.to_string();
    }
}

SkeletonJets sample_skeleton_jets(const Polytope& P, const std::function<Mat(const Vec&)>& phi_H,
                                  const std::function<double(const Vec&)>& f,
                                  const std::function<Mat(const Vec&)>* sub_H, int per_edge) {
    SkeletonJets jets;
    jets.has_sub = sub_H != nullptr;
    auto add = [&](const Vec& x, bool low) {
        jets.points.push_back(x);
        jets.phi_hessians.push_back(phi_H(x));
        jets.f_values.push_back(f(x));
        jets.low_skeleton.push_back(low);
        if (sub_H) {
            Mat Hs = (*sub_H)(x);
            jets.sub_hessians.push_back(Hs);
            jets.sub_det_minus_f.push_back(Hs.determinant() - f(x));
        }
    };
    // vertices: the (n-3)-part for n=3; for n=2 the conditions are evaluated there too
    for (const Face& vf : P.face_lattice[0]) add(P.vertices[vf.vertex_ids[0]], true);
    if (P.dim >= 3) {
        for (const Face& e : P.face_lattice[1]) {
            const Vec& a = P.vertices[e.vertex_ids[0]];
            const Vec& b = P.vertices[e.vertex_ids[1]];
            for (int m = 1; m <= per_edge; ++m) {
                double t = static_cast<double>(m) / (per_edge + 1);
                add(a + t * (b - a), false);
            }
        }
    }
    return jets;
}

ConditionReportDoc condition_report(const Polytope& P, const SkeletonJets& jets,
                                    double tau_strict) {
    if (jets.points.empty()) fail("IncompleteJets", "no skeleton samples supplied");
    ConditionReportDoc rep;
    rep.simple = is_simple(P);
    rep.has_sub = jets.has_sub;

    ConditionEntry C1{"C1"}, C2{"C2"}, C3{"C3"}, C4{"C4"}, C5{"C5"};
    C1.pass = C2.pass = C3.pass = C4.pass = C5.pass = true;
    C1.worst = 0;
    C2.worst = 0;  // worst Theta margin violation
    C3.worst = 0;
    C4.worst = std::numeric_limits<double>::infinity();
    C5.worst = 0;

    std::vector<Eps0Input> eps_in;
    for (size_t m = 0; m < jets.points.size(); ++m) {
        const Vec& x = jets.points[m];
        bool low = jets.low_skeleton[m];
        if (low) {
            C1.applicable = true;
            double gap = std::abs(jets.phi_hessians[m].determinant() - jets.f_values[m]);
            if (gap > C1.worst) {
                C1.worst = gap;
                C1.worst_point = x;
            }
            if (gap > 1e-9) C1.pass = false;

            auto jet = SecondOrderJet::quadratic(x, jets.phi_hessians[m]);
            double theta = theta_functionals(jet, P).theta_max;
            C2.applicable = C3.applicable = true;
            double excess = theta - M_PI / 2;
            if (excess > C2.worst) {
                C2.worst = excess;
                C2.worst_point = x;
            }
            if (excess > 1e-12) C2.pass = false;
            double strict_excess = theta - (M_PI / 2 - tau_strict);
            if (strict_excess > C3.worst) {
                C3.worst = strict_excess;
                C3.worst_point = x;
            }
            if (strict_excess >= 0) C3.pass = false;
        } else if (jets.has_sub) {
            C4.applicable = C5.applicable = true;
            double gap = jets.sub_det_minus_f[m];
            if (gap < C4.worst) {
                C4.worst = gap;
                C4.worst_point = x;
            }
            if (gap <= 0) C4.pass = false;
            auto jet = SecondOrderJet::quadratic(x, jets.sub_hessians[m]);
            double theta = theta_functionals(jet, P).theta_max;
            double strict_excess = theta - (M_PI / 2 - tau_strict);
            if (strict_excess > C5.worst) {
                C5.worst = strict_excess;
                C5.worst_point = x;
            }
            if (strict_excess >= 0) C5.pass = false;
        }
        // epsilon0 over the sub-solution jets when supplied, else over phi jets
        Eps0Input e;
        e.point = x;
        e.jet = SecondOrderJet::quadratic(
            x, jets.has_sub && !low ? jets.sub_hessians[m] : jets.phi_hessians[m]);
        e.on_low_skeleton = low;
        if (jets.has_sub && !low) {
            e.has_gap = true;
            e.gap = jets.sub_det_minus_f[m];
        }
        eps_in.push_back(e);
    }
    // for n = 2 the vertex set is also the (n-2)\(n-3) part: evaluate C4/C5 there
    if (P.dim == 2 && jets.has_sub) {
        for (size_t m = 0; m < jets.points.size(); ++m) {
            C4.applicable = C5.applicable = true;
            double gap = jets.sub_det_minus_f[m];
            if (gap < C4.worst) {
                C4.worst = gap;
                C4.worst_point = jets.points[m];
            }
            if (gap <= 0) C4.pass = false;
            auto jet = SecondOrderJet::quadratic(jets.points[m], jets.sub_hessians[m]);
            double theta = theta_functionals(jet, P).theta_max;
            double strict_excess = theta - (M_PI / 2 - tau_strict);
            if (strict_excess > C5.worst) {
                C5.worst = strict_excess;
                C5.worst_point = jets.points[m];
            }
            if (strict_excess >= 0) C5.pass = false;
        }
    }
    if (!rep.simple) {
        C2.pass = false;
        C2.note = "polytope is not simple";
        C3.pass = false;
    }
    rep.eps0_angle = epsilon0(P, eps_in, Eps0Variant::AngleOnly);
    rep.eps0_mixed = epsilon0(P, eps_in, Eps0Variant::MaxWithGap);
    rep.entries = {C1, C2, C3, C4, C5};
    return rep;
}

Json ConditionReportDoc::to_json() const {
    Json j;
    j["simple"] = simple;
    j["eps0_angle"] = eps0_angle;
    j["eps0_mixed"] = eps0_mixed;
    for (const auto& e : entries) {
        Json ej;
        ej["name"] = e.name;
        ej["applicable"] = e.applicable;
        ej["pass"] = e.pass;
        ej["worst"] = e.worst;
        if (e.worst_point.size()) {
            for (int a = 0; a < e.worst_point.size(); ++a)
                ej["worst_point"].push_back(e.worst_point(a));
        }
        if (!e.note.empty()) ej["note"] = e.note;
        j["conditions"].push_back(ej);
    }
    return j;
}

}  // namespace polyma
