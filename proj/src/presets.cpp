#include <map>

#include "polyma/harness.hpp"

namespace polyma {

namespace {

struct Preset {
    std::string description;
    Json config;
};

const std::map<std::string, Preset>& registry() {
    static const std::map<std::string, Preset> presets = [] {
        std::map<std::string, Preset> r;

        r["square-exact-quadratic"] = {
            "unit-square solve against the exact round quadratic on an h-ladder",
            Json{{"id", "square-exact-quadratic"},
                 {"kind", "solve"},
                 {"domain", {{"type", "square"}}},
                 {"f", 1.0},
                 {"phi", "0.5*(x1^2+x2^2)"},
                 {"reference", "0.5*(x1^2+x2^2)"},
                 {"reference_factor", 5.0},
                 {"grid", {{"ladder", {0.03125, 0.015625, 0.0078125}}}}}};

        r["quarterplane-liouville"] = {
            "truncated quarter-plane cone, det = 3/4: solution under the mixed quadratic",
            Json{{"id", "quarterplane-liouville"},
                 {"kind", "truncated-cone"},
                 {"cone", {{"type", "quarter2d"}}},
                 {"radius", 4.0},
                 {"c", 0.75},
                 {"grid", {{"h", 0.0625}}},
                 {"upper", "0.5*(x1^2+x2^2)+0.5*x1*x2"},
                 {"upper_slack_h", 2.0}}};

        r["quarterplane-rank-one"] = {
            "truncated quarter-plane cone, det = 1 with the rank-one comparison data",
            Json{{"id", "quarterplane-rank-one"},
                 {"kind", "solve"},
                 {"domain", {{"type", "cone"}, {"cone", {{"type", "quarter2d"}}}, {"radius", 4.0}}},
                 {"f", 1.0},
                 {"phi", "0.5*(x1^2+x2^2)+x1*x2"},
                 {"upper", "0.5*(x1^2+x2^2)+x1*x2"},
                 {"upper_slack_h", 2.0},
                 {"grid", {{"h", 0.0625}}}}};

        r["conic-pinned"] = {
            "pinned conic solve: v(p0) = 0 and the solution dips below the model quadratic",
            Json{{"id", "conic-pinned"},
                 {"kind", "truncated-cone"},
                 {"cone", {{"type", "quarter2d"}}},
                 {"radius", 4.0},
                 {"c", 1.0},
                 {"grid", {{"h", 0.0625}}},
                 {"pin",
                  {{"p0", {0.7071067811865476, 0.7071067811865476}},
                   {"a", 0.0},
                   {"tol", 4e-4},
                   {"verdict_tol", 1e-3}}},
                 {"check_dip", true},
                 {"dip_threshold", -0.1}}};

        auto corner_trichotomy = [](double eps, const std::string& cls, double u12, bool spread) {
            Json cfg{{"id", "corner-trichotomy"},
                     {"kind", "corner"},
                     {"domain", {{"type", "square"}}},
                     {"f", 0.75},
                     {"phi", "0.5*(x1^2+x2^2)-" + std::to_string(0.5 + eps) + "*x1*x2"},
                     {"grid", {{"h", 0.0078125}}},
                     {"corner", {0.0, 0.0}},
                     {"expected_class", cls}};
            if (cls != "NotC2") {
                cfg["expected_u12"] = u12;
                cfg["u12_tol"] = 0.05;
            }
            if (spread) cfg["min_spread"] = 0.2;
            return cfg;
        };
        r["corner-trichotomy-eps0"] = {"square corner trichotomy at eps = 0: the sub-solution branch",
                              corner_trichotomy(0.0, "EqualsSubsolution", -0.5, false)};
        r["corner-trichotomy-eps0"].config["id"] = "corner-trichotomy-eps0";
        r["corner-trichotomy-epsneg"] = {"square corner trichotomy at eps = -0.1: the big-root branch",
                                corner_trichotomy(-0.1, "PlusRootBranch", 0.5, false)};
        r["corner-trichotomy-epsneg"].config["id"] = "corner-trichotomy-epsneg";
        r["corner-trichotomy-epspos"] = {"square corner trichotomy at eps = +0.2: no C2 extension",
                                corner_trichotomy(0.2, "NotC2", 0.0, true)};
        r["corner-trichotomy-epspos"].config["id"] = "corner-trichotomy-epspos";

        r["arc-quarter"] = {"exact first eigenvalue of the quarter-circle arc",
                            Json{{"id", "arc-quarter"},
                                 {"kind", "eigen"},
                                 {"spectrum", {{"type", "arc"}, {"opening", M_PI / 2}}},
                                 {"expected_lambda1", 4.0},
                                 {"rel_tol", 1e-12},
                                 {"expected_mu", 2.0}}};

        r["quarterspace-eigen"] = {
            "quarter-space lune on the sphere: lambda1 = 6 within one percent",
            Json{{"id", "quarterspace-eigen"},
                 {"kind", "eigen"},
                 {"spectrum",
                  {{"type", "fem"}, {"cone", {{"type", "quarterspace3d"}}}, {"mesh_h", 0.1}}},
                 {"expected_lambda1", 6.0},
                 {"rel_tol", 0.01}}};

        r["octant-eigen"] = {"octant spherical triangle: lambda1 = 12 within one percent",
                             Json{{"id", "octant-eigen"},
                                  {"kind", "eigen"},
                                  {"spectrum",
                                   {{"type", "fem"}, {"cone", {{"type", "octant"}}},
                                    {"mesh_h", 0.1}}},
                                  {"expected_lambda1", 12.0},
                                  {"rel_tol", 0.01}}};

        r["lune-third-eigen"] = {
            "lune of opening pi/3: homogeneity exponent 3 within one percent",
            Json{{"id", "lune-third-eigen"},
                 {"kind", "eigen"},
                 {"spectrum",
                  {{"type", "fem"},
                   {"cone", {{"type", "wedge"}, {"mu", 1.0 / 3.0}, {"dim", 3}}},
                   {"mesh_h", 0.1}}},
                 {"expected_mu", 3.0},
                 {"rel_tol", 0.01}}};

        r["geometry-suite"] = {"simple/simplicial predicates and corner angles",
                               Json{{"id", "geometry-suite"}, {"kind", "geometry-suite"}}};

        r["normalize-invariance"] = {
            "orthogonal/affine/scaling invariance of the angle functionals on random data",
            Json{{"id", "normalize-invariance"},
                 {"kind", "normalize-invariance"},
                 {"count", 100},
                 {"seed", 7}}};

        r["vertex-bump"] = {"certificate for the convex profile of the vertex bump",
                            Json{{"id", "vertex-bump"},
                                 {"kind", "construct-bump"},
                                 {"eps0", 0.25}}};

        r["cube-subsolution"] = {
            "cube sub-solution scaffold: strong condition at all eight vertices",
            Json{{"id", "cube-subsolution"},
                 {"kind", "construct-subsolution"},
                 {"domain", {{"type", "cube"}}},
                 {"mixed", 0.5},
                 {"probes", 1000},
                 {"seed", 1234}}};

        r["counterexample-rhs"] = {
            "dyadic Lipschitz right-hand sides with exact anchor values",
            Json{{"id", "counterexample-rhs"}, {"kind", "counterexample"}, {"k_max", 12}}};

        r["h-profile"] = {"exact kinked-curvature profile of the no-sub-solution barrier",
                          Json{{"id", "h-profile"}, {"kind", "construct-h"}, {"delta", 0.4}}};

        r["barrier-square-small"] = {
            "no-sub-solution barrier on the square with a small right-hand side",
            Json{{"id", "barrier-square-small"},
                 {"kind", "construct-barrier"},
                 {"domain", {{"type", "square"}}},
                 {"phi", "0.5*(x1^2+x2^2)"},
                 {"f", 0.01},
                 {"delta", 0.65},
                 {"omega", 0.05},
                 {"expect_pass", true}}};

        r["barrier-square-large"] = {
            "no-sub-solution barrier rejects a large right-hand side",
            Json{{"id", "barrier-square-large"},
                 {"kind", "construct-barrier"},
                 {"domain", {{"type", "square"}}},
                 {"phi", "0.5*(x1^2+x2^2)"},
                 {"f", 0.9},
                 {"delta", 0.65},
                 {"omega", 0.05},
                 {"expect_pass", false},
                 {"expect_error", "DeterminantDominationFailed"}}};

        r["wedge-oracle"] = {
            "edge-expansion fit recovers a planted coefficient on an analytic field",
            Json{{"id", "wedge-oracle"},
                 {"kind", "edge-fit"},
                 {"mode", "oracle"},
                 {"mu", 0.4},
                 {"planted_c", 0.3},
                 {"planted_q", 0.5},
                 {"grid", {{"h", 1.0 / 24}}},
                 {"x3_samples", {0.0, 0.5, -0.5}},
                 {"expected_c", 0.3},
                 {"c_tol", 1e-3},
                 {"check_rate", true}}};

        r["wedge-unperturbed"] = {
            "coarse wedge solve with quadratic data: no singular mode is excited",
            Json{{"id", "wedge-unperturbed"},
                 {"kind", "edge-fit"},
                 {"mode", "solve"},
                 {"mu", 0.4},
                 {"f", 1.0},
                 {"grid", {{"h", 1.0 / 12}}},
                 {"x3_samples", {0.0}},
                 {"abs_floor", 1e-3}}};

        r["wedge-perturbed"] = {
            "coarse wedge solve with the singular mode excited through the outer data",
            Json{{"id", "wedge-perturbed"},
                 {"kind", "edge-fit"},
                 {"mode", "solve"},
                 {"mu", 0.4},
                 {"f", 1.0},
                 {"outer_coeff", -0.1},
                 {"grid", {{"h", 1.0 / 12}}},
                 {"x3_samples", {0.0}},
                 {"below", -0.01}}};

        r["interpolation-suite"] = {
            "first-derivative and half-exponent bounds on sampled polynomials",
            Json{{"id", "interpolation-suite"},
                 {"kind", "interpolation"},
                 {"count", 100},
                 {"seed", 17}}};

        r["comparison-suite"] = {
            "discrete comparison principle on randomized data pairs",
            Json{{"id", "comparison-suite"},
                 {"kind", "comparison-suite"},
                 {"count", 50},
                 {"seed", 11},
                 {"h", 1.0 / 16}}};

        r["c11-witness"] = {
            "largest probed hessian eigenvalue stays bounded across refinements",
            Json{{"id", "c11-witness"}, {"kind", "c11-witness"}, {"mixed", 0.4}, {"f", 0.75}}};

        r["cube-conditions"] = {
            "structured condition verdicts on the cube with the round quadratic",
            Json{{"id", "cube-conditions"},
                 {"kind", "conditions"},
                 {"domain", {{"type", "cube"}}},
                 {"f", 1.0},
                 {"expected", {{"C1", true}, {"C2", true}, {"C3", false}}},
                 {"expect_simple", true}}};

        r["square-conditions"] = {
            "structured condition verdicts on the square with a favourable mixed term",
            Json{{"id", "square-conditions"},
                 {"kind", "conditions"},
                 {"domain", {{"type", "square"}}},
                 {"phi_hessian", {{1.0, 0.5}, {0.5, 1.0}}},
                 {"flip_mixed_by_vertex_parity", true},
                 {"f", 0.75},
                 {"expected", {{"C1", true}, {"C2", true}, {"C3", true}}},
                 {"expect_simple", true}}};

        r["octahedron-conditions"] = {
            "the non-simple polytope is flagged and the angle condition fails",
            Json{{"id", "octahedron-conditions"},
                 {"kind", "conditions"},
                 {"domain", {{"type", "octahedron"}}},
                 {"f", 1.0},
                 {"expected", {{"C2", false}}},
                 {"expect_simple", false}}};

        return r;
    }();
    return presets;
}

}  // namespace

std::vector<std::string> list_presets() {
    std::vector<std::string> names;
    for (const auto& [name, p] : registry()) names.push_back(name);
    return names;
}

std::string preset_description(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end()) fail("InconsistentInput", "unknown preset '" + name + "'");
    return it->second.description;
}

Json preset_config(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end()) fail("InconsistentInput", "unknown preset '" + name + "'");
    return it->second.config;
}

ResultDocument run_preset(const std::string& name) {
    return run_experiment(preset_config(name));
}

}  // namespace polyma
