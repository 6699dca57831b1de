#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polyma/harness.hpp"

namespace py = pybind11;
using namespace polyma;

namespace {

Polytope polytope_from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<Vec> pts;
    for (const auto& row : rows) {
        Vec v(row.size());
        for (size_t i = 0; i < row.size(); ++i) v(i) = row[i];
        pts.push_back(v);
    }
    return build_polytope_from_vertices(pts);
}

}  // namespace

PYBIND11_MODULE(_polyma, m) {
    m.doc() = "desk-scale laboratory for Dirichlet Monge-Ampere problems on convex polytopes";

    py::register_exception<Error>(m, "PolymaError");

    py::class_<Polytope>(m, "Polytope")
        .def(py::init([](const std::vector<std::vector<double>>& vertices) {
                 return polytope_from_rows(vertices);
             }),
             py::arg("vertices"))
        .def_property_readonly("dim", [](const Polytope& P) { return P.dim; })
        .def_property_readonly("n_vertices",
                               [](const Polytope& P) { return P.vertices.size(); })
        .def_property_readonly("n_facets", [](const Polytope& P) { return P.facets.size(); })
        .def("face_counts",
             [](const Polytope& P) {
                 std::vector<size_t> counts;
                 for (const auto& level : P.face_lattice) counts.push_back(level.size());
                 return counts;
             })
        .def("is_simple", [](const Polytope& P) { return is_simple(P); })
        .def("is_simplicial", [](const Polytope& P) { return is_simplicial(P); })
        .def("adjacent_facet_pairs", [](const Polytope& P) { return adjacent_facet_pairs(P); })
        .def("document", [](const Polytope& P) { return write_polytope(P); });

    m.def("unit_square", &unit_square);
    m.def("unit_cube", &unit_cube);
    m.def("regular_octahedron", &regular_octahedron);

    m.def(
        "theta_at",
        [](const Polytope& P, const Vec& corner, const Mat& hessian) {
            AngleReport r = theta_functionals(SecondOrderJet::quadratic(corner, hessian), P);
            return py::make_tuple(r.theta_max, r.theta_min);
        },
        py::arg("polytope"), py::arg("corner"), py::arg("hessian"),
        "max/min dihedral angle of the hessian-normalized tangent cone");

    m.def(
        "check_a_condition",
        [](const Polytope& P, const Vec& corner, const Mat& hessian, bool strong) {
            return check_a_condition(SecondOrderJet::quadratic(corner, hessian), P, strong);
        },
        py::arg("polytope"), py::arg("corner"), py::arg("hessian"), py::arg("strong") = false);

    m.def(
        "a_mu_matrix",
        [](double mu, int n) { return Mat(a_mu_map(mu, n).linear); },
        py::arg("mu"), py::arg("n") = 2);

    m.def(
        "lambda1_arc",
        [](double opening) {
            EigenResult r = lambda1_arc(opening);
            return py::make_tuple(r.lambda1, r.exponent_mu);
        },
        py::arg("opening"));

    m.def(
        "lambda1_spherical",
        [](const std::vector<Vec>& normals, double mesh_h) {
            EigenResult r = lambda1_spherical(SphericalDomain::polygon(normals), mesh_h);
            py::dict d;
            d["lambda1"] = r.lambda1;
            d["exponent_mu"] = r.exponent_mu;
            d["mesh_size"] = r.mesh_size;
            d["estimated_error"] = r.estimated_error;
            d["lambda2"] = r.lambda2;
            return d;
        },
        py::arg("normals"), py::arg("mesh_h") = 0.1);

    m.def("exponent_from_lambda", &exponent_from_lambda, py::arg("lambda1"), py::arg("n"));

    m.def(
        "mixed_root_big",
        [](const Mat& hessian, double f) {
            MixedRoot r = mixed_root_big(SecondOrderJet::quadratic(Vec::Zero(hessian.rows()),
                                                                   hessian),
                                         f);
            return py::make_tuple(r.value, r.degenerate);
        },
        py::arg("hessian"), py::arg("f"));

    m.def(
        "interpolation_bound",
        [](double A, double B, double alpha) {
            InterpolationBound b = interpolation_bound(A, B, alpha);
            return py::make_tuple(b.sup_bound, b.holder_half_bound);
        },
        py::arg("A"), py::arg("B"), py::arg("alpha"));

    py::class_<Piecewise1D>(m, "Piecewise1D")
        .def("value", &Piecewise1D::value)
        .def("derivative", &Piecewise1D::derivative)
        .def("second", &Piecewise1D::second)
        .def("continuity_defect", &Piecewise1D::continuity_defect)
        .def("min_second", &Piecewise1D::min_second, py::arg("samples_per_piece") = 1000)
        .def_property_readonly("breakpoints",
                               [](const Piecewise1D& p) { return p.breakpoints; });

    m.def("vertex_bump_profile", &vertex_bump_profile, py::arg("eps0"));
    m.def("capped_curvature_profile", &capped_curvature_profile, py::arg("delta"));
    m.def(
        "counterexample_rhs",
        [](int k_max) {
            CounterexampleRhs r = counterexample_rhs(k_max);
            return py::make_tuple(r.G, r.G_tilde);
        },
        py::arg("k_max") = 12);
    m.def("counterexample_window_mu", &counterexample_window_mu, py::arg("k"));

    m.def(
        "evaluate_expression",
        [](const std::string& text, const Vec& x) { return Expression::parse(text).eval(x); },
        py::arg("text"), py::arg("x"));

    m.def("list_presets", &list_presets);
    m.def("preset_description", &preset_description, py::arg("name"));
    m.def(
        "run_preset_json",
        [](const std::string& name) { return run_preset(name).to_json().dump(); },
        py::arg("name"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "run_config_json",
        [](const std::string& config) {
            return run_experiment(Json::parse(config)).to_json().dump();
        },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
}
