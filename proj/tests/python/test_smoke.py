import math

import pytest

import polyma


def test_polytope_predicates():
    cube = polyma.unit_cube()
    assert cube.is_simple() and not cube.is_simplicial()
    assert cube.face_counts() == [8, 12, 6]
    octa = polyma.regular_octahedron()
    assert not octa.is_simple() and octa.is_simplicial()
    assert len(octa.adjacent_facet_pairs()) == 12


def test_polytope_from_vertices_and_document():
    square = polyma.Polytope([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert square.n_vertices == 4 and square.n_facets == 4
    assert "halfspaces" in square.document()


def test_theta_and_a_condition():
    square = polyma.unit_square()
    for b in (-0.5, 0.0, 0.5):
        theta, _ = polyma.theta_at(square, [0.0, 0.0], [[1.0, b], [b, 1.0]])
        assert abs(theta - math.acos(b)) < 1e-9
    assert polyma.check_a_condition(square, [0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]], True)
    assert not polyma.check_a_condition(square, [0.0, 0.0], [[1.0, -0.5], [-0.5, 1.0]])


def test_eigenvalues():
    lam, mu = polyma.lambda1_arc(math.pi / 2)
    assert lam == pytest.approx(4.0) and mu == pytest.approx(2.0)
    res = polyma.lambda1_spherical([[1, 0, 0], [0, 1, 0], [0, 0, 1]], 0.15)
    assert res["lambda1"] == pytest.approx(12.0, rel=0.02)
    assert polyma.exponent_from_lambda(12.0, 3) == pytest.approx(3.0)


def test_mixed_root_and_interpolation():
    value, degenerate = polyma.mixed_root_big([[1.0, 0.0], [0.0, 1.0]], 0.75)
    assert value == pytest.approx(0.5) and not degenerate
    sup, _ = polyma.interpolation_bound(1.0, 1.0, 1.0)
    assert sup == pytest.approx(6.0)


def test_profiles():
    g = polyma.vertex_bump_profile(0.25)
    assert g.value(0.125) == pytest.approx(-0.125)
    assert g.continuity_defect() <= 1e-12
    assert g.min_second() >= -1e-12
    G, Gt = polyma.counterexample_rhs(8)
    t = 3.0 / 2**5
    assert G.value(t) == 1.0 - t and Gt.value(t) == 1.0 - t
    assert 1.0 / 3.0 < polyma.counterexample_window_mu(10) < 0.5


def test_expression_and_a_mu():
    r = polyma.evaluate_expression("0.5*(x1^2+x2^2)+min(x1,x2)", [2.0, 1.0])
    assert r == pytest.approx(3.5)
    A = polyma.a_mu_matrix(0.5, 2)
    assert A[0][1] == pytest.approx(0.0) and A[1][1] == pytest.approx(1.0)


def test_run_small_experiment():
    summary = polyma.run_experiment(
        {
            "id": "py-smoke",
            "kind": "solve",
            "domain": {"type": "square"},
            "f": 1.0,
            "phi": "0.5*(x1^2+x2^2)",
            "reference": "0.5*(x1^2+x2^2)",
            "grid": {"h": 0.125},
        }
    )
    assert summary["all_pass"]
    assert summary["report"]["grids"][0]["convexity_violations"] == 0


def test_run_preset():
    assert "geometry-suite" in polyma.list_presets()
    summary = polyma.run_preset("geometry-suite")
    assert summary["all_pass"]


def test_error_mapping():
    with pytest.raises(polyma.PolymaError):
        polyma.lambda1_arc(0.0)
