"""Desk-scale laboratory for Dirichlet Monge-Ampere problems on convex polytopes.

The heavy lifting lives in the compiled module `_polyma` (shipped inside this
package by the wheel build, or next to it on the build-tree path); this package
adds JSON-decoding conveniences for the experiment runner.
"""
import json as _json

try:  # wheel layout: polyma/_polyma.so
    from . import _polyma as _impl
except ImportError:  # build-tree layout: _polyma.so on PYTHONPATH
    import _polyma as _impl

Piecewise1D = _impl.Piecewise1D
Polytope = _impl.Polytope
PolymaError = _impl.PolymaError
a_mu_matrix = _impl.a_mu_matrix
capped_curvature_profile = _impl.capped_curvature_profile
check_a_condition = _impl.check_a_condition
counterexample_rhs = _impl.counterexample_rhs
counterexample_window_mu = _impl.counterexample_window_mu
evaluate_expression = _impl.evaluate_expression
exponent_from_lambda = _impl.exponent_from_lambda
interpolation_bound = _impl.interpolation_bound
lambda1_arc = _impl.lambda1_arc
lambda1_spherical = _impl.lambda1_spherical
list_presets = _impl.list_presets
mixed_root_big = _impl.mixed_root_big
preset_description = _impl.preset_description
regular_octahedron = _impl.regular_octahedron
run_config_json = _impl.run_config_json
run_preset_json = _impl.run_preset_json
theta_at = _impl.theta_at
unit_cube = _impl.unit_cube
unit_square = _impl.unit_square
vertex_bump_profile = _impl.vertex_bump_profile

__all__ = [
    "Piecewise1D", "Polytope", "PolymaError", "a_mu_matrix",
    "capped_curvature_profile", "check_a_condition", "counterexample_rhs",
    "counterexample_window_mu", "evaluate_expression", "exponent_from_lambda",
    "interpolation_bound", "lambda1_arc", "lambda1_spherical", "list_presets",
    "mixed_root_big", "preset_description", "regular_octahedron",
    "run_config_json", "run_preset_json", "theta_at", "unit_cube", "unit_square",
    "vertex_bump_profile", "run_preset", "run_experiment",
]


def run_preset(name):
    """Run a shipped preset and return the decoded result summary."""
    return _json.loads(run_preset_json(name))


def run_experiment(config):
    """Run an experiment from a config dict and return the decoded summary."""
    return _json.loads(run_config_json(_json.dumps(config)))
