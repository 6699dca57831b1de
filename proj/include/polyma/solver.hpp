#ifndef POLYMA_SOLVER_HPP
#define POLYMA_SOLVER_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polyma/geometry.hpp"
#include "polyma/normalize.hpp"
#include "polyma/types.hpp"

namespace polyma {

/// Right-hand side / boundary-data field with regularity metadata.
struct ScalarField {
    std::function<double(const Vec&)> eval;
    double holder_beta = 1.0;
    double inf_bound = 0.0;
    double sup_bound = std::numeric_limits<double>::infinity();

    double operator()(const Vec& x) const { return eval(x); }
    static ScalarField constant(double c);
    static ScalarField from(std::function<double(const Vec&)> f);
};

/// One convex constraint of the computational domain: a half-space, or a ball
/// cut |P x| <= R over a coordinate subset (a cylinder when the subset is proper).
struct DomainConstraint {
    enum Kind { HalfspaceK, BallK };
    Kind kind = HalfspaceK;
    Halfspace hs;
    std::vector<int> ball_coords;
    double ball_radius = 0.0;
    int label = 0;  ///< boundary piece label (0 = lateral, 1 = outer)

    double margin(const Vec& x) const;
};

/// Convex domain as an intersection of constraints, with a bounding box for the grid.
struct ImplicitDomain {
    int dim = 2;
    std::vector<DomainConstraint> constraints;
    Vec lo, hi;

    double margin(const Vec& x) const;
    bool inside(const Vec& x, double eps) const { return margin(x) > eps; }

    struct Cut {
        double t = 1.0;   ///< fraction of the segment until the boundary
        int constraint = -1;
    };
    /// First boundary crossing along the segment x -> x + dx, if any.
    std::optional<Cut> exit_cut(const Vec& x, const Vec& dx) const;
};

struct ComputationalDomain {
    enum class Kind { polygon2d, box3d, wedge3d, truncated_cone };
    Kind kind = Kind::polygon2d;
    int dim = 2;
    ImplicitDomain shape;
    std::optional<AffineMap> affine_precompose;

    static ComputationalDomain polygon(const Polytope& P);
    static ComputationalDomain box(const Vec& lo, const Vec& hi);
    /// V_mu x (z0, z1) truncated at cylinder radius R in the (x1,x2)-plane.
    static ComputationalDomain wedge(double mu, double radius, double z0, double z1);
    static ComputationalDomain cone_ball(const TangentCone& cone, double R);
};

struct SolverParams {
    double h = 1.0 / 32;       ///< grid.h
    int directions = 17;       ///< scheme.directions (target count of direction lines)
    double newton_tol = 1e-8;  ///< newton.tol
    int newton_max_iter = 120;
    int max_damping = 30;      ///< newton.max_damping (step halvings)
    int max_rounds = 10;       ///< Newton attempts interleaved with pseudo-time sweeps
    int pseudo_time_sweeps = 400;
    double conv_tol_factor = 10.0;  ///< tau_conv = factor * h^2
    bool verbose = false;
};

/// Grid function approximating the convex solution, with convergence metadata.
struct DiscreteSolution {
    int dim = 2;
    double h = 0.0;
    Vec origin;
    std::array<int, 3> shape = {1, 1, 1};
    std::vector<std::uint8_t> state;  ///< 0 exterior, 1 interior, 2 boundary
    std::vector<double> values;

    int iterations = 0;
    double residual = 0.0;
    std::string monotone_scheme_id;
    int interior_count = 0;
    int convexity_violations = 0;
    double min_second_difference = 0.0;
    std::optional<AffineMap> affine_precompose;

    std::int64_t index(int i, int j, int k) const {
        return (static_cast<std::int64_t>(k) * shape[1] + j) * shape[0] + i;
    }
    bool valid(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < shape[0] && j < shape[1] && k < shape[2];
    }
    Vec point(int i, int j, int k) const;
    /// Nearest grid node to x.
    std::array<int, 3> nearest_node(const Vec& x) const;
    /// Multilinear interpolation of the grid values at x.
    double value_at(const Vec& x) const;
};

DiscreteSolution solve_dirichlet(const ComputationalDomain& dom, const ScalarField& f,
                                 const ScalarField& phi, const SolverParams& prm);

/// As solve_dirichlet with distinct data on labeled boundary pieces
/// (label 0 = lateral, 1 = outer).
DiscreteSolution solve_dirichlet_labeled(const ComputationalDomain& dom, const ScalarField& f,
                                         const std::function<double(const Vec&, int)>& phi,
                                         const SolverParams& prm);

struct PinSpec {
    Vec p0;
    double a = 0.0;
    double tol = 1e-4;
};

struct TruncatedConeResult {
    DiscreteSolution sol;
    double shift = 0.0;   ///< coefficient of the outer-data adjustment term
    int outer_solves = 1;
};

/// det D^2 v = c on V cap B_R with v = |x|^2/2 on the lateral cone boundary.
/// Without a pin the outer data is |x|^2/2; with a pin the outer data is offset by
/// shift * dist-to-lateral and the shift found by bisection on v(p0) - a.
TruncatedConeResult solve_truncated_cone(const TangentCone& cone, double R, double c,
                                         const SolverParams& prm,
                                         const std::optional<PinSpec>& pin = std::nullopt);

struct ProbeResult {
    double value = 0.0;
    int order = 2;  ///< formal order of the stencil used (2 interior, 1 one-sided mixed)
};

/// Finite-difference estimate of d^2 u / dx_i dx_j at the node nearest to x.
ProbeResult hessian_probe(const DiscreteSolution& sol, const Vec& x, int i, int j);
Mat hessian_probe_matrix(const DiscreteSolution& sol, const Vec& x);

struct ResidualReport {
    double max_residual = 0.0;
    int convexity_violations = 0;
    double grid_convergence_rate = 0.0;  ///< observed order from the last two refinements
    double last_change = 0.0;            ///< max difference between the last two grids
};

ResidualReport residual_report(const std::vector<DiscreteSolution>& ladder);

/// Structured text header + flat CSV value table.
void save_solution(const DiscreteSolution& sol, const std::string& path);
DiscreteSolution load_solution(const std::string& path);

}  // namespace polyma

#endif
