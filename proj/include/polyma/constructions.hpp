#ifndef POLYMA_CONSTRUCTIONS_HPP
#define POLYMA_CONSTRUCTIONS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "polyma/geometry.hpp"
#include "polyma/normalize.hpp"
#include "polyma/solver.hpp"
#include "polyma/types.hpp"

namespace polyma {

enum class Continuity { C0, C1, C2 };

/// Exact piecewise-polynomial 1-D profile. Piece i lives on
/// [breakpoints[i], breakpoints[i+1]] with coefficients in the local variable
/// t - breakpoints[i]; the edge pieces extrapolate beyond the ends.
struct Piecewise1D {
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> pieces;
    Continuity continuity_class = Continuity::C0;

    double value(double t) const;
    double derivative(double t) const;
    double second(double t) const;

    /// Max jump of value/derivative/second across breakpoints, per the declared class.
    double continuity_defect() const;
    /// Min of the second derivative over a dense sample (convexity certificate).
    double min_second(int samples_per_piece = 1000) const;
};

/// C^2 convex non-increasing bump: -t up to eps0, constant -5 eps0/4 beyond 2 eps0,
/// an exact degree-8 spline in between (coefficients are fixed rationals).
Piecewise1D vertex_bump_profile(double eps0);

/// Evaluator with analytic value/gradient/Hessian and a composition description.
struct BarrierFunction {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    std::string description;
};

struct SubsolutionReport {
    bool strong_a_ok = false;
    double worst_theta = 0.0;          ///< max Theta over vertices (needs < pi/2)
    double min_hessian_eigenvalue = 0.0;
    Vec worst_convexity_point;
    bool convex_ok = false;
};

struct SubsolutionParams {
    double C0 = 0.0;        ///< 0: choose automatically by doubling
    double lambda0 = 2e-4;
    double eps0 = 0.0;      ///< 0: derive from the sampled profile-argument margin
    double delta0 = 0.0;    ///< 0: 0.3 * min vertex separation
    double cutoff_r0 = 0.0; ///< 0: 0.5 * delta0
    double cutoff_r1 = 0.0; ///< 0: delta0
    int sample_n = 24;      ///< convexity sample grid per axis
};

/// The simple-polytope sub-solution scaffold for n = 3: a sum of bump profiles of
/// supporting affine functions minus per-vertex uniformly convex quadratics, plus a
/// small cut-off quadratic. Requires the strong A-condition at every vertex.
BarrierFunction simple_subsolution_3d(const Polytope& P,
                                      const std::map<int, SecondOrderJet>& vertex_quadratics,
                                      const SubsolutionParams& params,
                                      SubsolutionReport* report = nullptr);

/// Dyadically rescaled Lipschitz right-hand-side profiles: G from the plateau bump,
/// G_tilde from the non-monotone bump; G <= G_tilde on [0,1/2].
struct CounterexampleRhs {
    Piecewise1D G;
    Piecewise1D G_tilde;
};
CounterexampleRhs counterexample_rhs(int k_max);

/// Exact profile with h'' = min(1, 2(1 - t/delta^3)^+), h(0) = h'(0) = 0.
Piecewise1D capped_curvature_profile(double delta);

struct BarrierParams {
    double delta = 0.5;
    double omega = 0.0;        ///< 0: default delta^(1/2)
    int distinguished_vertex = 0;
    double C0 = 0.0;           ///< 0: choose automatically
    int boundary_samples = 10000;
    int grid_samples = 40;     ///< det-check sample grid per axis (capped)
};

struct BarrierReport {
    bool boundary_ok = false;
    bool determinant_ok = false;
    double boundary_margin = 0.0;     ///< min over samples of phi - u0
    double determinant_margin = 0.0;  ///< min over samples of det D^2 u0 - f
    Vec boundary_worst_point;
    Vec determinant_worst_point;
    double uniform_convexity_c = 0.0; ///< sampled boundary convexity constant of phi
};

/// The no-given-sub-solution barrier: u0 = h(|Ax|) + sum of vertex bumps + small
/// cut-off quadratic, assembled at the distinguished vertex in normal position
/// (orthant tangent cone, unit-diagonal boundary Hessian). The report checks
/// u0 <= phi on the boundary and det D^2 u0 >= f on a sample grid; failures raise
/// BoundaryDominationFailed / DeterminantDominationFailed naming the sample point.
BarrierFunction no_subsolution_barrier(const Polytope& P,
                              const std::map<int, SecondOrderJet>& vertex_jets,
                              const ScalarField& f, const ScalarField& phi,
                              const BarrierParams& params, BarrierReport* report = nullptr);

/// Rescaled-window opening fractions mu_k = arccos(sqrt(3)/2^{k/2+1}) / pi.
double counterexample_window_mu(int k);

}  // namespace polyma

#endif
