#ifndef POLYMA_ASYMPTOTICS_HPP
#define POLYMA_ASYMPTOTICS_HPP

#include <optional>
#include <vector>

#include "polyma/normalize.hpp"
#include "polyma/solver.hpp"
#include "polyma/types.hpp"

namespace polyma {

/// Fitted corner/edge asymptotics of a discrete solution.
struct ExpansionFit {
    double exponent = 0.0;  ///< 1/mu
    std::vector<std::pair<double, double>> coefficient_samples;  ///< (x3, c(x3))
    double coefficient_c = 0.0;  ///< c at the slice closest to x3 = 0
    SecondOrderJet quadratic_part;
    double residual_decay_rate = 0.0;
    double fit_window_lo = 0.0, fit_window_hi = 0.0;
};

enum class DichotomyClass { EqualsSubsolution, PlusRootBranch, NotC2 };

struct DichotomyVerdict {
    DichotomyClass cls = DichotomyClass::EqualsSubsolution;
    double estimated_u12 = 0.0;
    double direction_spread = 0.0;
    int zoom_levels = 0;
    double predicted_root = 0.0;
    /// per-level mid-radius estimates along the first ray, for plot output
    std::vector<double> level_trace;
    /// (radius, ray id, estimate) rows from the last probed level
    std::vector<std::array<double, 3>> final_probes;
};

struct CornerExtractOptions {
    double tau_c2 = 0.05;          ///< max direction spread for a C2 verdict
    double tau_root = 0.05;        ///< tolerance against the predicted big root
    double tau_flat = 0.01;        ///< radii/level stability for convergence
    double spread_divergence = 0.2;///< spread that, growing, flags the no-C2 branch
    double value_cap = 5.0;        ///< runaway guard on |u12|
    int max_zoom = 14;
    double zoom_factor = 0.5;
    std::optional<SolverParams> solver;  ///< parameters for the zoom solves
};

/// Classify the corner behaviour of a discrete solution per the expansion dichotomy:
/// the mixed derivative either settles at the sub-solution value, settles at the big
/// root of the compatibility quadratic, or has direction-dependent limits (no C2
/// extension). The estimate is produced by a rescaling chain: the corner
/// neighbourhood is re-solved on successively halved boxes with boundary data
/// interpolated from the previous level, and the mixed derivative is probed along
/// >= 3 approach directions at dyadic radii with Richardson extrapolation in r.
/// `normalizing_map` must take the local problem to the quarter-space normal form
/// with boundary quadratic |x|^2/2 and right-hand side f0 at the corner.
DichotomyVerdict corner_jet_extract(const DiscreteSolution& sol, const Vec& corner, double f0,
                                    const AffineMap& normalizing_map,
                                    const CornerExtractOptions& opt = {});

struct MixedRoot {
    double value = 0.0;
    bool degenerate = false;  ///< quadratic collapsed to linear; value is the single root
};

/// Big root of the univariate quadratic obtained by expanding det D^2 u = f in the
/// unknown (1,2) Hessian entry, all other entries supplied by the jet.
MixedRoot mixed_root_big(const SecondOrderJet& jet_known_entries, double f_at_point);

struct EdgeFitOptions {
    double r_min = 0.0;    ///< 0: use 3h
    double r_max = 0.0;    ///< 0: use 0.6 * cylinder radius
    double cond_limit = 1e8;
};

/// Least-squares fit of u - |x|^2/2 per x3 slice in the basis
/// { r'^{1/mu} sin(theta'/mu), r'^3 } over the annulus [r_min, r_max].
ExpansionFit edge_expansion_fit(const DiscreteSolution& sol, double mu,
                                const std::vector<double>& x3_samples,
                                const EdgeFitOptions& opt = {});

struct InterpolationBound {
    double sup_bound = 0.0;         ///< bound on ||f'||_inf
    double holder_half_bound = 0.0; ///< bound on the C^{alpha/2} seminorm of f'
};

/// 6 A^{alpha/(1+alpha)} B^{1/(1+alpha)} and (12 B^{1/(1+alpha)} + B) A^{alpha/(2(1+alpha))}.
InterpolationBound interpolation_bound(double A, double B, double alpha);

/// Samples an analytic field onto the grid of a computational domain; used to feed
/// oracle fields through the same analysis paths as computed solutions.
DiscreteSolution sample_field(const ComputationalDomain& dom, double h,
                              const std::function<double(const Vec&)>& fn);

}  // namespace polyma

#endif
