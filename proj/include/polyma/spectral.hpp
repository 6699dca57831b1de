#ifndef POLYMA_SPECTRAL_HPP
#define POLYMA_SPECTRAL_HPP

#include <optional>
#include <vector>

#include "polyma/geometry.hpp"
#include "polyma/types.hpp"

namespace polyma {

/// Spherical cross-section Sigma = V cap S^{n-1} of a convex cone: an arc for n = 2,
/// a geodesic polygon (given by the cone's inward normals) for n = 3.
struct SphericalDomain {
    int n = 2;
    double opening = 0.0;       ///< n == 2: arc opening angle
    std::vector<Vec> normals;   ///< n == 3: unit inward normals of the cone

    static SphericalDomain arc(double opening);
    static SphericalDomain polygon(const std::vector<Vec>& normals);
    static SphericalDomain from_cone(const TangentCone& cone);
};

/// First Dirichlet eigenvalue of the spherical Laplacian together with the
/// homogeneity exponent mu solving mu(mu+n-2) = lambda1.
struct EigenResult {
    double lambda1 = 0.0;
    double exponent_mu = 0.0;
    double mesh_size = 0.0;
    double estimated_error = 0.0;
    double lambda2 = 0.0;       ///< rough second eigenvalue (sanity flag), 0 if not computed
    int vertex_count = 0;
    int interior_count = 0;
    bool exact = false;         ///< closed form (arcs) rather than FEM
};

/// Closed-form arc eigenvalue: lambda1 = (pi/opening)^2.
EigenResult lambda1_arc(double opening);

/// P1 finite elements on a geodesic triangulation of the spherical polygon,
/// two meshes (ratio 2) with Richardson extrapolation. lambda1 is the
/// extrapolated value; estimated_error = |extrapolant - fine value|.
EigenResult lambda1_spherical(const SphericalDomain& dom, double mesh_h);

/// Per-mesh (non-extrapolated) values on a refinement ladder; used by the
/// convergence-monotonicity checks and the eigen CLI.
std::vector<EigenResult> lambda1_ladder(const SphericalDomain& dom, double mesh_h, int levels);

/// Positive root of mu(mu+n-2) = lambda1.
double exponent_from_lambda(double lambda1, int n);

struct GapCheck {
    double lambda1 = 0.0;
    double gap = 0.0;                  ///< lambda1 - 2n
    double exponent_mu = 0.0;
    bool theorem_applicable = false;   ///< mu > 2 beyond the numerical error bar
    double estimated_error = 0.0;
};

/// Eigenvalue gap of a convex cone's cross-section against the quarter-space value 2n.
GapCheck eigenvalue_gap_check(const TangentCone& cone, double mesh_h = 0.08);

}  // namespace polyma

#endif
