#ifndef POLYMA_NORMALIZE_HPP
#define POLYMA_NORMALIZE_HPP

#include <map>
#include <vector>

#include "polyma/geometry.hpp"
#include "polyma/types.hpp"

namespace polyma {

/// Second-order data (value, gradient, Hessian) of a function at a point.
struct SecondOrderJet {
    Vec base_point;
    double value = 0.0;
    Vec gradient;
    Mat hessian;

    static SecondOrderJet quadratic(const Vec& base, const Mat& H) {
        SecondOrderJet j;
        j.base_point = base;
        j.gradient = Vec::Zero(base.size());
        j.hessian = H;
        return j;
    }
};

struct AffineMap {
    Mat linear;
    Vec shift;

    Vec apply(const Vec& x) const { return linear * x + shift; }
    AffineMap inverse() const;
    static AffineMap identity(int n);
    static AffineMap linear_only(const Mat& A);
};

/// Dihedral angles of a normalized tangent cone: Theta = max, theta = min.
struct AngleReport {
    double theta_max = 0.0;
    double theta_min = 0.0;
    std::vector<std::tuple<int, int, double>> per_pair;
};

/// T with T^t H T = I; canonical choice T = H^{-1/2}.
AffineMap hessian_normalizer(const Mat& H, double tol = 1e-12);

/// Dihedral angle between adjacent facets i,j with unit inward normals:
/// angle = pi - arccos(nu_i . nu_j).
AngleReport dihedral_angles(const TangentCone& cone);

/// Image of a cone under an invertible linear map (normals transform by A^{-T}).
TangentCone map_cone(const TangentCone& cone, const Mat& A);

/// Theta/theta functionals of a jet at a skeleton point of P: normalize the Hessian,
/// map the tangent cone, take dihedral angles. Invariant under the choice of T.
AngleReport theta_functionals(const SecondOrderJet& jet, const Polytope& P, double tol = 1e-9);
AngleReport theta_functionals(const SecondOrderJet& jet, const TangentCone& cone);

/// Theta <= pi/2 (strict variant: Theta < pi/2 - tau_strict).
bool check_a_condition(const SecondOrderJet& jet, const Polytope& P, bool strong = false,
                       double tau_strict = 0.0, double tol = 1e-9);
bool check_a_condition(const SecondOrderJet& jet, const TangentCone& cone, bool strong = false,
                       double tau_strict = 0.0);

/// The explicit block map sending V_mu x R^{n-2} to the quarter space, with
/// (|x|^2/2 + cos(mu pi) x1 x2) = (|x|^2/2) o A_mu^{-1}.
AffineMap a_mu_map(double mu, int n);

enum class Eps0Variant { AngleOnly, MaxWithGap };

struct Eps0Input {
    Vec point;
    SecondOrderJet jet;
    bool on_low_skeleton = false;  ///< point lies on the (n-3)-skeleton
    double gap = 0.0;              ///< det D2 subsolution - f at the point
    bool has_gap = false;
};

/// The regularity margin of the sub-solution over a finite skeleton sample:
/// either min(pi/2 - Theta) over all samples, or the mixed variant that accepts
/// a determinant gap on the (n-2)-but-not-(n-3) part.
double epsilon0(const Polytope& P, const std::vector<Eps0Input>& samples, Eps0Variant variant);

}  // namespace polyma

#endif
