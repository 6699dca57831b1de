#include "polyma/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace polyma {

AffineMap AffineMap::inverse() const {
    Eigen::FullPivLU<Mat> lu(linear);
    if (!lu.isInvertible()) fail("InconsistentInput", "affine map is singular");
    Mat inv = lu.inverse();
    AffineMap m;
    m.linear = inv;
    m.shift = -inv * shift;
    return m;
}

AffineMap AffineMap::identity(int n) {
    return {Mat::Identity(n, n), Vec::Zero(n)};
}

AffineMap AffineMap::linear_only(const Mat& A) {
    return {A, Vec::Zero(A.rows())};
}

AffineMap hessian_normalizer(const Mat& H, double tol) {
    if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, H.norm()))
        fail("NotPositiveDefinite", "hessian is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    if (es.eigenvalues().minCoeff() <= tol * std::max(1.0, es.eigenvalues().maxCoeff()))
        fail("NotPositiveDefinite", "hessian has a non-positive eigenvalue");
    Vec inv_sqrt = es.eigenvalues().array().rsqrt();
    Mat T = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    return AffineMap::linear_only(T);
}

TangentCone map_cone(const TangentCone& cone, const Mat& A) {
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) fail("InconsistentInput", "cone map is singular");
    Mat AinvT = lu.inverse().transpose();
    TangentCone out;
    out.apex = A * cone.apex;
    for (const auto& nu : cone.inward_normals)
        out.inward_normals.push_back((AinvT * nu).normalized());
    out.pointed_dim = cone.pointed_dim;
    out.lineality_dim = cone.lineality_dim;
    return out;
}

AngleReport dihedral_angles(const TangentCone& cone) {
    if (cone.inward_normals.size() < 2)
        fail("DegenerateCone", "dihedral angles need at least two facets");
    auto pairs = cone_adjacent_pairs(cone);
    if (pairs.empty()) fail("DegenerateCone", "cone has no adjacent facet pair");
    AngleReport rep;
    rep.theta_max = 0.0;
    rep.theta_min = M_PI;
    for (auto [i, j] : pairs) {
        double c = cone.inward_normals[i].dot(cone.inward_normals[j]);
        c = std::clamp(c, -1.0, 1.0);
        double angle = M_PI - std::acos(c);
        rep.per_pair.emplace_back(i, j, angle);
        rep.theta_max = std::max(rep.theta_max, angle);
        rep.theta_min = std::min(rep.theta_min, angle);
    }
    return rep;
}

AngleReport theta_functionals(const SecondOrderJet& jet, const TangentCone& cone) {
    AffineMap T = hessian_normalizer(jet.hessian);
    // domain of v(x) = u(Tx) is T^{-1}(Omega); its cone at the base point is T^{-1} V
    TangentCone image = map_cone(cone, T.inverse().linear);
    return dihedral_angles(image);
}

AngleReport theta_functionals(const SecondOrderJet& jet, const Polytope& P, double tol) {
    const Vec& x0 = jet.base_point;
    TangentCone cone = tangent_cone(P, x0, tol);
    // the point must lie on the (n-2)-skeleton: at least two facets meeting there
    if (cone.pointed_dim < 2)
        fail("NotOnSkeleton", "base point is not on the (n-2)-skeleton");
    return theta_functionals(jet, cone);
}

bool check_a_condition(const SecondOrderJet& jet, const TangentCone& cone, bool strong,
                       double tau_strict) {
    AngleReport rep = theta_functionals(jet, cone);
    if (strong) return rep.theta_max < M_PI / 2 - tau_strict;
    return rep.theta_max <= M_PI / 2 + 1e-12;
}

bool check_a_condition(const SecondOrderJet& jet, const Polytope& P, bool strong,
                       double tau_strict, double tol) {
    AngleReport rep = theta_functionals(jet, P, tol);
    if (strong) return rep.theta_max < M_PI / 2 - tau_strict;
    return rep.theta_max <= M_PI / 2 + 1e-12;
}

AffineMap a_mu_map(double mu, int n) {
    if (!(mu > 0.0 && mu < 1.0)) fail("MuOutOfRange", "mu must be in (0,1)");
    if (n < 2) fail("MuOutOfRange", "dimension must be >= 2");
    double s = std::sin(mu * M_PI);
    Mat A = Mat::Identity(n, n);
    A(0, 0) = 1.0;
    A(0, 1) = -std::cos(mu * M_PI) / s;  // -cot(mu pi)
    A(1, 1) = 1.0 / s;                   // csc(mu pi)
    return AffineMap::linear_only(A);
}

double epsilon0(const Polytope& P, const std::vector<Eps0Input>& samples, Eps0Variant variant) {
    if (samples.empty()) fail("EmptySample", "epsilon0 needs at least one skeleton sample");
    double out = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        AngleReport rep = theta_functionals(s.jet, P);
        double margin = M_PI / 2 - rep.theta_max;
        if (variant == Eps0Variant::MaxWithGap && !s.on_low_skeleton) {
            double alt = s.has_gap ? std::max(s.gap, margin) : margin;
            out = std::min(out, alt);
        } else {
            out = std::min(out, margin);
        }
    }
    return out;
}

}  // namespace polyma
