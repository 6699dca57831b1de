#include "polyma/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace polyma {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using V3 = Eigen::Vector3d;

V3 to3(const Vec& v) { return V3(v(0), v(1), v(2)); }

struct SphMesh {
    std::vector<V3> pos;                   // unit vectors on S^2
    std::vector<std::vector<int>> tags;    // facet ids whose plane contains the vertex
    std::vector<std::array<int, 3>> tris;

    double max_edge() const {
        double m = 0;
        for (const auto& t : tris)
            for (int e = 0; e < 3; ++e)
                m = std::max(m, (pos[t[e]] - pos[t[(e + 1) % 3]]).norm());
        return m;
    }
};

std::vector<int> tag_intersection(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> c;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(c));
    return c;
}

/// Corners of the spherical polygon: unit directions on two facet planes
/// satisfying all cone constraints.
std::vector<V3> polygon_corners(const std::vector<V3>& normals, double tol = 1e-10) {
    std::vector<V3> corners;
    int m = static_cast<int>(normals.size());
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            V3 d = normals[i].cross(normals[j]);
            if (d.norm() < 1e-12) continue;
            d.normalize();
            for (double s : {1.0, -1.0}) {
                V3 c = s * d;
                bool ok = true;
                for (const auto& nu : normals) ok = ok && nu.dot(c) >= -tol;
                if (!ok) continue;
                bool dup = false;
                for (const auto& q : corners) dup = dup || (q - c).norm() < 1e-9;
                if (!dup) corners.push_back(c);
            }
        }
    return corners;
}

struct Arc {
    int facet;
    V3 from, to;
    V3 axis_a, axis_b;  // param x(s) = a cos s + b sin s, x(0) = from
    double span;        // signed angle from 'from' to 'to' inside the region
};

bool arc_midpoint_feasible(const Arc& arc, const std::vector<V3>& normals) {
    V3 mid = std::cos(arc.span / 2) * arc.axis_a + std::sin(arc.span / 2) * arc.axis_b;
    for (size_t k = 0; k < normals.size(); ++k)
        if (static_cast<int>(k) != arc.facet && normals[k].dot(mid) < -1e-9) return false;
    return true;
}

/// Boundary arc on facet i from corner p to corner q, taking the side whose
/// midpoint satisfies the remaining constraints.
Arc make_arc(int facet, const V3& p, const V3& q, const std::vector<V3>& normals) {
    Arc arc;
    arc.facet = facet;
    arc.from = p;
    arc.to = q;
    arc.axis_a = p;
    arc.axis_b = normals[facet].cross(p).normalized();
    double ang = std::atan2(q.dot(arc.axis_b), q.dot(arc.axis_a));
    if (ang <= 1e-14) ang += 2 * M_PI;
    arc.span = ang;
    if (!arc_midpoint_feasible(arc, normals)) {
        arc.span = ang - 2 * M_PI;
        if (!arc_midpoint_feasible(arc, normals))
            fail("MeshFailure", "no feasible boundary arc on a facet");
    }
    return arc;
}

V3 arc_point(const Arc& arc, double s) {
    return std::cos(s) * arc.axis_a + std::sin(s) * arc.axis_b;
}

/// Initial fan triangulation of the spherical polygon from an interior point.
SphMesh initial_mesh(const std::vector<V3>& normals, double target_h) {
    std::vector<V3> corners = polygon_corners(normals);
    if (corners.size() < 2) fail("MeshFailure", "spherical polygon has fewer than two corners");

    V3 center = V3::Zero();
    for (const auto& nu : normals) center += nu;
    if (center.norm() < 1e-10) fail("MeshFailure", "cannot find an interior point");
    center.normalize();

    // one arc per facet, endpoints are the corners on that facet's plane
    std::vector<Arc> arcs;
    for (size_t f = 0; f < normals.size(); ++f) {
        std::vector<int> on;
        for (size_t c = 0; c < corners.size(); ++c)
            if (std::abs(normals[f].dot(corners[c])) < 1e-9) on.push_back(static_cast<int>(c));
        if (on.size() != 2) fail("MeshFailure", "facet plane does not carry exactly two corners");
        arcs.push_back(make_arc(static_cast<int>(f), corners[on[0]], corners[on[1]], normals));
    }

    // chain the arcs into a closed boundary cycle
    std::vector<Arc> cycle;
    std::vector<bool> used(arcs.size(), false);
    cycle.push_back(arcs[0]);
    used[0] = true;
    while (cycle.size() < arcs.size()) {
        const V3 tail = cycle.back().to;
        bool found = false;
        for (size_t i = 0; i < arcs.size() && !found; ++i) {
            if (used[i]) continue;
            if ((arcs[i].from - tail).norm() < 1e-9) {
                cycle.push_back(arcs[i]);
            } else if ((arcs[i].to - tail).norm() < 1e-9) {
                cycle.push_back(make_arc(arcs[i].facet, arcs[i].to, arcs[i].from, normals));
            } else {
                continue;
            }
            used[i] = true;
            found = true;
        }
        if (!found) fail("MeshFailure", "boundary arcs do not close up");
    }

    SphMesh mesh;
    mesh.pos.push_back(center);
    mesh.tags.push_back({});
    std::map<std::array<long, 3>, int> seen;  // dedupe shared corner points
    auto add_bpoint = [&](const V3& x, std::vector<int> tg) {
        std::array<long, 3> key = {std::lround(x(0) * 1e10), std::lround(x(1) * 1e10),
                                   std::lround(x(2) * 1e10)};
        auto it = seen.find(key);
        if (it != seen.end()) {
            auto& t = mesh.tags[it->second];
            for (int g : tg)
                if (std::find(t.begin(), t.end(), g) == t.end()) t.push_back(g);
            std::sort(t.begin(), t.end());
            return it->second;
        }
        mesh.pos.push_back(x);
        std::sort(tg.begin(), tg.end());
        mesh.tags.push_back(tg);
        int id = static_cast<int>(mesh.pos.size()) - 1;
        seen[key] = id;
        return id;
    };

    for (const Arc& arc : cycle) {
        int segs = std::max(1, static_cast<int>(std::ceil(std::abs(arc.span) / target_h)));
        std::vector<int> pts;
        for (int s = 0; s <= segs; ++s)
            pts.push_back(add_bpoint(arc_point(arc, arc.span * s / segs), {arc.facet}));
        for (int s = 0; s < segs; ++s) mesh.tris.push_back({0, pts[s], pts[s + 1]});
    }
    return mesh;
}

void refine(SphMesh& mesh) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        std::pair<int, int> key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        V3 m = (mesh.pos[a] + mesh.pos[b]).normalized();
        mesh.pos.push_back(m);
        mesh.tags.push_back(tag_intersection(mesh.tags[a], mesh.tags[b]));
        int id = static_cast<int>(mesh.pos.size()) - 1;
        midpoint[key] = id;
        return id;
    };
    std::vector<std::array<int, 3>> out;
    out.reserve(mesh.tris.size() * 4);
    for (const auto& t : mesh.tris) {
        int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
        out.push_back({t[0], ab, ca});
        out.push_back({t[1], bc, ab});
        out.push_back({t[2], ca, bc});
        out.push_back({ab, bc, ca});
    }
    mesh.tris = std::move(out);
}

struct Assembled {
    SpMat K, M;
    std::vector<int> dof;  // vertex -> interior dof id or -1
    int ndof = 0;
};

Assembled assemble(const SphMesh& mesh) {
    Assembled A;
    A.dof.assign(mesh.pos.size(), -1);
    for (size_t v = 0; v < mesh.pos.size(); ++v)
        if (mesh.tags[v].empty()) A.dof[v] = A.ndof++;
    if (A.ndof == 0) fail("MeshFailure", "no interior vertices at this mesh size");

    std::vector<Triplet> tk, tm;
    for (const auto& t : mesh.tris) {
        const V3 &p0 = mesh.pos[t[0]], &p1 = mesh.pos[t[1]], &p2 = mesh.pos[t[2]];
        V3 e1 = p1 - p0, e2 = p2 - p0;
        V3 nrm = e1.cross(e2);
        double area2 = nrm.norm();
        if (area2 < 1e-16) continue;
        double area = 0.5 * area2;
        V3 un = nrm / area2;
        // in-plane gradients of the P1 hat functions on the flat triangle
        V3 g[3];
        V3 h2 = e1.cross(un);  // constant on edge p0-p1
        g[2] = h2 / h2.dot(e2);
        V3 h1 = e2.cross(un);
        g[1] = h1 / h1.dot(e1);
        g[0] = -g[1] - g[2];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                int va = t[a], vb = t[b];
                if (A.dof[va] < 0 || A.dof[vb] < 0) continue;
                tk.emplace_back(A.dof[va], A.dof[vb], g[a].dot(g[b]) * area);
                tm.emplace_back(A.dof[va], A.dof[vb], area * (a == b ? 1.0 / 6 : 1.0 / 12));
            }
    }
    A.K.resize(A.ndof, A.ndof);
    A.M.resize(A.ndof, A.ndof);
    A.K.setFromTriplets(tk.begin(), tk.end());
    A.M.setFromTriplets(tm.begin(), tm.end());
    return A;
}

struct EigPair {
    double lambda1, lambda2;
};

EigPair smallest_two(const Assembled& A, bool want_second) {
    Eigen::SimplicialLDLT<SpMat> chol(A.K);
    if (chol.info() != Eigen::Success)
        fail("NonConvergedEigenSolve", "stiffness factorization failed");
    Vec x = Vec::Ones(A.ndof);
    x /= std::sqrt(x.dot(A.M * x));
    double lam = 0, lam_prev = -1;
    for (int it = 0; it < 400 && std::abs(lam - lam_prev) > 1e-13 * std::max(1.0, lam); ++it) {
        lam_prev = lam;
        Vec y = chol.solve(A.M * x);
        y /= std::sqrt(y.dot(A.M * y));
        lam = y.dot(A.K * y);
        x = y;
    }
    EigPair out{lam, 0.0};
    if (want_second) {
        Vec Mx = A.M * x;
        Vec z(A.ndof);
        for (int i = 0; i < A.ndof; ++i) z(i) = 1.0 + 0.37 * std::sin(1.0 + 2.1 * i);
        double l2 = 0, l2p = -1;
        for (int it = 0; it < 600 && std::abs(l2 - l2p) > 1e-11 * std::max(1.0, l2); ++it) {
            l2p = l2;
            z -= (z.dot(Mx)) * x;
            Vec y = chol.solve(A.M * z);
            y -= (y.dot(Mx)) * x;
            double nn = std::sqrt(y.dot(A.M * y));
            if (nn < 1e-300) fail("NonConvergedEigenSolve", "deflation collapsed");
            y /= nn;
            l2 = y.dot(A.K * y);
            z = y;
        }
        out.lambda2 = l2;
    }
    return out;
}

EigenResult solve_on_mesh(const SphMesh& mesh, bool want_second) {
    Assembled A = assemble(mesh);
    EigPair p = smallest_two(A, want_second);
    EigenResult r;
    r.lambda1 = p.lambda1;
    r.lambda2 = p.lambda2;
    r.exponent_mu = exponent_from_lambda(p.lambda1, 3);
    r.mesh_size = mesh.max_edge();
    r.vertex_count = static_cast<int>(mesh.pos.size());
    r.interior_count = A.ndof;
    return r;
}

}  // namespace

SphericalDomain SphericalDomain::arc(double opening) {
    SphericalDomain d;
    d.n = 2;
    d.opening = opening;
    return d;
}

SphericalDomain SphericalDomain::polygon(const std::vector<Vec>& normals) {
    SphericalDomain d;
    d.n = 3;
    for (const auto& nu : normals) d.normals.push_back(nu.normalized());
    return d;
}

SphericalDomain SphericalDomain::from_cone(const TangentCone& cone) {
    if (cone.dim() == 2) {
        if (cone.inward_normals.size() != 2)
            fail("MeshFailure", "planar cross-section needs exactly two facets");
        double c = std::clamp(cone.inward_normals[0].dot(cone.inward_normals[1]), -1.0, 1.0);
        return arc(M_PI - std::acos(c));
    }
    return polygon(cone.inward_normals);
}

EigenResult lambda1_arc(double opening) {
    if (!(opening > 0 && opening < 2 * M_PI))
        fail("OpeningOutOfRange", "arc opening must lie in (0, 2*pi)");
    EigenResult r;
    r.exponent_mu = M_PI / opening;
    r.lambda1 = r.exponent_mu * r.exponent_mu;
    r.exact = true;
    return r;
}

std::vector<EigenResult> lambda1_ladder(const SphericalDomain& dom, double mesh_h, int levels) {
    if (dom.n != 3) fail("MeshFailure", "the FEM path applies to n = 3 only");
    if (!(mesh_h > 0)) fail("MeshFailure", "mesh size must be positive");
    std::vector<V3> normals;
    for (const auto& nu : dom.normals) normals.push_back(to3(nu).normalized());
    SphMesh mesh = initial_mesh(normals, mesh_h);
    while (mesh.max_edge() > mesh_h) refine(mesh);
    std::vector<EigenResult> out;
    for (int l = 0; l < levels; ++l) {
        if (l > 0) refine(mesh);
        out.push_back(solve_on_mesh(mesh, true));
    }
    return out;
}

EigenResult lambda1_spherical(const SphericalDomain& dom, double mesh_h) {
    auto ladder = lambda1_ladder(dom, mesh_h, 2);
    const EigenResult& coarse = ladder[0];
    const EigenResult& fine = ladder[1];
    EigenResult r = fine;
    r.lambda1 = (4.0 * fine.lambda1 - coarse.lambda1) / 3.0;  // second-order Richardson
    r.lambda2 = fine.lambda2 > 0 ? (4.0 * fine.lambda2 - coarse.lambda2) / 3.0 : 0.0;
    r.estimated_error = std::abs(r.lambda1 - fine.lambda1);
    r.exponent_mu = exponent_from_lambda(r.lambda1, 3);
    return r;
}

double exponent_from_lambda(double lambda1, int n) {
    double k = n - 2;
    return 0.5 * (-k + std::sqrt(k * k + 4.0 * lambda1));
}

GapCheck eigenvalue_gap_check(const TangentCone& cone, double mesh_h) {
    int n = cone.dim();
    GapCheck g;
    if (n == 2) {
        SphericalDomain d = SphericalDomain::from_cone(cone);
        EigenResult r = lambda1_arc(d.opening);
        g.lambda1 = r.lambda1;
        g.exponent_mu = r.exponent_mu;
        g.estimated_error = 0.0;
    } else if (n == 3) {
        EigenResult r = lambda1_spherical(SphericalDomain::from_cone(cone), mesh_h);
        g.lambda1 = r.lambda1;
        g.exponent_mu = r.exponent_mu;
        g.estimated_error = r.estimated_error;
    } else {
        fail("MeshFailure", "gap check supports n = 2, 3");
    }
    g.gap = g.lambda1 - 2.0 * n;
    double margin = std::max(1e-9, 10.0 * g.estimated_error);
    g.theorem_applicable = g.exponent_mu > 2.0 + margin;
    return g;
}

}  // namespace polyma
