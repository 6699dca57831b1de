#include "polyma/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/SVD>
#include <json.hpp>

namespace polyma {

namespace {

using Json = nlohmann::json;

double coord_scale(const std::vector<Vec>& pts) {
    double s = 1.0;
    for (const auto& p : pts) s = std::max(s, p.lpNorm<Eigen::Infinity>());
    return s;
}

bool same_point(const Vec& a, const Vec& b, double tol) {
    return (a - b).lpNorm<Eigen::Infinity>() <= tol;
}

/// Affine dimension of a point set.
int affine_rank(const std::vector<Vec>& pts, const std::vector<int>& ids, double tol) {
    if (ids.size() <= 1) return 0;
    Mat D(ids.size() - 1, pts[ids[0]].size());
    for (size_t i = 1; i < ids.size(); ++i) D.row(i - 1) = (pts[ids[i]] - pts[ids[0]]).transpose();
    Eigen::JacobiSVD<Mat> svd(D);
    double thresh = tol * std::max(1.0, svd.singularValues()(0));
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > thresh) ++r;
    return r;
}

/// Unit normal of the hyperplane spanned by the given points, or nullopt when they
/// do not span an (n-1)-dimensional affine subspace.
std::optional<Vec> hyperplane_normal(const std::vector<Vec>& pts, const std::vector<int>& ids,
                                     double tol) {
    int n = static_cast<int>(pts[ids[0]].size());
    Mat D(static_cast<int>(ids.size()) - 1, n);
    for (size_t i = 1; i < ids.size(); ++i) D.row(i - 1) = (pts[ids[i]] - pts[ids[0]]).transpose();
    Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double thresh = tol * std::max(1.0, sv.size() ? sv(0) : 1.0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++r;
    if (r != n - 1) return std::nullopt;
    Vec nu = svd.matrixV().col(n - 1);
    return nu.normalized();
}

void enumerate_subsets(int m, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(k);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k) {
            fn(idx);
            return;
        }
        for (int i = start; i <= m - (k - depth); ++i) {
            idx[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    if (k >= 1 && m >= k) rec(0, 0);
}

struct IncidenceTable {
    // incident[v] = sorted facet ids whose plane contains vertex v
    std::vector<std::vector<int>> incident;
};

IncidenceTable incidence(const std::vector<Vec>& verts, const std::vector<Halfspace>& facets,
                         double tol) {
    IncidenceTable t;
    t.incident.resize(verts.size());
    for (size_t v = 0; v < verts.size(); ++v)
        for (size_t f = 0; f < facets.size(); ++f)
            if (std::abs(facets[f].margin(verts[v])) <= tol)
                t.incident[v].push_back(static_cast<int>(f));
    return t;
}

/// Face lattice by closing the facet vertex sets under intersection.
std::vector<std::vector<Face>> build_lattice(const std::vector<Vec>& verts,
                                             const std::vector<Halfspace>& facets, double tol) {
    int n = static_cast<int>(verts[0].size());
    IncidenceTable inc = incidence(verts, facets, tol);

    std::vector<std::vector<int>> facet_verts(facets.size());
    for (size_t v = 0; v < verts.size(); ++v)
        for (int f : inc.incident[v]) facet_verts[f].push_back(static_cast<int>(v));

    std::set<std::vector<int>> known(facet_verts.begin(), facet_verts.end());
    std::vector<std::vector<int>> frontier(known.begin(), known.end());
    while (!frontier.empty()) {
        std::vector<std::vector<int>> next;
        for (const auto& a : frontier) {
            for (const auto& b : facet_verts) {
                std::vector<int> c;
                std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                      std::back_inserter(c));
                if (!c.empty() && !known.count(c)) {
                    known.insert(c);
                    next.push_back(c);
                }
            }
        }
        frontier = std::move(next);
    }

    std::vector<std::vector<Face>> lattice(n);
    for (const auto& vs : known) {
        Face f;
        f.vertex_ids = vs;
        f.dim = affine_rank(verts, vs, tol);
        if (f.dim >= n) continue;  // the whole polytope is not a proper face
        // facets containing every vertex of the face
        std::vector<int> common = inc.incident[vs[0]];
        for (size_t i = 1; i < vs.size(); ++i) {
            std::vector<int> tmp;
            std::set_intersection(common.begin(), common.end(), inc.incident[vs[i]].begin(),
                                  inc.incident[vs[i]].end(), std::back_inserter(tmp));
            common = std::move(tmp);
        }
        f.containing_facet_ids = common;
        lattice[f.dim].push_back(std::move(f));
    }
    for (auto& level : lattice)
        std::sort(level.begin(), level.end(),
                  [](const Face& a, const Face& b) { return a.vertex_ids < b.vertex_ids; });
    return lattice;
}

void validate_lattice(const Polytope& P) {
    int n = P.dim;
    if (n >= 2) {
        for (const Face& f : P.face_lattice[n - 2])
            if (f.containing_facet_ids.size() != 2)
                fail("InconsistentInput", "an (n-2)-face is not contained in exactly two facets");
    }
    for (const auto& hs : P.facets) {
        int cnt = 0;
        for (const auto& v : P.vertices)
            if (std::abs(hs.margin(v)) <= 1e-7 * std::max(1.0, v.norm())) ++cnt;
        if (cnt < n)
            fail("DegenerateInput", "facet supported by fewer than n vertices");
    }
}

Polytope assemble(std::vector<Vec> verts, std::vector<Halfspace> facets, double tol) {
    Polytope P;
    P.dim = static_cast<int>(verts[0].size());
    P.vertices = std::move(verts);
    P.facets = std::move(facets);
    P.face_lattice = build_lattice(P.vertices, P.facets, tol);

    // order facets to align with the (n-1)-level of the lattice
    std::vector<Halfspace> ordered;
    std::vector<Face>& top = P.face_lattice[P.dim - 1];
    for (auto& f : top) {
        if (f.containing_facet_ids.size() != 1)
            fail("InconsistentInput", "ambiguous facet identification in lattice");
        ordered.push_back(P.facets[f.containing_facet_ids[0]]);
    }
    for (size_t i = 0; i < top.size(); ++i) top[i].containing_facet_ids = {static_cast<int>(i)};
    // remap containing_facet_ids on lower faces
    {
        std::vector<int> remap(P.facets.size(), -1);
        IncidenceTable inc = incidence(P.vertices, ordered, tol);
        P.facets = std::move(ordered);
        for (int k = 0; k + 1 < P.dim; ++k)
            for (Face& f : P.face_lattice[k]) {
                std::vector<int> common = inc.incident[f.vertex_ids[0]];
                for (size_t i = 1; i < f.vertex_ids.size(); ++i) {
                    std::vector<int> tmp;
                    std::set_intersection(common.begin(), common.end(),
                                          inc.incident[f.vertex_ids[i]].begin(),
                                          inc.incident[f.vertex_ids[i]].end(),
                                          std::back_inserter(tmp));
                    common = std::move(tmp);
                }
                f.containing_facet_ids = common;
            }
        (void)remap;
    }
    validate_lattice(P);
    return P;
}

}  // namespace

bool Polytope::contains(const Vec& x, double tol) const {
    for (const auto& hs : facets)
        if (hs.margin(x) < -tol) return false;
    return true;
}

std::vector<int> Polytope::active_facets(const Vec& x, double tol) const {
    std::vector<int> out;
    for (size_t f = 0; f < facets.size(); ++f)
        if (std::abs(facets[f].margin(x)) <= tol) out.push_back(static_cast<int>(f));
    return out;
}

bool Polytope::on_boundary(const Vec& x, double tol) const {
    return contains(x, tol) && !active_facets(x, tol).empty();
}

Polytope build_polytope_from_vertices(const std::vector<Vec>& points, const BuildOptions& opt) {
    if (points.empty()) fail("DegenerateInput", "empty vertex list");
    int n = static_cast<int>(points[0].size());
    if (n < 2) fail("DegenerateInput", "dimension must be >= 2");
    for (const auto& p : points)
        if (p.size() != n) fail("InconsistentInput", "vertices of mixed dimension");

    double tol = opt.tau_geom * coord_scale(points);

    std::vector<Vec> pts;
    for (const auto& p : points) {
        bool dup = false;
        for (const auto& q : pts) dup = dup || same_point(p, q, tol);
        if (!dup) pts.push_back(p);
    }
    {
        std::vector<int> all(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) all[i] = static_cast<int>(i);
        if (affine_rank(pts, all, tol) < n)
            fail("DegenerateInput", "vertex set is not full-dimensional");
    }

    // brute-force hull: every supporting hyperplane is spanned by some n vertices
    std::vector<Halfspace> facets;
    int m = static_cast<int>(pts.size());
    enumerate_subsets(m, n, [&](const std::vector<int>& ids) {
        auto nu = hyperplane_normal(pts, ids, tol);
        if (!nu) return;
        double b = nu->dot(pts[ids[0]]);
        int above = 0, below = 0;
        for (const auto& p : pts) {
            double mrg = nu->dot(p) - b;
            if (mrg > tol) ++above;
            if (mrg < -tol) ++below;
        }
        Vec normal = *nu;
        if (above > 0 && below > 0) return;  // not supporting
        if (above == 0 && below == 0) return;
        if (above == 0) {  // all on or below: flip to make inward
            normal = -normal;
            b = -b;
        }
        for (const auto& hs : facets)
            if ((hs.normal - normal).norm() <= 1e-7 && std::abs(hs.offset - b) <= 1e-7 *
                std::max(1.0, std::abs(b)))
                return;
        facets.push_back({normal, b});
    });
    if (facets.empty()) fail("DegenerateInput", "no supporting hyperplanes found");

    // true vertices lie on at least n facet planes
    std::vector<Vec> verts;
    for (const auto& p : pts) {
        int cnt = 0;
        for (const auto& hs : facets)
            if (std::abs(hs.margin(p)) <= tol) ++cnt;
        if (cnt >= n) verts.push_back(p);
    }
    if (verts.size() < static_cast<size_t>(n + 1))
        fail("DegenerateInput", "fewer than n+1 vertices on the hull");
    return assemble(std::move(verts), std::move(facets), tol);
}

Polytope build_polytope_from_halfspaces(int dim, const std::vector<Halfspace>& halfspaces,
                                        const BuildOptions& opt) {
    int n = dim;
    if (n < 2) fail("DegenerateInput", "dimension must be >= 2");
    if (halfspaces.size() < static_cast<size_t>(n + 1))
        fail("UnboundedInput", "fewer than n+1 half-spaces cannot bound a polytope");
    std::vector<Halfspace> hs = halfspaces;
    for (auto& h : hs) {
        double nn = h.normal.norm();
        if (nn <= 0) fail("InconsistentInput", "zero facet normal");
        h.offset /= nn;
        h.normal /= nn;
    }

    // unbounded iff the recession cone {d : nu_i . d >= 0} is nonzero; every extreme
    // ray of that cone is the nullspace of some (n-1) normals
    {
        Mat N(static_cast<int>(hs.size()), n);
        for (size_t i = 0; i < hs.size(); ++i) N.row(static_cast<int>(i)) = hs[i].normal.transpose();
        Eigen::JacobiSVD<Mat> svd(N);
        int r = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-10) ++r;
        if (r < n) fail("UnboundedInput", "facet normals do not span the space");
        auto ray_ok = [&](const Vec& d) {
            for (const auto& h : hs)
                if (h.normal.dot(d) < -1e-9) return false;
            return true;
        };
        bool unbounded = false;
        enumerate_subsets(static_cast<int>(hs.size()), n - 1, [&](const std::vector<int>& ids) {
            if (unbounded) return;
            Mat A(n - 1, n);
            for (int i = 0; i < n - 1; ++i) A.row(i) = hs[ids[i]].normal.transpose();
            Eigen::JacobiSVD<Mat> s(A, Eigen::ComputeFullV);
            int rr = 0;
            for (int i = 0; i < s.singularValues().size(); ++i)
                if (s.singularValues()(i) > 1e-9) ++rr;
            if (rr != n - 1) return;
            Vec d = s.matrixV().col(n - 1);
            if (ray_ok(d) || ray_ok(Vec(-d))) unbounded = true;
        });
        if (unbounded) fail("UnboundedInput", "half-space intersection has a recession direction");
    }

    // candidate vertices: intersections of n facet planes satisfying all constraints
    std::vector<Vec> verts;
    double scale = 1.0;
    enumerate_subsets(static_cast<int>(hs.size()), n, [&](const std::vector<int>& ids) {
        Mat A(n, n);
        Vec b(n);
        for (int i = 0; i < n; ++i) {
            A.row(i) = hs[ids[i]].normal.transpose();
            b(i) = hs[ids[i]].offset;
        }
        Eigen::FullPivLU<Mat> lu(A);
        if (!lu.isInvertible()) return;
        Vec x = lu.solve(b);
        scale = std::max(scale, x.lpNorm<Eigen::Infinity>());
        double tol = opt.tau_geom * scale;
        for (const auto& h : hs)
            if (h.margin(x) < -10 * tol) return;
        for (const auto& q : verts)
            if (same_point(x, q, 10 * tol)) return;
        verts.push_back(x);
    });
    double tol = opt.tau_geom * scale;
    if (verts.size() < static_cast<size_t>(n + 1))
        fail("DegenerateInput", "half-space intersection is not full-dimensional");
    {
        std::vector<int> all(verts.size());
        for (size_t i = 0; i < verts.size(); ++i) all[i] = static_cast<int>(i);
        if (affine_rank(verts, all, tol) < n)
            fail("DegenerateInput", "half-space intersection is not full-dimensional");
    }
    // drop redundant half-spaces (planes touching fewer than n vertices)
    std::vector<Halfspace> facets;
    for (const auto& h : hs) {
        int cnt = 0;
        for (const auto& v : verts)
            if (std::abs(h.margin(v)) <= 10 * tol) ++cnt;
        if (cnt >= n) facets.push_back(h);
    }
    return assemble(std::move(verts), std::move(facets), 10 * tol);
}

std::vector<Face> skeleton(const Polytope& P, int k) {
    if (k < 0) return {};
    if (k > P.dim - 1) fail("InconsistentInput", "skeleton index out of range");
    std::vector<Face> out;
    for (int d = 0; d <= k; ++d)
        for (const Face& f : P.face_lattice[d]) out.push_back(f);
    return out;
}

std::vector<std::pair<int, int>> adjacent_facet_pairs(const Polytope& P) {
    std::set<std::pair<int, int>> pairs;
    for (const Face& f : P.face_lattice[P.dim - 2]) {
        const auto& c = f.containing_facet_ids;
        if (c.size() == 2) pairs.insert({std::min(c[0], c[1]), std::max(c[0], c[1])});
    }
    return {pairs.begin(), pairs.end()};
}

TangentCone tangent_cone(const Polytope& P, const Vec& x0, double tol) {
    if (!P.contains(x0, tol)) fail("PointNotOnBoundary", "point is outside the polytope");
    auto active = P.active_facets(x0, tol);
    if (active.empty()) fail("PointNotOnBoundary", "point is interior");
    TangentCone cone;
    cone.apex = x0;
    for (int f : active) cone.inward_normals.push_back(P.facets[f].normal);
    Mat N(static_cast<int>(active.size()), P.dim);
    for (size_t i = 0; i < active.size(); ++i) N.row(static_cast<int>(i)) =
        cone.inward_normals[i].transpose();
    Eigen::JacobiSVD<Mat> svd(N);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10) ++r;
    cone.pointed_dim = r;
    cone.lineality_dim = P.dim - r;
    for (const auto& v : P.vertices)
        if (!same_point(v, x0, tol)) cone.generators.push_back((v - x0).normalized());
    return cone;
}

bool is_simple(const Polytope& P, double tol) {
    for (const Face& v : P.face_lattice[0]) {
        auto act = P.active_facets(P.vertices[v.vertex_ids[0]], tol);
        if (static_cast<int>(act.size()) != P.dim) return false;
    }
    return true;
}

bool is_simplicial(const Polytope& P, double tol) {
    (void)tol;
    for (const Face& f : P.face_lattice[P.dim - 1])
        if (static_cast<int>(f.vertex_ids.size()) != P.dim) return false;
    return true;
}

std::vector<std::pair<int, int>> cone_adjacent_pairs(const TangentCone& cone) {
    int n = cone.dim();
    int m = static_cast<int>(cone.inward_normals.size());
    if (m < 2) return {};
    if (m == 2) return {{0, 1}};
    // truncate by the unit box around the apex and reuse the polytope lattice
    std::vector<Halfspace> hs;
    for (const auto& nu : cone.inward_normals) hs.push_back({nu, 0.0});
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e(i) = 1.0;
        hs.push_back({e, -1.0});
        hs.push_back({-e, -1.0});
    }
    Polytope trunc = build_polytope_from_halfspaces(n, hs);
    // map truncated-polytope facets back to cone facets
    std::vector<int> cone_id(trunc.facets.size(), -1);
    for (size_t f = 0; f < trunc.facets.size(); ++f)
        for (int i = 0; i < m; ++i)
            if ((trunc.facets[f].normal - cone.inward_normals[i].normalized()).norm() < 1e-7 &&
                std::abs(trunc.facets[f].offset) < 1e-7)
                cone_id[f] = i;
    std::set<std::pair<int, int>> pairs;
    for (auto [a, b] : adjacent_facet_pairs(trunc)) {
        int ia = cone_id[a], ib = cone_id[b];
        if (ia >= 0 && ib >= 0) pairs.insert({std::min(ia, ib), std::max(ia, ib)});
    }
    return {pairs.begin(), pairs.end()};
}

TangentCone orthant_cone(int n) {
    TangentCone c;
    c.apex = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e(i) = 1.0;
        c.inward_normals.push_back(e);
    }
    c.pointed_dim = n;
    c.lineality_dim = 0;
    return c;
}

TangentCone wedge_cone(double mu, int n) {
    if (!(mu > 0.0 && mu < 1.0)) fail("MuOutOfRange", "wedge opening fraction must be in (0,1)");
    TangentCone c;
    c.apex = Vec::Zero(n);
    Vec n1 = Vec::Zero(n), n2 = Vec::Zero(n);
    n1(1) = 1.0;
    n2(0) = std::sin(mu * M_PI);
    n2(1) = -std::cos(mu * M_PI);
    c.inward_normals = {n1, n2};
    c.pointed_dim = 2;
    c.lineality_dim = n - 2;
    return c;
}

TangentCone cone_from_normals(const Vec& apex, const std::vector<Vec>& normals) {
    TangentCone c;
    c.apex = apex;
    for (const auto& nu : normals) c.inward_normals.push_back(nu.normalized());
    int n = static_cast<int>(apex.size());
    Mat N(static_cast<int>(normals.size()), n);
    for (size_t i = 0; i < normals.size(); ++i) N.row(static_cast<int>(i)) =
        c.inward_normals[i].transpose();
    Eigen::JacobiSVD<Mat> svd(N);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10) ++r;
    c.pointed_dim = r;
    c.lineality_dim = n - r;
    return c;
}

std::string write_polytope(const Polytope& P) {
    Json j;
    j["dim"] = P.dim;
    for (const auto& v : P.vertices) {
        std::vector<double> row(v.data(), v.data() + v.size());
        j["vertices"].push_back(row);
    }
    for (const auto& h : P.facets) {
        Json hj;
        hj["normal"] = std::vector<double>(h.normal.data(), h.normal.data() + h.normal.size());
        hj["offset"] = h.offset;
        j["halfspaces"].push_back(hj);
    }
    return j.dump(2);
}

Polytope read_polytope(const std::string& text, const BuildOptions& opt) {
    Json j = Json::parse(text);
    if (!j.contains("dim")) fail("InconsistentInput", "polytope document lacks 'dim'");
    int n = j["dim"].get<int>();
    if (j.contains("vertices") && !j["vertices"].empty()) {
        std::vector<Vec> pts;
        for (const auto& row : j["vertices"]) {
            Vec v(n);
            if (static_cast<int>(row.size()) != n)
                fail("InconsistentInput", "vertex of wrong dimension");
            for (int i = 0; i < n; ++i) v(i) = row[i].get<double>();
            pts.push_back(v);
        }
        Polytope P = build_polytope_from_vertices(pts, opt);
        if (j.contains("halfspaces") && !j["halfspaces"].empty() &&
            j["halfspaces"].size() != P.facets.size())
            fail("InconsistentInput", "vertex and half-space representations disagree");
        return P;
    }
    if (j.contains("halfspaces")) {
        std::vector<Halfspace> hs;
        for (const auto& hj : j["halfspaces"]) {
            Vec nu(n);
            for (int i = 0; i < n; ++i) nu(i) = hj["normal"][i].get<double>();
            hs.push_back({nu, hj["offset"].get<double>()});
        }
        return build_polytope_from_halfspaces(n, hs, opt);
    }
    fail("InconsistentInput", "polytope document needs vertices or halfspaces");
}

Polytope unit_square() {
    return build_polytope_from_vertices({vec2(0, 0), vec2(1, 0), vec2(1, 1), vec2(0, 1)});
}

Polytope unit_cube() {
    std::vector<Vec> v;
    for (int a = 0; a <= 1; ++a)
        for (int b = 0; b <= 1; ++b)
            for (int c = 0; c <= 1; ++c) v.push_back(vec3(a, b, c));
    return build_polytope_from_vertices(v);
}

Polytope regular_octahedron() {
    std::vector<Vec> v;
    for (int i = 0; i < 3; ++i) {
        Vec e = Vec::Zero(3);
        e(i) = 1.0;
        v.push_back(e);
        v.push_back(-e);
    }
    return build_polytope_from_vertices(v);
}

Polytope regular_tetrahedron() {
    return build_polytope_from_vertices(
        {vec3(0, 0, 0), vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1)});
}

}  // namespace polyma
