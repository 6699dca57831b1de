#ifndef POLYMA_GEOMETRY_HPP
#define POLYMA_GEOMETRY_HPP

#include <optional>
#include <string>
#include <vector>

#include "polyma/types.hpp"

namespace polyma {

/// Half-space {x : normal . x >= offset} with unit inward normal.
struct Halfspace {
    Vec normal;
    double offset = 0.0;

    double margin(const Vec& x) const { return normal.dot(x) - offset; }
};

/// A face of the polytope, stored by its vertex indices and the facets containing it.
struct Face {
    int dim = -1;
    std::vector<int> vertex_ids;
    std::vector<int> containing_facet_ids;
};

/// Tangent cone of a polytope at a boundary point: apex plus the inward normals of
/// the facets active there. The lineality space (directions along which the cone is
/// a full linear factor) is detected from the rank of the normal set.
struct TangentCone {
    Vec apex;
    std::vector<Vec> inward_normals;
    std::vector<Vec> generators;  ///< edge directions when derived from a polytope
    int lineality_dim = 0;        ///< n - rank of the normals
    int pointed_dim = 0;          ///< rank of the normals

    int dim() const { return apex.size() ? static_cast<int>(apex.size()) : 0; }
};

/// Bounded convex polytope with both vertex and half-space representations and the
/// full face lattice (faces of dimension 0..n-1).
class Polytope {
public:
    int dim = 0;
    std::vector<Vec> vertices;
    std::vector<Halfspace> facets;
    /// face_lattice[k] = all k-dimensional faces; face_lattice[n-1] aligns with `facets`.
    std::vector<std::vector<Face>> face_lattice;

    bool contains(const Vec& x, double tol = 0.0) const;
    /// Indices of facets whose plane passes through x (within tol).
    std::vector<int> active_facets(const Vec& x, double tol) const;
    bool on_boundary(const Vec& x, double tol) const;
    const std::vector<Face>& faces_of_dim(int k) const { return face_lattice.at(k); }
};

/// Config shared by the polytope builders.
struct BuildOptions {
    double tau_geom = 1e-9;
};

Polytope build_polytope_from_vertices(const std::vector<Vec>& points,
                                      const BuildOptions& opt = {});
Polytope build_polytope_from_halfspaces(int dim, const std::vector<Halfspace>& halfspaces,
                                        const BuildOptions& opt = {});

/// All faces of dimension <= k (the k-skeleton); k = -1 yields the empty set.
std::vector<Face> skeleton(const Polytope& P, int k);

/// Pairs of facet indices sharing an (n-2)-face.
std::vector<std::pair<int, int>> adjacent_facet_pairs(const Polytope& P);

TangentCone tangent_cone(const Polytope& P, const Vec& x0, double tol = 1e-9);

bool is_simple(const Polytope& P, double tol = 1e-9);
bool is_simplicial(const Polytope& P, double tol = 1e-9);

/// Adjacent facet pairs of a cone (pairs meeting in an (n-2)-dimensional face).
std::vector<std::pair<int, int>> cone_adjacent_pairs(const TangentCone& cone);

/// Convenience cone constructors used across the experiments.
TangentCone orthant_cone(int n);
/// Planar wedge of opening mu*pi (optionally crossed with R^{n-2}).
TangentCone wedge_cone(double mu, int n = 2);
TangentCone cone_from_normals(const Vec& apex, const std::vector<Vec>& normals);

/// Structured-text (JSON) polytope document; the writer emits both representations.
std::string write_polytope(const Polytope& P);
Polytope read_polytope(const std::string& text, const BuildOptions& opt = {});

// Ready-made instances used throughout the tests and presets.
Polytope unit_square();
Polytope unit_cube();
Polytope regular_octahedron();
Polytope regular_tetrahedron();

}  // namespace polyma

#endif
