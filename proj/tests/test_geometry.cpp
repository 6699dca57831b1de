#include <doctest.h>

#include <cmath>
#include <set>

#include "polyma/geometry.hpp"

using namespace polyma;

TEST_SUITE("geometry") {

TEST_CASE("unit square combinatorics") {
    Polytope P = unit_square();
    CHECK(P.dim == 2);
    CHECK(P.vertices.size() == 4);
    CHECK(P.facets.size() == 4);
    CHECK(P.face_lattice[0].size() == 4);
    CHECK(skeleton(P, 0).size() == 4);
}

TEST_CASE("unit cube combinatorics") {
    Polytope P = unit_cube();
    CHECK(P.vertices.size() == 8);
    CHECK(P.face_lattice[1].size() == 12);
    CHECK(P.facets.size() == 6);
    CHECK(skeleton(P, 1).size() == 8 + 12);
    // Euler relation V - E + F = 2
    CHECK(8 - 12 + 6 == 2);
}

TEST_CASE("octahedron combinatorics (brute-force hull of +-e_i)") {
    Polytope P = regular_octahedron();
    CHECK(P.vertices.size() == 6);
    CHECK(P.face_lattice[1].size() == 12);
    CHECK(P.facets.size() == 8);
    int V = static_cast<int>(P.face_lattice[0].size());
    int E = static_cast<int>(P.face_lattice[1].size());
    int F = static_cast<int>(P.face_lattice[2].size());
    CHECK(V - E + F == 2);
}

TEST_CASE("adjacent facet pairs") {
    CHECK(adjacent_facet_pairs(unit_square()).size() == 4);
    CHECK(adjacent_facet_pairs(unit_cube()).size() == 12);
    CHECK(adjacent_facet_pairs(regular_octahedron()).size() == 12);
}

TEST_CASE("adjacency matches the lattice-derived pairs and is symmetric") {
    for (const Polytope& P : {unit_cube(), regular_octahedron(), regular_tetrahedron()}) {
        auto pairs = adjacent_facet_pairs(P);
        std::set<std::pair<int, int>> seen(pairs.begin(), pairs.end());
        for (const Face& f : P.face_lattice[P.dim - 2]) {
            REQUIRE(f.containing_facet_ids.size() == 2);
            int a = f.containing_facet_ids[0], b = f.containing_facet_ids[1];
            CHECK(seen.count({std::min(a, b), std::max(a, b)}) == 1);
        }
        CHECK(seen.size() == P.face_lattice[P.dim - 2].size());
    }
}

TEST_CASE("tangent cones on the cube") {
    Polytope P = unit_cube();
    SUBCASE("at a vertex: 3 normals, pointed") {
        TangentCone c = tangent_cone(P, vec3(0, 0, 0));
        CHECK(c.inward_normals.size() == 3);
        CHECK(c.lineality_dim == 0);
    }
    SUBCASE("at an edge midpoint: one lineality direction") {
        TangentCone c = tangent_cone(P, vec3(0, 0, 0.5));
        CHECK(c.inward_normals.size() == 2);
        CHECK(c.lineality_dim == 1);
    }
    SUBCASE("at a facet interior point: half-space") {
        TangentCone c = tangent_cone(P, vec3(0.5, 0.5, 0));
        CHECK(c.inward_normals.size() == 1);
        CHECK(c.lineality_dim == 2);
    }
    SUBCASE("interior point rejected") {
        CHECK_THROWS_WITH_AS(tangent_cone(P, vec3(0.5, 0.5, 0.5)), doctest::Contains("PointNotOnBoundary"),
                             Error);
    }
}

TEST_CASE("square corner cone is the quarter plane") {
    Polytope P = unit_square();
    TangentCone c = tangent_cone(P, vec2(0, 0));
    REQUIRE(c.inward_normals.size() == 2);
    // normals should be +-e1/e2 up to order
    double s = 0;
    for (const auto& nu : c.inward_normals) s += nu.lpNorm<Eigen::Infinity>();
    CHECK(s == doctest::Approx(2.0));
    CHECK(c.lineality_dim == 0);
}

TEST_CASE("simple / simplicial predicates") {
    CHECK(is_simple(unit_cube()));
    CHECK_FALSE(is_simplicial(unit_cube()));
    CHECK_FALSE(is_simple(regular_octahedron()));
    CHECK(is_simplicial(regular_octahedron()));
    CHECK(is_simple(regular_tetrahedron()));
    CHECK(is_simplicial(regular_tetrahedron()));
    CHECK(is_simple(unit_square()));
}

TEST_CASE("round-trip: vertices -> halfspaces -> rebuild gives the same lattice") {
    for (const Polytope& P : {unit_square(), unit_cube(), regular_octahedron()}) {
        Polytope Q = build_polytope_from_halfspaces(P.dim, P.facets);
        REQUIRE(Q.vertices.size() == P.vertices.size());
        for (int k = 0; k < P.dim; ++k)
            CHECK(Q.face_lattice[k].size() == P.face_lattice[k].size());
    }
}

TEST_CASE("polytope document io") {
    Polytope P = unit_cube();
    std::string doc = write_polytope(P);
    Polytope Q = read_polytope(doc);
    CHECK(Q.vertices.size() == 8);
    CHECK(Q.facets.size() == 6);
    CHECK(doc.find("halfspaces") != std::string::npos);
}

TEST_CASE("degenerate and unbounded inputs are rejected") {
    CHECK_THROWS_WITH_AS(build_polytope_from_vertices({vec2(0, 0), vec2(1, 0), vec2(2, 0)}),
                         doctest::Contains("DegenerateInput"), Error);
    // a slab in 2-D: normals do not span
    std::vector<Halfspace> slab = {{vec2(0, 1), 0.0}, {vec2(0, -1), -1.0},
                                   {vec2(0, 1), -2.0}};
    CHECK_THROWS_WITH_AS(build_polytope_from_halfspaces(2, slab),
                         doctest::Contains("UnboundedInput"), Error);
    // quadrant: spans but has recession directions
    std::vector<Halfspace> quad = {{vec2(1, 0), 0.0}, {vec2(0, 1), 0.0}, {vec2(1, 1).normalized(), 0.0}};
    CHECK_THROWS_WITH_AS(build_polytope_from_halfspaces(2, quad),
                         doctest::Contains("UnboundedInput"), Error);
}

TEST_CASE("cone adjacency via box truncation") {
    TangentCone oct = orthant_cone(3);
    auto pairs = cone_adjacent_pairs(oct);
    CHECK(pairs.size() == 3);
    TangentCone w = wedge_cone(1.0 / 3.0, 3);
    CHECK(cone_adjacent_pairs(w).size() == 1);
}

TEST_CASE("wedge cone opening angle") {
    double mu = 1.0 / 3.0;
    TangentCone w = wedge_cone(mu, 2);
    double c = w.inward_normals[0].dot(w.inward_normals[1]);
    // dihedral angle pi - arccos(c) must equal the opening mu*pi
    CHECK(M_PI - std::acos(c) == doctest::Approx(mu * M_PI).epsilon(1e-12));
}

}  // TEST_SUITE
