#pragma once

// Reference-manifold representation: triangulated 2-complexes with boundary,
// reference areas, lumped vertex masses, construction and serialization.

#include "fbdp/types.hpp"

#include <array>
#include <optional>
#include <unordered_map>
#include <vector>

namespace fbdp {

struct Mesh {
    int vertices = 0;                             // V
    std::vector<std::array<int, 3>> triangles;    // CCW in the construction layout
    std::vector<std::vector<int>> boundary_loops; // cyclic, interior on the left
    VecX ref_areas;                               // per triangle, > 0
    VecX vertex_mass;                             // per vertex: (1/3) * sum of incident ref_areas

    // Construction-time flat coordinates (V x 2). The serialized schema does
    // not require them, so a loaded mesh may lack them; operations that need a
    // global reference chart (deformation gradients, admissibility of fields
    // on the reference complex) refuse to run without them.
    std::optional<MatX> layout;

    // Derived connectivity, filled by finalize(). Canonical edge order is
    // sorted vertex pairs (i < j), lexicographic; orientation low -> high.
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> tri_edges;      // edge id per triangle side
    std::vector<std::array<int, 3>> tri_edge_signs; // +1 when the side runs low -> high
    std::vector<int> boundary_edges;                // edge ids with one incident triangle
    std::vector<char> boundary_vertex;              // per-vertex flag

    int edge_count() const { return static_cast<int>(edges.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }

    // Edge id for an unordered vertex pair; throws ConnectivityError if the
    // pair is not an edge of the complex.
    int edge_id(int i, int j) const;

    // Derives connectivity and checks every structural invariant; throws
    // SchemaError / ConnectivityError / OrientationError. Builders and
    // load_mesh call this; call it yourself after assembling a Mesh by hand.
    void finalize();

  private:
    std::unordered_map<long long, int> edge_lookup_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

Mesh build_square(int n, double side);
Mesh build_disk(int n_radial, int n_angular, double radius);
Mesh build_annulus(int n_radial, int n_angular, double r_in, double r_out);

Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

// Field-for-field comparison used by the round-trip tests (exact on ints,
// bitwise on doubles since serialization is full-precision).
bool meshes_equal(const Mesh& a, const Mesh& b);

double total_ref_area(const Mesh& mesh);

// Layout accessor for operations that cannot run without it.
const MatX& require_layout(const Mesh& mesh);

// Signed area of triangle t of the complex under vertex positions x (V x 2).
double triangle_area(const Mesh& mesh, const MatX& x, int t);

} // namespace fbdp
