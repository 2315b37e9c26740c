#pragma once

// Discrete exterior calculus with boundary: derivatives on forms, P1 Poisson
// solves, the tangent/divergence-free Helmholtz projector, and the canonical
// quotient projections that fix representatives of 1-form classes.

#include "fbdp/mesh.hpp"
#include "fbdp/types.hpp"

#include <utility>
#include <vector>

namespace fbdp {

struct DiscreteForm {
    int degree = 0; // 0: per-vertex, 1: per-canonical-edge, 2: per-triangle
    VecX values;
};

struct EmbeddedDomain {
    MeshPtr mesh;
    MatX positions; // V x 2, the embedded vertex coordinates
};

struct LinearSolverConfig {
    enum class Method { dense, cg };
    Method method = Method::dense;
    double tol = 1e-10;
    int max_iter = 20000;
};

// Dense factorization below 2000 unknowns, conjugate gradient above.
LinearSolverConfig default_solver(int unknowns);

// Boundary vertices in canonical order: boundary loops concatenated, each in
// its stored cyclic order. All "per-boundary-vertex" vectors use this order.
std::vector<int> boundary_order(const Mesh& mesh);

// Outward unit normal at each boundary vertex, from the chord between its
// loop neighbours rotated -90 degrees (interior is on the left of the loop).
// Also returns the matching weight: half the chord length. This choice makes
// the discrete flux sum telescope the shoelace area derivative exactly.
struct BoundaryNormals {
    std::vector<int> order;  // boundary_order(mesh)
    MatX normal;             // one unit normal per boundary vertex
    VecX weight;             // half chord length per boundary vertex
};
BoundaryNormals boundary_normals(const Mesh& mesh, const MatX& positions);

DiscreteForm d0(const Mesh& mesh, const DiscreteForm& f);
DiscreteForm d1(const Mesh& mesh, const DiscreteForm& a);

// Matrix forms of the derivatives in the canonical edge enumeration.
MatX d0_matrix(const Mesh& mesh);
MatX d1_matrix(const Mesh& mesh);

// Edge masses by the 1/3 rule: one third of the total reference area of the
// triangles containing the edge. The weight behind every edge-form pairing.
VecX edge_masses(const Mesh& mesh);

// Current triangle areas, guarded against degeneracy and inversion.
VecX embedded_areas(const EmbeddedDomain& dom);

// P1 hat-function gradients on triangle t (constant per triangle): the
// rotated opposite edge over twice the area, one per corner.
std::array<Vec2, 3> hat_gradients(const Mesh& m, const MatX& x, int t, double area);

// Lumped vertex masses of the embedded domain (1/3 rule on embedded areas).
VecX embedded_vertex_mass(const EmbeddedDomain& dom);

// Per-vertex gradient of a P1 nodal field: triangle gradients mass-averaged
// to vertices. Used for pressure forces and advection.
MatX averaged_gradient(const EmbeddedDomain& dom, const VecX& nodal);

// Weak-divergence functional rows against interior hat functions: row s maps
// a flattened per-vertex field y to the exact integral of y . grad(hat_s).
// A field is discretely divergence-free when all rows vanish.
MatX divergence_rows_interior(const EmbeddedDomain& dom);

// Galerkin P1 solve of laplace(u) = rhs with u = bc on the boundary.
// rhs is the per-vertex strong source; bc follows boundary_order.
VecX poisson_dirichlet(const EmbeddedDomain& dom, const VecX& rhs, const VecX& bc,
                       const LinearSolverConfig& cfg);

// Weak P1 solve of laplace(u) = rhs with du/dn = flux on the boundary,
// normalized to zero mass-weighted mean. Rejects incompatible data.
VecX poisson_neumann(const EmbeddedDomain& dom, const VecX& rhs, const VecX& flux,
                     const LinearSolverConfig& cfg);

// Splits a per-vertex field u into u_par + grad_part where u_par is exactly
// the mass-orthogonal projection onto {weak divergence zero against every
// hat, zero chord-normal component at boundary vertices} — the discrete
// divergence-free tangent fields, of stream dimension about V - B + 1. The
// returned split is idempotent and mass-orthogonal to machine precision.
std::pair<MatX, MatX> helmholtz_project(const EmbeddedDomain& dom, const MatX& u,
                                        const LinearSolverConfig& cfg);

// Consistency oracle for helmholtz_project: the gradient part computed the
// long way round, as the averaged gradient of the Neumann potential of u.
// Agrees with the projector split at discretization order, not exactly.
MatX neumann_gradient_part(const EmbeddedDomain& dom, const MatX& u,
                           const LinearSolverConfig& cfg);

enum class QuotientMode {
    h_vanishing_on_boundary, // quotient by d0 of functions zero on the boundary
    h_free,                  // quotient by d0 of all functions (mod constants)
};

// Unique representative of [a] orthogonal, in the edge-mass pairing, to the
// d0 image of the admissible function space. Linear and idempotent.
DiscreteForm quotient_project(const Mesh& mesh, const DiscreteForm& a, QuotientMode mode);

// The projector's kernel basis (d0 of the admissible space), edge-form
// columns. Exposed for the null-space comparison tests.
MatX quotient_kernel_basis(const Mesh& mesh, QuotientMode mode);

// The same projector as a dense edge-by-edge matrix, for composing with
// linearizations of edge forms.
MatX quotient_matrix(const Mesh& mesh, QuotientMode mode);

} // namespace fbdp
