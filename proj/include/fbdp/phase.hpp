#pragma once

// The discrete phase space: volume-preserving embeddings, canonical quotient
// covectors, the symplectic pairing, infinitesimal actions of the two
// divergence-free algebras, vertical lifts, and right flows.

#include "fbdp/dec.hpp"
#include "fbdp/mesh.hpp"
#include "fbdp/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbdp {

struct VolEmbedding {
    MeshPtr mesh;
    MatX positions; // V x 2; per-triangle areas match ref_areas
};

struct PhasePoint {
    VolEmbedding emb;
    MatX alpha; // V x 2, canonical quotient representative
    // Everywhere-nonzero covector regime: min_s |alpha_s| recorded, flag set
    // when it is strictly positive.
    double min_alpha = 0.0;
    bool nonzero_regime = false;
};

struct PhaseTangent {
    MatX dphi;   // V x 2, satisfies the linearized area constraint
    MatX dalpha; // V x 2
};

// Divergence-free field on the plane from an analytic stream function.
// Families are disjoint: poly streams are monomials x^a y^b; trig streams
// are products of sin/cos(pi a x) and sin/cos(pi b y) with (a,b) != (0,0).
struct AlgebraElementM {
    enum class Family { poly, trig };
    Family family = Family::poly;
    int a = 0, b = 0;   // exponents / frequencies
    bool sin_x = false; // trig only: sin vs cos factor per axis
    bool sin_y = false;

    Vec2 velocity(const Vec2& p) const;  // perpendicular gradient of the stream
    Mat2 jacobian(const Vec2& p) const;  // analytic derivative of velocity
    std::string name() const;
};

struct Catalog {
    AlgebraElementM::Family family = AlgebraElementM::Family::poly;
    int degree = 0;
    std::vector<AlgebraElementM> fields;
};

// Catalogs nest across degrees within a family (a+b <= degree); degenerate
// zero-frequency sin factors are skipped.
Catalog make_catalog(AlgebraElementM::Family family, int degree);

// Divergence-free boundary-tangent field on the reference complex, stored as
// flattened vertex vectors in construction-layout coordinates.
struct AlgebraElementS {
    VecX w; // 2V
};

// --- constraint machinery ---

// Per-triangle area derivative matrix at positions x: rows T, columns 2V.
MatX area_jacobian(const Mesh& mesh, const MatX& x);

// Midpoint-rule pullback matrix at positions x: rows E (canonical edge
// order), columns 2V covector coordinates.
MatX pullback_matrix(const Mesh& mesh, const MatX& x);

DiscreteForm pullback(const VolEmbedding& emb, const MatX& alpha);

// Euclidean least-squares projection of a raw variation onto the null space
// of the area derivative.
MatX tangent_project(const VolEmbedding& emb, const MatX& raw_dphi);

// Newton projection of positions onto the exact area constraint; throws
// SolverError if it fails to reach tol (absolute, per triangle).
MatX project_areas(const Mesh& mesh, MatX positions, double tol = 1e-12,
                   int max_iter = 60);

// Max per-triangle area violation relative to the mean reference area.
double volume_defect(const Mesh& mesh, const MatX& positions);

// Linearized-area residual of a tangent, relative to mean area and |dphi|.
double tangent_defect(const VolEmbedding& emb, const PhaseTangent& t);

// Throws ConstraintError when tangent_defect exceeds tol.
void require_tangent(const PhasePoint& z, const PhaseTangent& t, double tol = 1e-8);

// --- canonical representatives ---

// Two-stage least squares: first remove the largest class-trivial part whose
// pullback lies along d0 of boundary-vanishing functions, then fix the
// remaining gauge (kernel of the pullback) by minimal mass norm. Idempotent,
// and constant on each covector class.
MatX canonical_alpha(const VolEmbedding& emb, const MatX& raw_alpha);

// Checks the volume constraint (throws ConstraintError beyond vol_tol,
// relative to the mean triangle area), canonicalizes, records the regime.
PhasePoint new_phase_point(const VolEmbedding& emb, const MatX& raw_alpha,
                           double vol_tol = 1e-8);

// --- symplectic structure and actions ---

// Canonical two-form through the reference mass pairing:
//   sum_s m_s (t2.dalpha_s . t1.dphi_s - t1.dalpha_s . t2.dphi_s).
// Evaluates the raw formula; use require_tangent where strictness matters.
double symplectic(const PhasePoint& z, const PhaseTangent& t1, const PhaseTangent& t2);

// Cotangent lift of the ambient field: dphi = v(x), dalpha = -Dv(x)^T alpha.
// Returned raw (no renormalization): this is the exact Hamiltonian field of
// the pairing <alpha, v(x)>_m, which the finite-difference momentum tests
// differentiate along straight lines.
PhaseTangent generator_left(const PhasePoint& z, const AlgebraElementM& v);

// Mass-weighted average, over triangles at s, of the affine deformation
// gradient of the field y relative to the construction layout.
std::vector<Mat2> averaged_deformation(const VolEmbedding& emb, const MatX& y);

// Matrix of y -> (Gbar_s(y) w_s)_s, the directional reference derivative
// along w; its mass adjoint drives the covector leg of the right action.
// Depends on the construction layout and w only, not on current positions.
MatX reference_derivative_matrix(const Mesh& mesh, const AlgebraElementS& w);

// dphi = Gbar(x) w; dalpha = -M^{-1} B_w^T M alpha, the discrete
// integration-by-parts twin of the directional derivative, making the pair
// the exact Hamiltonian field of <alpha, B_w x>_m.
PhaseTangent generator_right(const PhasePoint& z, const AlgebraElementS& w);

// dphi = 0, dalpha = canonical representative of beta's class.
PhaseTangent vertical_lift(const PhasePoint& z, const MatX& beta);

// Classic fourth-order integration of the right generator field with a
// Newton area reprojection after every step; drift beyond 1e-6 * t is an
// error. Result is re-canonicalized into a valid PhasePoint.
PhasePoint flow_right(const PhasePoint& z, const AlgebraElementS& w, double t,
                      int n_steps);

// --- the reference algebra ---

// Orthonormal basis (flattened columns) of {w : the reference pullback of
// the rotated field w-perp is closed on every triangle and vanishes on
// boundary edges} — the discrete divergence-free boundary-tangent fields.
MatX admissible_basis(const Mesh& mesh);

// Max of the closedness and boundary-flux residuals for a candidate w.
double admissibility_defect(const Mesh& mesh, const VecX& w);

// Deterministic generating list: the first admissible basis vectors, then
// cyclic sums of consecutive ones once the dimension is exhausted. The list
// always has `count` elements; its rank is min(count, dim of the algebra).
std::vector<AlgebraElementS> w_basis(const Mesh& mesh, int count);

// --- seeded sampling (shared by the CLI and the acceptance suite) ---

double min_edge_length(const Mesh& mesh, const MatX& positions);

// Layout perturbed by a volume-projected smooth displacement of at most 5%
// of the minimum edge length, then Newton-projected to exact areas; alpha is
// a smooth covector field bounded away from zero. Fully determined by seed.
PhasePoint random_phase_point(const MeshPtr& mesh, std::uint64_t seed);

// Constrained random tangent at z: smooth dphi projected to the linearized
// constraint, smooth dalpha.
PhaseTangent random_tangent(const PhasePoint& z, std::uint64_t seed);

} // namespace fbdp
