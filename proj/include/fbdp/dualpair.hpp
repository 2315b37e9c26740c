#pragma once

// Symplectic linear algebra at a phase point: the constrained tangent space
// and its degenerate directions, generator spans, symplectic orthogonals,
// momentum-kernel comparisons, the transitivity defect of the reference
// action, and the vertical-lift witness showing the ambient action misses
// part of the right momentum kernel.

#include "fbdp/momentum.hpp"

#include <string>
#include <vector>

namespace fbdp {

// Orthonormal basis (stacked-coordinate columns) of a subspace of the
// constrained tangent space at a phase point.
struct Subspace {
    MatX basis; // 4V x dim, Euclidean-orthonormal columns
    int dim() const { return static_cast<int>(basis.cols()); }
};

// Constrained tangent space T_z: area-constraint kernel for dphi, all of
// covector space for dalpha.
Subspace tangent_space(const PhasePoint& z);

// Directions in T_z that the lumped symplectic form pairs to zero with all
// of T_z (vertical covector directions dual to the area constraints).
Subspace symplectic_radical(const PhasePoint& z);

// T_z with the radical removed; the form is invertible here, and all kernel
// and orthogonal comparisons happen inside it.
Subspace reduced_arena(const PhasePoint& z);

// omega evaluated columnwise: entry (i,j) = omega(a_i, b_j).
MatX symplectic_pairing(const PhasePoint& z, const MatX& a, const MatX& b);

// Orthonormalized span of generator images, rank-truncated at the shared
// singular-value cutoff. Left overload: ambient catalog; right: reference
// fields.
Subspace span_generators(const PhasePoint& z, const Catalog& cat);
Subspace span_generators(const PhasePoint& z, const std::vector<AlgebraElementS>& ws);

// {t in `within` : omega(t, u) = 0 for all u in U}. The default ambient is
// the full constrained tangent space, whose radical therefore always joins
// the result.
Subspace symplectic_orthogonal(const PhasePoint& z, const Subspace& U,
                               const Subspace& within);
Subspace symplectic_orthogonal(const PhasePoint& z, const Subspace& U);

// Kernel of a stacked-coordinate linear map restricted to a subspace.
Subspace restricted_kernel(const MatX& map, const Subspace& within);

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct DualPairReport {
    std::string label;
    int dim_tangent = 0;
    int dim_radical = 0;
    int dim_arena = 0;
    int dim_left_span = 0;  // ambient-catalog generators
    int dim_right_span = 0; // reference-field generators
    int dim_ker_left = 0;   // kernel of the left tangent map in the arena
    int dim_ker_right = 0;
    int dim_left_orth = 0;  // symplectic orthogonal of the left span (arena)
    int dim_right_orth = 0;
    int defect_dim = 0;     // dim ker(left map) - dim right span, signed
    std::vector<CheckResult> checks;
    bool pass = false;
};

// One-sided orthogonality checks: cross pairings of the two generator
// families vanish, each family lies in the other momentum's kernel, and the
// finite-difference momentum property holds. Residuals recorded; failures
// mark the report, they do not throw.
DualPairReport check_weak_dual_pair(const PhasePoint& z, const Catalog& cat,
                                    const std::vector<AlgebraElementS>& ws,
                                    double tol = 1e-7);

// Two-sided check: the symplectic orthogonal of the right span against the
// kernel of the right tangent map (principal angle), plus the transitivity
// defect. Requires the everywhere-nonzero covector regime.
DualPairReport check_strong_dual_pair(const PhasePoint& z, const Catalog& cat,
                                      const std::vector<AlgebraElementS>& ws,
                                      double tol = 1e-6);

struct TransitivityDefect {
    int defect_dim = 0;           // dim ker(left map in arena) - dim right span
    double containment_residual = 0.0; // part of that kernel outside the span
};

// How far the reference action is from filling the left momentum's kernel.
// Signed: a rich catalog can cut the kernel below the span dimension on
// tiny meshes. Requires the everywhere-nonzero regime.
TransitivityDefect transitivity_defect(const PhasePoint& z, const Catalog& cat,
                                       const std::vector<AlgebraElementS>& ws);

struct WitnessReport {
    PhaseTangent witness;          // vertical lift of the solved covector
    double solve_residual = 0.0;   // pullback-equation LS residual, relative
    double right_map_residual = 0.0; // norm of right tangent map on the witness
    double witness_norm = 0.0;       // mass norm of the witness
    double boundary_form_norm = 0.0; // norm of d0(h) over boundary edges
    double small_field_constant = 0.0; // max over catalog fields of
                                       // boundary-pullback(dalpha) / max|v|
    double span_residual_fraction = 0.0; // mass-norm distance to the left
                                         // generator span, over witness norm
    bool pass = false; // right_map_residual within tolerance
};

// Vertical tangent in the kernel of the right tangent map that the ambient
// catalog cannot reach: solves pullback(beta) = d0(h) in least squares and
// lifts it. h must be nonconstant on the boundary, else the lift is the
// zero class.
WitnessReport nontransitivity_witness(const PhasePoint& z, const VecX& h,
                                      const Catalog& cat, double tol = 1e-9);

} // namespace fbdp
