#pragma once

// Momentum values of the two commuting actions and their tangent maps,
// materialized as dense matrices over stacked tangent coordinates so the
// subspace machinery can take kernels and compare spans.
//
// Left: pairings against the ambient stream catalog (a truncated functional
// on divergence-free fields of the plane). Right: the canonical class of the
// pulled-back edge form modulo differentials of reference functions.

#include "fbdp/dec.hpp"
#include "fbdp/phase.hpp"

namespace fbdp {

struct LeftMomentum {
    AlgebraElementM::Family family = AlgebraElementM::Family::poly;
    int degree = 0;
    VecX pairings; // one entry per catalog field, catalog order
};

struct RightMomentum {
    DiscreteForm rep; // degree 1; fixed point of the free-function quotient
};

// Stacked tangent coordinates: [dphi interleaved; dalpha interleaved], 4V.
VecX stack_tangent(const PhaseTangent& t);
PhaseTangent unstack_tangent(const VecX& c);

// sum_s m_s alpha_s . v(x_s) — quadrature of the ambient pairing. The raw
// overload evaluates at arbitrary (positions, alpha), which the
// finite-difference checks perturb along straight lines.
double left_pairing(const Mesh& mesh, const MatX& positions, const MatX& alpha,
                    const AlgebraElementM& v);
double left_pairing(const PhasePoint& z, const AlgebraElementM& v);
LeftMomentum left_momentum(const PhasePoint& z, const Catalog& cat);

// sum_s m_s alpha_s . (B_w x)_s — the pairing generator_right is Hamiltonian
// for; B_w is the reference-derivative matrix of w at the layout.
double right_pairing(const Mesh& mesh, const MatX& positions, const MatX& alpha,
                     const AlgebraElementS& w);
double right_pairing(const PhasePoint& z, const AlgebraElementS& w);
RightMomentum right_momentum(const PhasePoint& z);

// Derivative of the left pairings: one row per catalog field over stacked
// coordinates. Row i at t: sum_s m_s [dalpha_s.v_i(x_s) + alpha_s.Dv_i(x_s) dphi_s].
MatX left_tangent_map(const PhasePoint& z, const Catalog& cat);

// Linearization of the pulled-back edge form, one row per edge:
// edge (i,j) |-> 1/2(dalpha_i+dalpha_j).(x_j-x_i) + 1/2(alpha_i+alpha_j).(dphi_j-dphi_i).
MatX pullback_tangent_map(const PhasePoint& z);

// Derivative of the right momentum class: pullback linearization composed
// with the fixed free-function quotient projector.
MatX right_tangent_map(const PhasePoint& z);

// Convenience applications of the two derivatives to a single tangent.
double left_pairing_derivative(const PhasePoint& z, const AlgebraElementM& v,
                               const PhaseTangent& t);
DiscreteForm right_class_derivative(const PhasePoint& z, const PhaseTangent& t);

} // namespace fbdp
