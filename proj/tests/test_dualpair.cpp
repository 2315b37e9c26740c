#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbdp/dualpair.hpp"
#include "fbdp/linalg.hpp"
#include "oracle/oracle.hpp"

#include <memory>

using namespace fbdp;

namespace {

MeshPtr shared(Mesh&& m) { return std::make_shared<Mesh>(std::move(m)); }

// smallest useful fixture: the four-vertex square with a constant covector
PhasePoint square_point() {
    static auto m = shared(build_square(1, 1.0));
    MatX a(m->vertices, 2);
    a.col(0).setConstant(1.0);
    a.col(1).setConstant(0.5);
    return new_phase_point({m, require_layout(*m)}, a);
}

PhasePoint zero_covector_point() {
    auto m = shared(build_square(1, 1.0));
    return new_phase_point({m, require_layout(*m)}, MatX::Zero(m->vertices, 2));
}

} // namespace

TEST_CASE("tangent space, radical, and arena match the independent constructions") {
    const PhasePoint z = square_point();
    const Subspace T = tangent_space(z);
    const Subspace R = symplectic_radical(z);
    const Subspace A = reduced_arena(z);
    CHECK(T.dim() == 14);
    CHECK(R.dim() == 2);
    CHECK(A.dim() == 12);
    CHECK(oracle::max_angle(T.basis, oracle::tangent_basis(z)) < 1e-7);
    CHECK(oracle::max_angle(R.basis, oracle::radical_basis(z)) < 1e-8);
    CHECK(oracle::max_angle(A.basis, oracle::arena_basis(z)) < 1e-7);
    // the radical really is symplectically inert against the whole space
    CHECK(symplectic_pairing(z, R.basis, T.basis).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("columnwise symplectic pairing agrees with the weighted block matrix") {
    const PhasePoint z = square_point();
    const Subspace T = tangent_space(z);
    const MatX K = oracle::omega_matrix(z);
    const MatX direct = T.basis.transpose() * K * T.basis;
    CHECK((symplectic_pairing(z, T.basis, T.basis) - direct).cwiseAbs().maxCoeff() <
          1e-13);
}

TEST_CASE("generator spans, kernels, and orthogonals have the measured dimensions") {
    const PhasePoint z = square_point();
    const Catalog cat = make_catalog(AlgebraElementM::Family::poly, 2);
    const auto ws = w_basis(*z.emb.mesh, 3);
    const Subspace arena = reduced_arena(z);

    const Subspace spanL = span_generators(z, cat);
    const Subspace spanR = span_generators(z, ws);
    CHECK(spanL.dim() == 5);
    CHECK(spanR.dim() == 3);

    const Subspace kerL = restricted_kernel(left_tangent_map(z, cat), arena);
    const Subspace kerR = restricted_kernel(right_tangent_map(z), arena);
    CHECK(kerL.dim() == 7);
    CHECK(kerR.dim() == 10);

    CHECK(symplectic_orthogonal(z, spanL, arena).dim() == 7);
    CHECK(symplectic_orthogonal(z, spanR, arena).dim() == 9);

    // independent paths: finite-difference momentum rows and a hand-rolled
    // kernel/orthogonal construction
    const MatX arena_o = oracle::arena_basis(z);
    const MatX kerL_o =
        oracle::restricted_kernel(oracle::fd_left_rows(z, cat), arena_o);
    CHECK(kerL_o.cols() == 7);
    CHECK(oracle::max_angle(kerL.basis, kerL_o) < 1e-6);
    const Subspace orthR = symplectic_orthogonal(z, spanR, arena);
    const MatX orthR_o = oracle::symp_orthogonal(z, spanR.basis, arena_o);
    CHECK(orthR_o.cols() == 9);
    CHECK(oracle::max_angle(orthR.basis, orthR_o) < 1e-7);
}

TEST_CASE("one-sided orthogonality holds for the monomial catalog") {
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint z = random_phase_point(m, 31);
    const DualPairReport rep = check_weak_dual_pair(
        z, make_catalog(AlgebraElementM::Family::poly, 2), w_basis(*m, 5));
    CHECK(rep.pass);
    for (const auto& c : rep.checks)
        CHECK(c.residual <= c.tol);
}

TEST_CASE("one-sided orthogonality degrades honestly for high-degree trig") {
    // The trig catalog samples badly on coarse meshes: the cross pairings and
    // kernel containments sit at quadrature-error level, orders above the
    // tolerance. The finite-difference momentum property is exact machinery
    // and keeps passing. Recorded here as the expected behavior.
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint z = random_phase_point(m, 31);
    const DualPairReport rep = check_weak_dual_pair(
        z, make_catalog(AlgebraElementM::Family::trig, 4), w_basis(*m, 5));
    CHECK_FALSE(rep.pass);
    for (const auto& c : rep.checks) {
        if (c.name == "momentum_fd_left" || c.name == "momentum_fd_right")
            CHECK(c.pass);
        else {
            CHECK_FALSE(c.pass);
            CHECK(c.residual > 1e-3); // far above tol, not a marginal miss
        }
    }
}

TEST_CASE("two-sided check reports the dimension mismatch instead of hiding it") {
    const PhasePoint z = square_point();
    const DualPairReport rep = check_strong_dual_pair(
        z, make_catalog(AlgebraElementM::Family::poly, 2), w_basis(*z.emb.mesh, 3));
    CHECK(rep.label == "strong");
    CHECK(rep.dim_tangent == 14);
    CHECK(rep.dim_radical == 2);
    CHECK(rep.dim_arena == 12);
    CHECK(rep.dim_left_span == 5);
    CHECK(rep.dim_right_span == 3);
    CHECK(rep.dim_ker_left == 7);
    CHECK(rep.dim_ker_right == 10);
    CHECK(rep.dim_left_orth == 7);
    CHECK(rep.dim_right_orth == 9);
    CHECK(rep.defect_dim == 4);
    CHECK_FALSE(rep.pass);
    for (const auto& c : rep.checks) {
        if (c.name == "right_orthogonal_equals_ker_right") {
            // 9- vs 10-dimensional: the angle saturates at pi/2 by convention
            CHECK(c.residual > 1.5);
            CHECK_FALSE(c.pass);
        }
        if (c.name == "right_span_in_ker_left")
            CHECK(c.pass);
    }
}

TEST_CASE("transitivity defect shrinks with catalog degree and then saturates") {
    const PhasePoint z = square_point();
    const auto ws = w_basis(*z.emb.mesh, 3);
    const int expected[6] = {5, -1, -3, -3, -3, -3};
    for (int deg = 1; deg <= 6; ++deg) {
        const TransitivityDefect td = transitivity_defect(
            z, make_catalog(AlgebraElementM::Family::trig, deg), ws);
        CHECK(td.defect_dim == expected[deg - 1]);
        if (deg > 1)
            CHECK(td.containment_residual >= 0.0);
    }
}

TEST_CASE("vertical witness sits in the reference kernel outside the ambient span") {
    const PhasePoint z = square_point();
    const Catalog cat = make_catalog(AlgebraElementM::Family::poly, 2);
    const VecX h = z.emb.positions.col(0); // x-coordinate, nonconstant on boundary
    const WitnessReport wr = nontransitivity_witness(z, h, cat);
    CHECK(wr.pass);
    CHECK(wr.solve_residual < 1e-12);
    CHECK(wr.right_map_residual < 1e-9);
    CHECK(wr.witness.dphi.cwiseAbs().maxCoeff() == 0.0); // vertical
    CHECK(wr.witness_norm > 0.5);
    CHECK(wr.boundary_form_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    // measured fractions on this fixture: 55% of the witness is unreachable
    CHECK(wr.span_residual_fraction > 0.5);
    CHECK(wr.small_field_constant == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("regime and schema gates fire where documented") {
    const PhasePoint z = square_point();
    const Catalog cat = make_catalog(AlgebraElementM::Family::poly, 2);
    const auto ws = w_basis(*z.emb.mesh, 3);

    CHECK_THROWS_AS((void)nontransitivity_witness(z, VecX::Zero(3), cat), SchemaError);
    CHECK_THROWS_AS((void)nontransitivity_witness(z, VecX::Ones(z.emb.mesh->vertices), cat),
                    RegimeError);

    const PhasePoint z0 = zero_covector_point();
    CHECK_FALSE(z0.nonzero_regime);
    CHECK_THROWS_AS((void)check_strong_dual_pair(z0, cat, ws), RegimeError);
    CHECK_THROWS_AS((void)transitivity_defect(z0, cat, ws), RegimeError);
}
