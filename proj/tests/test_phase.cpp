#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbdp/dec.hpp"
#include "fbdp/linalg.hpp"
#include "fbdp/momentum.hpp"
#include "fbdp/phase.hpp"
#include "oracle/oracle.hpp"

#include <cmath>
#include <memory>
#include <set>

using namespace fbdp;

namespace {

MeshPtr shared(Mesh&& m) { return std::make_shared<Mesh>(std::move(m)); }

PhasePoint layout_point(const MeshPtr& m, const MatX& alpha) {
    return new_phase_point({m, require_layout(*m)}, alpha);
}

MatX constant_alpha(int v, double ax, double ay) {
    MatX a(v, 2);
    a.col(0).setConstant(ax);
    a.col(1).setConstant(ay);
    return a;
}

} // namespace

TEST_CASE("midpoint pullback of a constant covector telescopes coordinate differences") {
    auto m = shared(build_disk(1, 5, 1.0));
    const MatX& x = require_layout(*m);
    const DiscreteForm a = pullback({m, x}, constant_alpha(m->vertices, 1.0, 0.5));
    for (int e = 0; e < m->edge_count(); ++e) {
        const Vec2 d = x.row(m->edges[e][1]) - x.row(m->edges[e][0]);
        CHECK(a.values[e] == doctest::Approx(1.0 * d.x() + 0.5 * d.y()).epsilon(1e-14));
    }
}

TEST_CASE("pullback matrix applies the pullback linearly") {
    auto m = shared(build_square(2, 1.0));
    const MatX& x = require_layout(*m);
    MatX alpha(m->vertices, 2);
    for (int s = 0; s < m->vertices; ++s) {
        alpha(s, 0) = 0.3 + x(s, 1);
        alpha(s, 1) = 1.1 - 0.5 * x(s, 0);
    }
    const MatX P = pullback_matrix(*m, x);
    CHECK((P * flatten(alpha) - pullback({m, x}, alpha).values).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("area jacobian matches central differences") {
    auto m = shared(build_disk(1, 6, 1.0));
    MatX x = require_layout(*m);
    x.array() += 0.01; // translate so nothing is special about the origin
    const MatX J = area_jacobian(*m, x);
    const MatX Jfd = oracle::fd_area_jacobian(*m, x);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("newton projection restores exact per-triangle areas") {
    auto m = shared(build_disk(2, 8, 1.0));
    MatX x = require_layout(*m);
    for (int s = 0; s < m->vertices; ++s) {
        x(s, 0) += 0.01 * std::sin(3.0 * s);
        x(s, 1) += 0.01 * std::cos(2.0 * s);
    }
    CHECK(volume_defect(*m, x) > 1e-3); // perturbation is visible
    const MatX projected = project_areas(*m, x);
    CHECK(volume_defect(*m, projected) < 1e-12);
    // the projection is a small correction, not a re-mesh
    CHECK((projected - x).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("tangent projection lands in the linearized constraint and is idempotent") {
    auto m = shared(build_disk(2, 8, 1.0));
    const VolEmbedding emb{m, require_layout(*m)};
    MatX raw(m->vertices, 2);
    for (int s = 0; s < m->vertices; ++s) {
        raw(s, 0) = std::sin(0.7 * s);
        raw(s, 1) = std::cos(1.3 * s);
    }
    const MatX t = tangent_project(emb, raw);
    const MatX A = area_jacobian(*m, emb.positions);
    CHECK((A * flatten(t)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((tangent_project(emb, t) - t).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tangent strictness gate fires beyond tolerance") {
    auto m = shared(build_square(1, 1.0));
    const PhasePoint z = layout_point(m, constant_alpha(4, 1.0, 0.0));
    PhaseTangent bad;
    bad.dphi = MatX::Zero(4, 2);
    bad.dphi(0, 0) = 1.0; // moves one vertex: definitely changes areas
    bad.dalpha = MatX::Zero(4, 2);
    CHECK(tangent_defect(z.emb, bad) > 1e-3);
    CHECK_THROWS_AS(require_tangent(z, bad), ConstraintError);
    PhaseTangent good;
    good.dphi = tangent_project(z.emb, bad.dphi);
    good.dalpha = bad.dalpha;
    CHECK_NOTHROW(require_tangent(z, good));
}

TEST_CASE("canonical covector representative is an idempotent class map") {
    auto m = shared(build_disk(1, 4, 1.0));
    const VolEmbedding emb{m, require_layout(*m)};
    MatX alpha(m->vertices, 2);
    for (int s = 0; s < m->vertices; ++s) {
        alpha(s, 0) = 1.0 + 0.2 * s;
        alpha(s, 1) = -0.5 + 0.1 * s * s;
    }
    const MatX c1 = canonical_alpha(emb, alpha);
    CHECK((canonical_alpha(emb, c1) - c1).cwiseAbs().maxCoeff() < 1e-10);

    // gauge direction 1: kernel of the pullback (8 edges vs 10 covector dofs)
    const MatX P = pullback_matrix(*m, emb.positions);
    const MatX ker = null_space(P);
    REQUIRE(ker.cols() >= 2);
    const MatX c2 = canonical_alpha(emb, alpha + 0.7 * unflatten(ker.col(0)));
    CHECK((c2 - c1).cwiseAbs().maxCoeff() < 1e-9);

    // gauge direction 2: exact preimage of d0(h) for interior-supported h
    VecX h = VecX::Zero(m->vertices);
    for (int s = 0; s < m->vertices; ++s)
        if (!m->boundary_vertex[s])
            h[s] = 1.0;
    const VecX d0h = d0(*m, {0, h}).values;
    const VecX g = P.completeOrthogonalDecomposition().solve(d0h);
    REQUIRE((P * g - d0h).cwiseAbs().maxCoeff() < 1e-12); // preimage is exact here
    const MatX c3 = canonical_alpha(emb, alpha + 0.5 * unflatten(g));
    CHECK((c3 - c1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("phase point construction gates volume and records the covector regime") {
    auto m = shared(build_square(1, 1.0));
    MatX bad = require_layout(*m);
    bad(0, 0) -= 0.2; // breaks the per-triangle areas
    CHECK_THROWS_AS((void)new_phase_point({m, bad}, constant_alpha(4, 1.0, 0.0)),
                    ConstraintError);

    const PhasePoint z = layout_point(m, constant_alpha(4, 1.0, 0.5));
    CHECK(z.nonzero_regime);
    CHECK(z.min_alpha > 0.0);
    for (int s = 0; s < m->vertices; ++s)
        CHECK(z.alpha.row(s).norm() >= z.min_alpha - 1e-14);

    MatX touching = constant_alpha(4, 1.0, 0.0);
    touching.row(2).setZero();
    const PhasePoint z0 = layout_point(m, touching);
    // the canonical representative may move it, but the recorded minimum is
    // whatever the stored alpha attains
    CHECK(z0.min_alpha == doctest::Approx(z0.alpha.rowwise().norm().minCoeff()));
}

TEST_CASE("stream catalogs count and nest as documented") {
    // monomial streams x^a y^b with a+b <= k
    CHECK(make_catalog(AlgebraElementM::Family::poly, 2).fields.size() == 6);
    CHECK(make_catalog(AlgebraElementM::Family::poly, 3).fields.size() == 10);
    // trig products, zero-frequency sin factors skipped
    CHECK(make_catalog(AlgebraElementM::Family::trig, 2).fields.size() == 12);
    CHECK(make_catalog(AlgebraElementM::Family::trig, 4).fields.size() == 40);
    CHECK(make_catalog(AlgebraElementM::Family::trig, 6).fields.size() == 84);

    for (auto family : {AlgebraElementM::Family::poly, AlgebraElementM::Family::trig}) {
        const Catalog small = make_catalog(family, 2);
        const Catalog big = make_catalog(family, 4);
        std::set<std::string> big_names;
        for (const auto& f : big.fields)
            big_names.insert(f.name());
        CHECK(big_names.size() == big.fields.size()); // names are distinct
        for (const auto& f : small.fields)
            CHECK(big_names.count(f.name()) == 1); // catalogs nest
    }
    CHECK_THROWS_AS((void)make_catalog(AlgebraElementM::Family::poly, -1), SchemaError);
}

TEST_CASE("catalog velocities are divergence-free with analytic jacobians") {
    for (auto family : {AlgebraElementM::Family::poly, AlgebraElementM::Family::trig}) {
        for (const auto& f : make_catalog(family, 3).fields) {
            const Vec2 p(0.37, -0.21);
            const Mat2 J = f.jacobian(p);
            CHECK(std::abs(J.trace()) < 1e-12); // stream construction
            const double eps = 1e-6;
            for (int c = 0; c < 2; ++c) {
                Vec2 pp = p, pm = p;
                pp[c] += eps;
                pm[c] -= eps;
                const Vec2 fd = (f.velocity(pp) - f.velocity(pm)) / (2 * eps);
                CHECK((fd - J.col(c)).norm() < 1e-8);
            }
        }
    }
}

TEST_CASE("symplectic pairing is antisymmetric with the stated vertex weights") {
    auto m = shared(build_square(1, 1.0));
    const PhasePoint z = layout_point(m, constant_alpha(4, 1.0, 0.5));
    PhaseTangent t1, t2;
    t1.dphi = MatX::Zero(4, 2);
    t1.dalpha = MatX::Zero(4, 2);
    t2 = t1;
    t1.dphi(1, 0) = 2.0;
    t2.dalpha(1, 0) = 3.0;
    // only vertex 1 contributes: m_1 * (t2.dalpha . t1.dphi - 0)
    CHECK(symplectic(z, t1, t2) ==
          doctest::Approx(m->vertex_mass[1] * 6.0).epsilon(1e-14));
    CHECK(symplectic(z, t2, t1) ==
          doctest::Approx(-m->vertex_mass[1] * 6.0).epsilon(1e-14));
}

TEST_CASE("ambient generator is the cotangent lift") {
    auto m = shared(build_disk(1, 6, 1.0));
    MatX alpha(m->vertices, 2);
    for (int s = 0; s < m->vertices; ++s) {
        alpha(s, 0) = 0.8 + 0.1 * s;
        alpha(s, 1) = -0.3;
    }
    const PhasePoint z = layout_point(m, alpha);

    // rotation = stream (x^2 + y^2)/2, assembled from two catalog monomials
    AlgebraElementM x2, y2;
    x2.family = y2.family = AlgebraElementM::Family::poly;
    x2.a = 2;
    y2.b = 2;
    const PhaseTangent g1 = generator_left(z, x2);
    const PhaseTangent g2 = generator_left(z, y2);
    for (int s = 0; s < m->vertices; ++s) {
        const Vec2 p = z.emb.positions.row(s);
        const Vec2 v = 0.5 * (g1.dphi.row(s) + g2.dphi.row(s));
        CHECK((v - Vec2(-p.y(), p.x())).norm() < 1e-13); // rigid rotation
        // covectors co-rotate: dalpha = alpha rotated +90 degrees
        const Vec2 da = 0.5 * (g1.dalpha.row(s) + g2.dalpha.row(s));
        const Vec2 a = z.alpha.row(s);
        CHECK((da - Vec2(-a.y(), a.x())).norm() < 1e-13);
    }
}

TEST_CASE("ambient generator satisfies the pairing derivative identity") {
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint z = random_phase_point(m, 21);
    const Catalog cat = make_catalog(AlgebraElementM::Family::trig, 2);
    for (const auto& v : {cat.fields[0], cat.fields[5], cat.fields[11]}) {
        const PhaseTangent gen = generator_left(z, v);
        for (unsigned seed : {1u, 2u}) {
            const PhaseTangent t = random_tangent(z, seed);
            const double eps = 1e-6;
            const double plus = left_pairing(*m, z.emb.positions + eps * t.dphi,
                                             z.alpha + eps * t.dalpha, v);
            const double minus = left_pairing(*m, z.emb.positions - eps * t.dphi,
                                              z.alpha - eps * t.dalpha, v);
            const double fd = (plus - minus) / (2 * eps);
            const double om = symplectic(z, gen, t);
            CHECK(std::abs(fd - om) <= 1e-6 * std::max(1.0, std::abs(om)));
        }
    }
}

TEST_CASE("reference generator satisfies the pairing derivative identity") {
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint z = random_phase_point(m, 22);
    for (const auto& w : w_basis(*m, 3)) {
        const PhaseTangent gen = generator_right(z, w);
        const PhaseTangent t = random_tangent(z, 5);
        const double eps = 1e-6;
        const double plus = right_pairing(*m, z.emb.positions + eps * t.dphi,
                                          z.alpha + eps * t.dalpha, w);
        const double minus = right_pairing(*m, z.emb.positions - eps * t.dphi,
                                           z.alpha - eps * t.dalpha, w);
        const double fd = (plus - minus) / (2 * eps);
        const double om = symplectic(z, gen, t);
        CHECK(std::abs(fd - om) <= 1e-6 * std::max(1.0, std::abs(om)));
    }
}

TEST_CASE("reference derivative matrix depends on the layout only") {
    auto m = shared(build_disk(1, 6, 1.0));
    const auto ws = w_basis(*m, 2);
    const MatX B = reference_derivative_matrix(*m, ws.front());
    // generator dphi is the matrix applied to whatever the positions are
    const PhasePoint z = random_phase_point(m, 4);
    const PhaseTangent gen = generator_right(z, ws.front());
    CHECK((flatten(gen.dphi) - B * flatten(z.emb.positions)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("averaged deformation of the identity embedding is the identity") {
    auto m = shared(build_disk(2, 8, 1.0));
    const VolEmbedding emb{m, require_layout(*m)};
    for (const Mat2& G : averaged_deformation(emb, emb.positions))
        CHECK((G - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vertical lift fixes the base point and canonicalizes the covector") {
    auto m = shared(build_disk(1, 4, 1.0));
    const PhasePoint z = layout_point(m, constant_alpha(m->vertices, 1.0, 0.0));
    MatX beta(m->vertices, 2);
    for (int s = 0; s < m->vertices; ++s) {
        beta(s, 0) = 0.1 * s;
        beta(s, 1) = 0.4;
    }
    const PhaseTangent lift = vertical_lift(z, beta);
    CHECK(lift.dphi.cwiseAbs().maxCoeff() == 0.0);
    CHECK((lift.dalpha - canonical_alpha(z.emb, beta)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("admissible reference algebra has the measured dimensions") {
    auto sq = shared(build_square(1, 1.0));
    auto disk = shared(build_disk(2, 8, 1.0));
    auto ann = shared(build_annulus(1, 8, 0.5, 1.0));
    CHECK(admissible_basis(*sq).cols() == 3);
    CHECK(admissible_basis(*disk).cols() == 4);
    CHECK(admissible_basis(*ann).cols() == 2);
    for (const auto& m : {sq, disk, ann}) {
        const MatX B = admissible_basis(*m);
        CHECK((B.transpose() * B - MatX::Identity(B.cols(), B.cols()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        for (int c = 0; c < B.cols(); ++c)
            CHECK(admissibility_defect(*m, B.col(c)) < 1e-10);
    }
}

TEST_CASE("generating list of reference fields is admissible and deterministic") {
    auto m = shared(build_disk(2, 8, 1.0));
    const auto ws = w_basis(*m, 6);
    REQUIRE(ws.size() == 6);
    for (const auto& w : ws)
        CHECK(admissibility_defect(*m, w.w) < 1e-9);
    const auto again = w_basis(*m, 6);
    for (size_t k = 0; k < ws.size(); ++k)
        CHECK((ws[k].w - again[k].w).cwiseAbs().maxCoeff() == 0.0);
    // the list spans the full algebra
    MatX stacked(2 * m->vertices, ws.size());
    for (size_t k = 0; k < ws.size(); ++k)
        stacked.col(k) = ws[k].w;
    CHECK(oracle::rank_of(stacked) == admissible_basis(*m).cols());
}

TEST_CASE("right flow preserves areas and reduces to the identity at t=0") {
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint z = random_phase_point(m, 31);
    const auto ws = w_basis(*m, 3);

    const PhasePoint still = flow_right(z, ws.front(), 0.0, 4);
    CHECK((still.emb.positions - z.emb.positions).cwiseAbs().maxCoeff() < 1e-14);

    const double t = 0.01;
    const PhasePoint moved = flow_right(z, ws.front(), t, 16);
    CHECK((moved.emb.positions - z.emb.positions).cwiseAbs().maxCoeff() > 1e-5);
    CHECK(volume_defect(*m, moved.emb.positions) < 1e-6 * t);

    // the per-step area projection dominates the integrator truncation, so the
    // projected positions converge at first order in the step
    const PhasePoint fine = flow_right(z, ws.front(), t, 32);
    const PhasePoint finer = flow_right(z, ws.front(), t, 64);
    const double d1 = (moved.emb.positions - fine.emb.positions).cwiseAbs().maxCoeff();
    const double d2 = (fine.emb.positions - finer.emb.positions).cwiseAbs().maxCoeff();
    CHECK(d1 < 5e-8);
    CHECK(d1 / d2 > 1.5);
    CHECK(d1 / d2 < 3.0);

    CHECK_THROWS_AS((void)flow_right(z, ws.front(), t, -1), SchemaError);
}

TEST_CASE("seeded samples are reproducible and satisfy their invariants") {
    auto m = shared(build_disk(2, 8, 1.0));
    const PhasePoint a = random_phase_point(m, 77);
    const PhasePoint b = random_phase_point(m, 77);
    CHECK((a.emb.positions - b.emb.positions).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.alpha - b.alpha).cwiseAbs().maxCoeff() == 0.0);
    CHECK(volume_defect(*m, a.emb.positions) < 1e-10);
    CHECK(a.nonzero_regime);

    const PhasePoint c = random_phase_point(m, 78);
    CHECK((a.emb.positions - c.emb.positions).cwiseAbs().maxCoeff() > 0.0);

    const PhaseTangent t1 = random_tangent(a, 5);
    const PhaseTangent t2 = random_tangent(a, 5);
    CHECK((t1.dphi - t2.dphi).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tangent_defect(a.emb, t1) < 1e-8);
}
