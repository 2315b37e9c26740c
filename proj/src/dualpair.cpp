#include "fbdp/dualpair.hpp"

#include "fbdp/linalg.hpp"

#include <cmath>
#include <sstream>

namespace fbdp {

namespace {

VecX interleaved_mass(const Mesh& m) {
    VecX out(2 * m.vertices);
    for (int s = 0; s < m.vertices; ++s)
        out[2 * s] = out[2 * s + 1] = m.vertex_mass[s];
    return out;
}

void require_volume(const PhasePoint& z) {
    const double d = volume_defect(*z.emb.mesh, z.emb.positions);
    if (d > 1e-8) {
        std::ostringstream msg;
        msg << "phase point violates the volume constraint: relative defect " << d;
        throw ConstraintError(msg.str());
    }
}

void require_regime(const PhasePoint& z) {
    if (!z.nonzero_regime)
        throw RegimeError("phase point has a vanishing covector at some vertex; "
                          "the transitivity statements need the nonzero regime");
}

// Norm restricted to boundary edges of the pullback of a covector field.
double boundary_pullback_norm(const PhasePoint& z, const MatX& covector) {
    const DiscreteForm pb = pullback(z.emb, covector);
    double acc = 0.0;
    for (int e : z.emb.mesh->boundary_edges)
        acc += pb.values[e] * pb.values[e];
    return std::sqrt(acc);
}

} // namespace

Subspace tangent_space(const PhasePoint& z) {
    const Mesh& m = *z.emb.mesh;
    const int n = 2 * m.vertices;
    const MatX K = null_space(area_jacobian(m, z.emb.positions));
    MatX B = MatX::Zero(2 * n, K.cols() + n);
    B.topLeftCorner(n, K.cols()) = K;
    B.bottomRightCorner(n, n) = MatX::Identity(n, n);
    return {B};
}

Subspace symplectic_radical(const PhasePoint& z) {
    const Mesh& m = *z.emb.mesh;
    const int n = 2 * m.vertices;
    const MatX A = area_jacobian(m, z.emb.positions);
    // dalpha directions with M dalpha orthogonal to every constrained dphi,
    // i.e. M^{-1} times the row span of the area constraints.
    const MatX R = orthonormal_span(A.transpose());
    const VecX minv = interleaved_mass(m).cwiseInverse();
    const MatX D = orthonormal_span(minv.asDiagonal() * R);
    MatX B = MatX::Zero(2 * n, D.cols());
    B.bottomRows(n) = D;
    return {B};
}

Subspace reduced_arena(const PhasePoint& z) {
    const Subspace T = tangent_space(z);
    const Subspace R = symplectic_radical(z);
    const MatX P = T.basis - R.basis * (R.basis.transpose() * T.basis);
    return {orthonormal_span(P)};
}

MatX symplectic_pairing(const PhasePoint& z, const MatX& a, const MatX& b) {
    const int n = 2 * z.emb.mesh->vertices;
    const VecX m2 = interleaved_mass(*z.emb.mesh);
    return a.topRows(n).transpose() * (m2.asDiagonal() * b.bottomRows(n)) -
           a.bottomRows(n).transpose() * (m2.asDiagonal() * b.topRows(n));
}

Subspace span_generators(const PhasePoint& z, const Catalog& cat) {
    const int n = 4 * z.emb.mesh->vertices;
    MatX G(n, cat.fields.size());
    for (size_t i = 0; i < cat.fields.size(); ++i)
        G.col(i) = stack_tangent(generator_left(z, cat.fields[i]));
    return {orthonormal_span(G)};
}

Subspace span_generators(const PhasePoint& z, const std::vector<AlgebraElementS>& ws) {
    const int n = 4 * z.emb.mesh->vertices;
    MatX G(n, ws.size());
    for (size_t j = 0; j < ws.size(); ++j)
        G.col(j) = stack_tangent(generator_right(z, ws[j]));
    return {orthonormal_span(G)};
}

Subspace symplectic_orthogonal(const PhasePoint& z, const Subspace& U,
                               const Subspace& within) {
    if (U.dim() == 0)
        return within;
    const MatX G = symplectic_pairing(z, within.basis, U.basis);
    return {within.basis * null_space(G.transpose())};
}

Subspace symplectic_orthogonal(const PhasePoint& z, const Subspace& U) {
    return symplectic_orthogonal(z, U, tangent_space(z));
}

Subspace restricted_kernel(const MatX& map, const Subspace& within) {
    if (within.dim() == 0)
        return within;
    return {within.basis * null_space(map * within.basis)};
}

DualPairReport check_weak_dual_pair(const PhasePoint& z, const Catalog& cat,
                                    const std::vector<AlgebraElementS>& ws,
                                    double tol) {
    require_volume(z);
    DualPairReport rep;
    rep.label = "weak";

    std::vector<VecX> gl, gr;
    for (const auto& v : cat.fields)
        gl.push_back(stack_tangent(generator_left(z, v)));
    for (const auto& w : ws)
        gr.push_back(stack_tangent(generator_right(z, w)));

    // (a) the two families pair to zero under the symplectic form.
    double cross = 0.0;
    for (const auto& a : gl)
        for (const auto& b : gr) {
            const double na = a.norm(), nb = b.norm();
            if (na == 0.0 || nb == 0.0)
                continue;
            const double om =
                symplectic_pairing(z, a, b)(0, 0); // 1x1 block
            cross = std::max(cross, std::abs(om) / (na * nb));
        }

    // (b) each family sits in the other momentum's kernel.
    const MatX JL = left_tangent_map(z, cat);
    const MatX JR = right_tangent_map(z);
    const double nJL = spectral_norm(JL), nJR = spectral_norm(JR);
    double right_in_left = 0.0, left_in_right = 0.0;
    for (const auto& b : gr)
        if (b.norm() > 0 && nJL > 0)
            right_in_left = std::max(right_in_left, (JL * b).norm() / (nJL * b.norm()));
    for (const auto& a : gl)
        if (a.norm() > 0 && nJR > 0)
            left_in_right = std::max(left_in_right, (JR * a).norm() / (nJR * a.norm()));

    // (c) derivative of the pairings along random constrained tangents
    // matches the symplectic pairing with the generator.
    const double eps = 1e-6;
    double fd_left = 0.0, fd_right = 0.0;
    const Mesh& m = *z.emb.mesh;
    for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
        const PhaseTangent t = random_tangent(z, seed);
        const MatX xp = z.emb.positions + eps * t.dphi;
        const MatX xm = z.emb.positions - eps * t.dphi;
        const MatX ap = z.alpha + eps * t.dalpha;
        const MatX am = z.alpha - eps * t.dalpha;
        for (size_t i = 0; i < cat.fields.size(); ++i) {
            const double fd = (left_pairing(m, xp, ap, cat.fields[i]) -
                               left_pairing(m, xm, am, cat.fields[i])) /
                              (2 * eps);
            const double an = symplectic(z, unstack_tangent(gl[i]), t);
            const double scale = std::max({std::abs(an), std::abs(fd), 1e-12});
            fd_left = std::max(fd_left, std::abs(fd - an) / scale);
        }
        for (size_t j = 0; j < ws.size(); ++j) {
            const double fd = (right_pairing(m, xp, ap, ws[j]) -
                               right_pairing(m, xm, am, ws[j])) /
                              (2 * eps);
            const double an = symplectic(z, unstack_tangent(gr[j]), t);
            const double scale = std::max({std::abs(an), std::abs(fd), 1e-12});
            fd_right = std::max(fd_right, std::abs(fd - an) / scale);
        }
    }

    const Subspace arena = reduced_arena(z);
    const Subspace spanL = span_generators(z, cat);
    const Subspace spanR = span_generators(z, ws);
    const Subspace kerL = restricted_kernel(JL, arena);
    const Subspace kerR = restricted_kernel(JR, arena);
    rep.dim_tangent = tangent_space(z).dim();
    rep.dim_radical = symplectic_radical(z).dim();
    rep.dim_arena = arena.dim();
    rep.dim_left_span = spanL.dim();
    rep.dim_right_span = spanR.dim();
    rep.dim_ker_left = kerL.dim();
    rep.dim_ker_right = kerR.dim();
    rep.dim_left_orth = symplectic_orthogonal(z, spanL, arena).dim();
    rep.dim_right_orth = symplectic_orthogonal(z, spanR, arena).dim();
    rep.defect_dim = rep.dim_ker_left - rep.dim_right_span;

    rep.checks.push_back({"cross_orthogonality", cross, tol, cross <= tol});
    rep.checks.push_back({"right_in_ker_left", right_in_left, tol, right_in_left <= tol});
    rep.checks.push_back({"left_in_ker_right", left_in_right, tol, left_in_right <= tol});
    rep.checks.push_back({"momentum_fd_left", fd_left, 1e-6, fd_left <= 1e-6});
    rep.checks.push_back({"momentum_fd_right", fd_right, 1e-6, fd_right <= 1e-6});
    rep.pass = true;
    for (const auto& c : rep.checks)
        rep.pass = rep.pass && c.pass;
    return rep;
}

DualPairReport check_strong_dual_pair(const PhasePoint& z, const Catalog& cat,
                                      const std::vector<AlgebraElementS>& ws,
                                      double tol) {
    require_volume(z);
    require_regime(z);
    DualPairReport rep;
    rep.label = "strong";
    const MatX JL = left_tangent_map(z, cat);
    const MatX JR = right_tangent_map(z);
    const Subspace arena = reduced_arena(z);
    const Subspace spanL = span_generators(z, cat);
    const Subspace spanR = span_generators(z, ws);
    const Subspace kerL = restricted_kernel(JL, arena);
    const Subspace kerR = restricted_kernel(JR, arena);
    const Subspace orthR = symplectic_orthogonal(z, spanR, arena);

    rep.dim_tangent = tangent_space(z).dim();
    rep.dim_radical = symplectic_radical(z).dim();
    rep.dim_arena = arena.dim();
    rep.dim_left_span = spanL.dim();
    rep.dim_right_span = spanR.dim();
    rep.dim_ker_left = kerL.dim();
    rep.dim_ker_right = kerR.dim();
    rep.dim_left_orth = symplectic_orthogonal(z, spanL, arena).dim();
    rep.dim_right_orth = orthR.dim();
    rep.defect_dim = rep.dim_ker_left - rep.dim_right_span;

    // The two-sided identity: the right span's symplectic orthogonal should
    // be the right momentum kernel. Principal angle as the metric.
    const double angle = max_principal_angle(orthR.basis, kerR.basis);
    rep.checks.push_back(
        {"right_orthogonal_equals_ker_right", angle, tol, angle <= tol});
    // Containment lives in the full tangent space: right generators carry
    // radical content, so testing them against the arena-restricted kernel
    // would punish exactly the directions the quotient is meant to ignore.
    const Subspace kerL_full = restricted_kernel(JL, tangent_space(z));
    const double cont = containment_residual(spanR.basis, kerL_full.basis);
    rep.checks.push_back({"right_span_in_ker_left", cont, 1e-7, cont <= 1e-7});
    rep.pass = true;
    for (const auto& c : rep.checks)
        rep.pass = rep.pass && c.pass;
    return rep;
}

TransitivityDefect transitivity_defect(const PhasePoint& z, const Catalog& cat,
                                       const std::vector<AlgebraElementS>& ws) {
    require_volume(z);
    require_regime(z);
    const Subspace arena = reduced_arena(z);
    const Subspace kerL = restricted_kernel(left_tangent_map(z, cat), arena);
    const Subspace spanR = span_generators(z, ws);
    TransitivityDefect out;
    out.defect_dim = kerL.dim() - spanR.dim();
    // project the right span into the arena before asking how much of the
    // kernel escapes it; zero residual would mean the action is transitive
    const MatX span_in_arena =
        orthonormal_span(arena.basis * (arena.basis.transpose() * spanR.basis));
    out.containment_residual = containment_residual(kerL.basis, span_in_arena);
    return out;
}

WitnessReport nontransitivity_witness(const PhasePoint& z, const VecX& h,
                                      const Catalog& cat, double tol) {
    require_volume(z);
    const Mesh& m = *z.emb.mesh;
    if (h.size() != m.vertices)
        throw SchemaError("witness function has wrong length");
    double hmin = std::numeric_limits<double>::infinity(), hmax = -hmin;
    for (int s = 0; s < m.vertices; ++s)
        if (m.boundary_vertex[s]) {
            hmin = std::min(hmin, h[s]);
            hmax = std::max(hmax, h[s]);
        }
    const double hscale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (hmax - hmin <= 1e-12 * hscale)
        throw RegimeError("witness function is constant on the boundary; its "
                          "lift is the zero class");

    const DiscreteForm dh = d0(m, {0, h});
    const MatX P = pullback_matrix(m, z.emb.positions);
    const VecX beta =
        Eigen::CompleteOrthogonalDecomposition<MatX>(P).solve(dh.values);
    WitnessReport rep;
    rep.solve_residual = (P * beta - dh.values).norm() / dh.values.norm();
    rep.witness = vertical_lift(z, unflatten(beta));

    const VecX wvec = stack_tangent(rep.witness);
    rep.right_map_residual = (right_tangent_map(z) * wvec).norm();

    const VecX m2 = interleaved_mass(m);
    const VecX msq = m2.cwiseSqrt();
    VecX scale(2 * m2.size());
    scale.head(m2.size()) = msq;
    scale.tail(m2.size()) = msq;
    rep.witness_norm = (scale.asDiagonal() * wvec).norm();
    rep.boundary_form_norm = boundary_pullback_norm(z, rep.witness.dalpha);

    // Measured constant of the small-field bound: over catalog fields, the
    // boundary pullback of the generator's covector leg per unit of the
    // field's largest vertex value.
    MatX G(4 * m.vertices, cat.fields.size());
    double C = 0.0;
    for (size_t i = 0; i < cat.fields.size(); ++i) {
        const PhaseTangent g = generator_left(z, cat.fields[i]);
        G.col(i) = stack_tangent(g);
        double mv = 0.0;
        for (int s = 0; s < m.vertices; ++s)
            mv = std::max(mv,
                          cat.fields[i].velocity(z.emb.positions.row(s)).norm());
        if (mv > 1e-14)
            C = std::max(C, boundary_pullback_norm(z, g.dalpha) / mv);
    }
    rep.small_field_constant = C;

    // Mass-weighted distance from the witness to the span of the left
    // generators, as a fraction of the witness norm.
    const MatX Q = orthonormal_span(scale.asDiagonal() * G);
    const VecX wsc = scale.asDiagonal() * wvec;
    if (rep.witness_norm > 0)
        rep.span_residual_fraction =
            (wsc - Q * (Q.transpose() * wsc)).norm() / rep.witness_norm;
    rep.pass = rep.right_map_residual <= tol;
    return rep;
}

} // namespace fbdp
