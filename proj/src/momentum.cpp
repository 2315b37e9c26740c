#include "fbdp/momentum.hpp"

namespace fbdp {

VecX stack_tangent(const PhaseTangent& t) {
    VecX c(2 * t.dphi.size());
    c.head(t.dphi.size()) = flatten(t.dphi);
    c.tail(t.dalpha.size()) = flatten(t.dalpha);
    return c;
}

PhaseTangent unstack_tangent(const VecX& c) {
    const Eigen::Index half = c.size() / 2;
    return {unflatten(c.head(half)), unflatten(c.tail(half))};
}

double left_pairing(const Mesh& mesh, const MatX& positions, const MatX& alpha,
                    const AlgebraElementM& v) {
    double acc = 0.0;
    for (int s = 0; s < mesh.vertices; ++s)
        acc += mesh.vertex_mass[s] * alpha.row(s).dot(v.velocity(positions.row(s)));
    return acc;
}

double left_pairing(const PhasePoint& z, const AlgebraElementM& v) {
    return left_pairing(*z.emb.mesh, z.emb.positions, z.alpha, v);
}

LeftMomentum left_momentum(const PhasePoint& z, const Catalog& cat) {
    LeftMomentum out;
    out.family = cat.family;
    out.degree = cat.degree;
    out.pairings.resize(cat.fields.size());
    for (size_t i = 0; i < cat.fields.size(); ++i)
        out.pairings[i] = left_pairing(z, cat.fields[i]);
    return out;
}

double right_pairing(const Mesh& mesh, const MatX& positions, const MatX& alpha,
                     const AlgebraElementS& w) {
    // B_w depends on the layout only; evaluate its action at the given x.
    const MatX B = reference_derivative_matrix(mesh, w);
    const VecX dphi = B * flatten(positions);
    double acc = 0.0;
    for (int s = 0; s < mesh.vertices; ++s)
        acc += mesh.vertex_mass[s] *
               (alpha(s, 0) * dphi[2 * s] + alpha(s, 1) * dphi[2 * s + 1]);
    return acc;
}

double right_pairing(const PhasePoint& z, const AlgebraElementS& w) {
    return right_pairing(*z.emb.mesh, z.emb.positions, z.alpha, w);
}

RightMomentum right_momentum(const PhasePoint& z) {
    return {quotient_project(*z.emb.mesh, pullback(z.emb, z.alpha), QuotientMode::h_free)};
}

MatX left_tangent_map(const PhasePoint& z, const Catalog& cat) {
    const Mesh& m = *z.emb.mesh;
    const int V = m.vertices;
    MatX J = MatX::Zero(cat.fields.size(), 4 * V);
    for (size_t i = 0; i < cat.fields.size(); ++i) {
        const AlgebraElementM& v = cat.fields[i];
        for (int s = 0; s < V; ++s) {
            const Vec2 p = z.emb.positions.row(s);
            const Vec2 vel = v.velocity(p);
            // alpha_s . Dv dphi_s: gradient w.r.t. dphi_s is Dv^T alpha_s.
            const Vec2 g = v.jacobian(p).transpose() * z.alpha.row(s).transpose();
            J(i, 2 * s) += m.vertex_mass[s] * g.x();
            J(i, 2 * s + 1) += m.vertex_mass[s] * g.y();
            J(i, 2 * V + 2 * s) += m.vertex_mass[s] * vel.x();
            J(i, 2 * V + 2 * s + 1) += m.vertex_mass[s] * vel.y();
        }
    }
    return J;
}

MatX pullback_tangent_map(const PhasePoint& z) {
    const Mesh& m = *z.emb.mesh;
    const int V = m.vertices;
    MatX J = MatX::Zero(m.edge_count(), 4 * V);
    for (int e = 0; e < m.edge_count(); ++e) {
        const int i = m.edges[e][0], j = m.edges[e][1];
        const Vec2 d = 0.5 * (z.emb.positions.row(j) - z.emb.positions.row(i));
        const Vec2 mid = 0.5 * (z.alpha.row(i) + z.alpha.row(j));
        J(e, 2 * V + 2 * i) += d.x();
        J(e, 2 * V + 2 * i + 1) += d.y();
        J(e, 2 * V + 2 * j) += d.x();
        J(e, 2 * V + 2 * j + 1) += d.y();
        J(e, 2 * i) -= mid.x();
        J(e, 2 * i + 1) -= mid.y();
        J(e, 2 * j) += mid.x();
        J(e, 2 * j + 1) += mid.y();
    }
    return J;
}

MatX right_tangent_map(const PhasePoint& z) {
    return quotient_matrix(*z.emb.mesh, QuotientMode::h_free) * pullback_tangent_map(z);
}

double left_pairing_derivative(const PhasePoint& z, const AlgebraElementM& v,
                               const PhaseTangent& t) {
    const Mesh& m = *z.emb.mesh;
    double acc = 0.0;
    for (int s = 0; s < m.vertices; ++s) {
        const Vec2 p = z.emb.positions.row(s);
        acc += m.vertex_mass[s] *
               (t.dalpha.row(s).dot(v.velocity(p)) +
                z.alpha.row(s).dot(v.jacobian(p) * t.dphi.row(s).transpose()));
    }
    return acc;
}

DiscreteForm right_class_derivative(const PhasePoint& z, const PhaseTangent& t) {
    const Mesh& m = *z.emb.mesh;
    VecX raw(m.edge_count());
    for (int e = 0; e < m.edge_count(); ++e) {
        const int i = m.edges[e][0], j = m.edges[e][1];
        const Vec2 d = z.emb.positions.row(j) - z.emb.positions.row(i);
        const Vec2 dmid = 0.5 * (t.dalpha.row(i) + t.dalpha.row(j));
        const Vec2 amid = 0.5 * (z.alpha.row(i) + z.alpha.row(j));
        const Vec2 dd = t.dphi.row(j) - t.dphi.row(i);
        raw[e] = dmid.dot(d) + amid.dot(dd);
    }
    return quotient_project(m, {1, raw}, QuotientMode::h_free);
}

} // namespace fbdp
