#include "fbdp/phase.hpp"

#include "fbdp/linalg.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fbdp {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

double ipow(double x, int n) {
    if (n < 0)
        return 0.0; // negative powers only arise as vanished derivative terms
    double r = 1.0;
    for (int k = 0; k < n; ++k)
        r *= x;
    return r;
}

VecX interleaved(const VecX& per_vertex) {
    VecX out(2 * per_vertex.size());
    for (Eigen::Index s = 0; s < per_vertex.size(); ++s)
        out[2 * s] = out[2 * s + 1] = per_vertex[s];
    return out;
}

// sin/cos factor with frequency pi*a, plus first and second derivatives.
struct TrigFactor {
    double f, fp, fpp;
};
TrigFactor trig_factor(int a, bool use_sin, double x) {
    const double k = kPi * a;
    if (use_sin)
        return {std::sin(k * x), k * std::cos(k * x), -k * k * std::sin(k * x)};
    return {std::cos(k * x), -k * std::sin(k * x), -k * k * std::cos(k * x)};
}

} // namespace

Vec2 AlgebraElementM::velocity(const Vec2& p) const {
    if (family == Family::poly) {
        // stream x^a y^b -> v = (-d/dy, d/dx)
        const double vx = (b > 0) ? -b * ipow(p.x(), a) * ipow(p.y(), b - 1) : 0.0;
        const double vy = (a > 0) ? a * ipow(p.x(), a - 1) * ipow(p.y(), b) : 0.0;
        return {vx, vy};
    }
    const TrigFactor f = trig_factor(a, sin_x, p.x());
    const TrigFactor g = trig_factor(b, sin_y, p.y());
    return {-f.f * g.fp, f.fp * g.f};
}

Mat2 AlgebraElementM::jacobian(const Vec2& p) const {
    Mat2 J;
    if (family == Family::poly) {
        const double mixed =
            (a > 0 && b > 0) ? a * b * ipow(p.x(), a - 1) * ipow(p.y(), b - 1) : 0.0;
        J(0, 0) = -mixed;
        J(0, 1) = (b > 1) ? -double(b) * (b - 1) * ipow(p.x(), a) * ipow(p.y(), b - 2) : 0.0;
        J(1, 0) = (a > 1) ? double(a) * (a - 1) * ipow(p.x(), a - 2) * ipow(p.y(), b) : 0.0;
        J(1, 1) = mixed;
        return J;
    }
    const TrigFactor f = trig_factor(a, sin_x, p.x());
    const TrigFactor g = trig_factor(b, sin_y, p.y());
    J(0, 0) = -f.fp * g.fp;
    J(0, 1) = -f.f * g.fpp;
    J(1, 0) = f.fpp * g.f;
    J(1, 1) = f.fp * g.fp;
    return J;
}

std::string AlgebraElementM::name() const {
    std::ostringstream s;
    if (family == Family::poly) {
        s << "poly:x^" << a << "y^" << b;
    } else {
        s << "trig:" << (sin_x ? "sin" : "cos") << a << "x*" << (sin_y ? "sin" : "cos") << b
          << "y";
    }
    return s.str();
}

Catalog make_catalog(AlgebraElementM::Family family, int degree) {
    if (degree < 0)
        throw SchemaError("catalog degree must be >= 0");
    Catalog cat;
    cat.family = family;
    cat.degree = degree;
    if (family == AlgebraElementM::Family::poly) {
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b)
                cat.fields.push_back({family, a, b, false, false});
    } else {
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b) {
                if (a == 0 && b == 0)
                    continue;
                // A zero frequency only carries the cos (constant) factor.
                for (int s1 = 0; s1 <= (a == 0 ? 0 : 1); ++s1)
                    for (int s2 = 0; s2 <= (b == 0 ? 0 : 1); ++s2)
                        cat.fields.push_back({family, a, b, s1 == 1, s2 == 1});
            }
    }
    return cat;
}

MatX area_jacobian(const Mesh& mesh, const MatX& x) {
    MatX A = MatX::Zero(mesh.triangle_count(), 2 * mesh.vertices);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int s = tri[k], o1 = tri[(k + 1) % 3], o2 = tri[(k + 2) % 3];
            // d(area)/d(x_s) = half the opposite edge rotated +90.
            const Vec2 g = 0.5 * perp(Vec2(x.row(o2) - x.row(o1)));
            A(t, 2 * s) += g.x();
            A(t, 2 * s + 1) += g.y();
        }
    }
    return A;
}

MatX pullback_matrix(const Mesh& mesh, const MatX& x) {
    MatX P = MatX::Zero(mesh.edge_count(), 2 * mesh.vertices);
    for (int e = 0; e < mesh.edge_count(); ++e) {
        const int i = mesh.edges[e][0], j = mesh.edges[e][1];
        const Vec2 d = 0.5 * (x.row(j) - x.row(i));
        P(e, 2 * i) += d.x();
        P(e, 2 * i + 1) += d.y();
        P(e, 2 * j) += d.x();
        P(e, 2 * j + 1) += d.y();
    }
    return P;
}

DiscreteForm pullback(const VolEmbedding& emb, const MatX& alpha) {
    const Mesh& m = *emb.mesh;
    if (alpha.rows() != m.vertices || alpha.cols() != 2)
        throw SchemaError("covector field has wrong shape");
    DiscreteForm out{1, VecX(m.edge_count())};
    for (int e = 0; e < m.edge_count(); ++e) {
        const int i = m.edges[e][0], j = m.edges[e][1];
        const Vec2 mid = 0.5 * (alpha.row(i) + alpha.row(j));
        out.values[e] = mid.dot(emb.positions.row(j) - emb.positions.row(i));
    }
    return out;
}

MatX tangent_project(const VolEmbedding& emb, const MatX& raw_dphi) {
    const MatX A = area_jacobian(*emb.mesh, emb.positions);
    const VecX raw = flatten(raw_dphi);
    const MatX G = A * A.transpose();
    const VecX lambda = Eigen::CompleteOrthogonalDecomposition<MatX>(G).solve(A * raw);
    return unflatten(raw - A.transpose() * lambda);
}

double volume_defect(const Mesh& mesh, const MatX& positions) {
    const double mean = mesh.ref_areas.mean();
    double worst = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t)
        worst = std::max(worst,
                         std::abs(triangle_area(mesh, positions, t) - mesh.ref_areas[t]));
    return worst / mean;
}

MatX project_areas(const Mesh& mesh, MatX positions, double tol, int max_iter) {
    const double mean = mesh.ref_areas.mean();
    for (int it = 0; it < max_iter; ++it) {
        VecX g(mesh.triangle_count());
        for (int t = 0; t < mesh.triangle_count(); ++t)
            g[t] = triangle_area(mesh, positions, t) - mesh.ref_areas[t];
        if (g.cwiseAbs().maxCoeff() <= tol * mean)
            return positions;
        const MatX A = area_jacobian(mesh, positions);
        MatX G = A * A.transpose();
        G.diagonal().array() += 1e-14 * G.trace() / G.rows();
        const VecX lambda = Eigen::LDLT<MatX>(G).solve(g);
        positions -= unflatten(A.transpose() * lambda);
    }
    throw SolverError("area projection did not converge");
}

double tangent_defect(const VolEmbedding& emb, const PhaseTangent& t) {
    const MatX A = area_jacobian(*emb.mesh, emb.positions);
    const VecX r = A * flatten(t.dphi);
    const double scale =
        emb.mesh->ref_areas.mean() * std::max(t.dphi.cwiseAbs().maxCoeff(), 1e-30);
    return r.cwiseAbs().maxCoeff() / scale;
}

void require_tangent(const PhasePoint& z, const PhaseTangent& t, double tol) {
    if (t.dphi.cwiseAbs().maxCoeff() == 0.0)
        return;
    const double d = tangent_defect(z.emb, t);
    if (d > tol) {
        std::ostringstream msg;
        msg << "tangent violates the linearized volume constraint: defect " << d;
        throw ConstraintError(msg.str());
    }
}

MatX canonical_alpha(const VolEmbedding& emb, const MatX& raw_alpha) {
    const Mesh& m = *emb.mesh;
    if (raw_alpha.rows() != m.vertices || raw_alpha.cols() != 2)
        throw SchemaError("covector field has wrong shape");
    const MatX P = pullback_matrix(m, emb.positions);
    const VecX we = edge_masses(m);
    const VecX ws = we.cwiseSqrt();
    const MatX Pw = ws.asDiagonal() * P;

    const MatX B0 = quotient_kernel_basis(m, QuotientMode::h_vanishing_on_boundary);
    MatX Q0(m.edge_count(), B0.cols());
    if (B0.cols() > 0) {
        Eigen::HouseholderQR<MatX> qr(ws.asDiagonal() * B0);
        Q0 = qr.householderQ() * MatX::Identity(m.edge_count(), B0.cols());
    }

    // Class-trivial covectors: pullback lies along d0 of boundary-vanishing
    // functions. Null space of the pullback rows with that image removed.
    const MatX R = Pw - Q0 * (Q0.transpose() * Pw);
    const MatX N = null_space(R);
    if (N.cols() == 0)
        return raw_alpha;

    const VecX af = flatten(raw_alpha);
    // Stage one: cancel as much of the boundary-vanishing-exact component of
    // the pullback as the class allows.
    const MatX D = Q0.transpose() * (Pw * N);
    const VecX y = Q0.transpose() * (Pw * af);
    VecX c0 = VecX::Zero(N.cols());
    MatX KD = MatX::Identity(N.cols(), N.cols());
    if (D.rows() > 0) {
        c0 = Eigen::CompleteOrthogonalDecomposition<MatX>(D).solve(y);
        KD = null_space(D);
    }
    // Stage two: among the minimizers, fix the leftover gauge (kernel of the
    // pullback) by minimal mass norm of the adjusted covector. This makes
    // the representative unique on each class, hence the map idempotent.
    VecX c = c0;
    if (KD.cols() > 0) {
        const VecX msq = interleaved(m.vertex_mass).cwiseSqrt();
        const MatX Nk = msq.asDiagonal() * (N * KD);
        const VecX r = msq.asDiagonal() * (af - N * c0);
        c += KD * Eigen::CompleteOrthogonalDecomposition<MatX>(Nk).solve(r);
    }
    return unflatten(af - N * c);
}

PhasePoint new_phase_point(const VolEmbedding& emb, const MatX& raw_alpha, double vol_tol) {
    const double defect = volume_defect(*emb.mesh, emb.positions);
    if (defect > vol_tol) {
        std::ostringstream msg;
        msg << "embedding violates the volume constraint: relative defect " << defect;
        throw ConstraintError(msg.str());
    }
    PhasePoint z;
    z.emb = emb;
    z.alpha = canonical_alpha(emb, raw_alpha);
    z.min_alpha = z.alpha.rowwise().norm().minCoeff();
    z.nonzero_regime = z.min_alpha > 0.0;
    return z;
}

double symplectic(const PhasePoint& z, const PhaseTangent& t1, const PhaseTangent& t2) {
    const VecX& mass = z.emb.mesh->vertex_mass;
    double acc = 0.0;
    for (int s = 0; s < z.emb.mesh->vertices; ++s)
        acc += mass[s] * (t2.dalpha.row(s).dot(t1.dphi.row(s)) -
                          t1.dalpha.row(s).dot(t2.dphi.row(s)));
    return acc;
}

PhaseTangent generator_left(const PhasePoint& z, const AlgebraElementM& v) {
    const int V = z.emb.mesh->vertices;
    PhaseTangent t{MatX(V, 2), MatX(V, 2)};
    for (int s = 0; s < V; ++s) {
        const Vec2 p = z.emb.positions.row(s);
        t.dphi.row(s) = v.velocity(p);
        t.dalpha.row(s) = -(v.jacobian(p).transpose() * z.alpha.row(s).transpose());
    }
    return t;
}

std::vector<Mat2> averaged_deformation(const VolEmbedding& emb, const MatX& y) {
    const Mesh& m = *emb.mesh;
    const MatX& X = require_layout(m);
    std::vector<Mat2> G(m.vertices, Mat2::Zero());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[t];
        Mat2 E, Y;
        E.col(0) = (X.row(tri[1]) - X.row(tri[0])).transpose();
        E.col(1) = (X.row(tri[2]) - X.row(tri[0])).transpose();
        Y.col(0) = (y.row(tri[1]) - y.row(tri[0])).transpose();
        Y.col(1) = (y.row(tri[2]) - y.row(tri[0])).transpose();
        const Mat2 F = Y * E.inverse();
        for (int corner : tri)
            G[corner] += (m.ref_areas[t] / 3.0) * F;
    }
    for (int s = 0; s < m.vertices; ++s)
        G[s] /= m.vertex_mass[s];
    return G;
}

MatX reference_derivative_matrix(const Mesh& m, const AlgebraElementS& w) {
    const MatX& X = require_layout(m);
    if (w.w.size() != 2 * m.vertices)
        throw SchemaError("reference field has wrong length");
    // Gbar_s(y) w_s = sum_t (a_t / 3 m_s) [c1 (y_b - y_a) + c2 (y_c - y_a)]
    // with (c1, c2) = E_t^{-1} w_s: linear in y with scalar edge weights.
    MatX B = MatX::Zero(2 * m.vertices, 2 * m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[t];
        Mat2 E;
        E.col(0) = (X.row(tri[1]) - X.row(tri[0])).transpose();
        E.col(1) = (X.row(tri[2]) - X.row(tri[0])).transpose();
        const Mat2 Einv = E.inverse();
        for (int s : tri) {
            const Vec2 ws(w.w[2 * s], w.w[2 * s + 1]);
            const Vec2 c = Einv * ws;
            const double coeff = m.ref_areas[t] / (3.0 * m.vertex_mass[s]);
            for (int axis = 0; axis < 2; ++axis) {
                B(2 * s + axis, 2 * tri[1] + axis) += coeff * c[0];
                B(2 * s + axis, 2 * tri[2] + axis) += coeff * c[1];
                B(2 * s + axis, 2 * tri[0] + axis) -= coeff * (c[0] + c[1]);
            }
        }
    }
    return B;
}

PhaseTangent generator_right(const PhasePoint& z, const AlgebraElementS& w) {
    const Mesh& m = *z.emb.mesh;
    const MatX B = reference_derivative_matrix(m, w);
    const VecX m2 = interleaved(m.vertex_mass);
    const VecX dphi = B * flatten(z.emb.positions);
    // Mass adjoint: the covector leg that makes (dphi, dalpha) the exact
    // Hamiltonian field of the right pairing <alpha, B x>_m.
    const VecX dalpha =
        -(B.transpose() * (m2.asDiagonal() * flatten(z.alpha))).cwiseQuotient(m2);
    return {unflatten(dphi), unflatten(dalpha)};
}

PhaseTangent vertical_lift(const PhasePoint& z, const MatX& beta) {
    PhaseTangent t;
    t.dphi = MatX::Zero(z.emb.mesh->vertices, 2);
    t.dalpha = canonical_alpha(z.emb, beta);
    return t;
}

PhasePoint flow_right(const PhasePoint& z, const AlgebraElementS& w, double t,
                      int n_steps) {
    if (t == 0.0 || n_steps == 0)
        return z;
    if (n_steps < 0)
        throw SchemaError("flow_right: negative step count");
    const Mesh& m = *z.emb.mesh;
    // The reference derivative matrix depends on the layout and w only, so
    // the generator field is linear in (x, alpha) and B is fixed.
    const MatX B = reference_derivative_matrix(m, w);
    const VecX m2 = interleaved(m.vertex_mass);
    const MatX Badj = (m2.cwiseInverse()).asDiagonal() * B.transpose() * m2.asDiagonal();
    VecX x = flatten(z.emb.positions);
    VecX a = flatten(z.alpha);
    const double dt = t / n_steps;
    for (int k = 0; k < n_steps; ++k) {
        const VecX kx1 = B * x, ka1 = -(Badj * a);
        const VecX kx2 = B * (x + 0.5 * dt * kx1), ka2 = -(Badj * (a + 0.5 * dt * ka1));
        const VecX kx3 = B * (x + 0.5 * dt * kx2), ka3 = -(Badj * (a + 0.5 * dt * ka2));
        const VecX kx4 = B * (x + dt * kx3), ka4 = -(Badj * (a + dt * ka3));
        x += (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
        a += (dt / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        try {
            x = flatten(project_areas(m, unflatten(x)));
        } catch (const SolverError&) {
            std::ostringstream msg;
            msg << "flow_right: constraint drift beyond bound at step " << k;
            throw ConstraintError(msg.str());
        }
    }
    return new_phase_point({z.emb.mesh, unflatten(x)}, unflatten(a));
}

MatX admissible_basis(const Mesh& mesh) {
    const MatX& X = require_layout(mesh);
    const MatX P = pullback_matrix(mesh, X);
    const int V = mesh.vertices;
    MatX Rot = MatX::Zero(2 * V, 2 * V); // w -> w rotated +90
    for (int s = 0; s < V; ++s) {
        Rot(2 * s, 2 * s + 1) = -1.0;
        Rot(2 * s + 1, 2 * s) = 1.0;
    }
    const MatX PR = P * Rot;
    const MatX D1 = d1_matrix(mesh);
    MatX C(mesh.triangle_count() + mesh.boundary_edges.size(), 2 * V);
    C.topRows(mesh.triangle_count()) = D1 * PR;
    for (size_t k = 0; k < mesh.boundary_edges.size(); ++k)
        C.row(mesh.triangle_count() + k) = PR.row(mesh.boundary_edges[k]);
    return null_space(C);
}

double admissibility_defect(const Mesh& mesh, const VecX& w) {
    const MatX& X = require_layout(mesh);
    if (w.size() != 2 * mesh.vertices)
        throw SchemaError("reference field has wrong length");
    VecX wp(w.size());
    for (int s = 0; s < mesh.vertices; ++s) {
        wp[2 * s] = -w[2 * s + 1];
        wp[2 * s + 1] = w[2 * s];
    }
    const VecX fl = pullback_matrix(mesh, X) * wp;
    const DiscreteForm closed = d1(mesh, {1, fl});
    double worst = closed.values.cwiseAbs().maxCoeff();
    for (int e : mesh.boundary_edges)
        worst = std::max(worst, std::abs(fl[e]));
    return worst;
}

std::vector<AlgebraElementS> w_basis(const Mesh& mesh, int count) {
    if (count < 0)
        throw SchemaError("w_basis: negative count");
    const MatX B = admissible_basis(mesh);
    const int dim = static_cast<int>(B.cols());
    if (dim == 0 && count > 0)
        throw SolverError("the admissible reference algebra is trivial");
    std::vector<AlgebraElementS> out;
    for (int k = 0; k < std::min(count, dim); ++k)
        out.push_back({B.col(k)});
    // Past the dimension, append cyclic sums: a generating list of the
    // requested length whose rank stays min(count, dim).
    for (int k = 0; static_cast<int>(out.size()) < count; ++k)
        out.push_back({B.col(k % dim) + B.col((k + 1) % dim)});
    return out;
}

double min_edge_length(const Mesh& mesh, const MatX& positions) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : mesh.edges)
        best = std::min(best, (positions.row(e[1]) - positions.row(e[0])).norm());
    return best;
}

namespace {

MatX smooth_field(const MatX& pts, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double c[8];
    for (double& v : c)
        v = U(gen);
    MatX out(pts.rows(), 2);
    for (Eigen::Index s = 0; s < pts.rows(); ++s) {
        const double x = pts(s, 0), y = pts(s, 1);
        out(s, 0) = c[0] + c[1] * std::sin(x + 2 * y) + c[2] * std::cos(2 * x - y) +
                    c[3] * std::sin(3 * x) * std::cos(y);
        out(s, 1) = c[4] + c[5] * std::cos(x - y) + c[6] * std::sin(2 * x + y) +
                    c[7] * std::cos(3 * y) * std::sin(x);
    }
    return out;
}

// Smooth covector field with first component bounded below by 0.3 in
// magnitude, keeping every vertex in the nonzero regime by construction.
MatX smooth_alpha(const MatX& pts, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> Ph(0.0, 2.0 * kPi);
    const double p1 = Ph(gen), p2 = Ph(gen), p3 = Ph(gen), p4 = Ph(gen);
    MatX out(pts.rows(), 2);
    for (Eigen::Index s = 0; s < pts.rows(); ++s) {
        const double x = pts(s, 0), y = pts(s, 1);
        out(s, 0) = 1.1 + 0.5 * std::sin(x + 2 * y + p1) + 0.3 * std::cos(2 * x - y + p2);
        out(s, 1) = -0.9 + 0.4 * std::cos(x + y + p3) + 0.3 * std::sin(2 * y + p4);
    }
    return out;
}

} // namespace

PhasePoint random_phase_point(const MeshPtr& mesh, std::uint64_t seed) {
    const MatX& X = require_layout(*mesh);
    std::mt19937_64 gen(seed);
    const double cap = 0.05 * min_edge_length(*mesh, X);
    for (int attempt = 0; attempt < 10; ++attempt) {
        const VolEmbedding base{mesh, X};
        MatX d = tangent_project(base, smooth_field(X, gen));
        const double mag = d.rowwise().norm().maxCoeff();
        if (mag > 0)
            d *= cap / mag;
        try {
            const MatX x = project_areas(*mesh, X + d);
            const MatX alpha = smooth_alpha(x, gen);
            return new_phase_point({mesh, x}, alpha);
        } catch (const SolverError&) {
            continue; // next deterministic draw
        }
    }
    throw SolverError("random_phase_point: no valid sample after 10 attempts");
}

PhaseTangent random_tangent(const PhasePoint& z, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    PhaseTangent t;
    t.dphi = tangent_project(z.emb, smooth_field(z.emb.positions, gen));
    t.dalpha = smooth_field(z.emb.positions, gen);
    return t;
}

} // namespace fbdp
