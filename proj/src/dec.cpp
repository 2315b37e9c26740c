#include "fbdp/dec.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbdp {

namespace {

Vec2 rot90(const Vec2& v) { return {-v.y(), v.x()}; }

void check_degree(const DiscreteForm& f, int want) {
    if (f.degree != want) {
        std::ostringstream msg;
        msg << "form degree mismatch: have " << f.degree << ", need " << want;
        throw SchemaError(msg.str());
    }
}

MatX stiffness(const EmbeddedDomain& dom, const VecX& areas) {
    const Mesh& m = *dom.mesh;
    MatX K = MatX::Zero(m.vertices, m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto g = hat_gradients(m, dom.positions, t, areas[t]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                K(m.triangles[t][i], m.triangles[t][j]) += areas[t] * g[i].dot(g[j]);
    }
    return K;
}

// Boundary lumped line quadrature: half the length of the two loop edges
// meeting at each boundary vertex. Used for Neumann boundary integrals.
VecX boundary_edge_weights(const Mesh& m, const MatX& x) {
    const auto order = boundary_order(m);
    VecX w = VecX::Zero(order.size());
    int base = 0;
    for (const auto& loop : m.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        for (int k = 0; k < n; ++k) {
            const double len = (x.row(loop[(k + 1) % n]) - x.row(loop[k])).norm();
            w[base + k] += 0.5 * len;
            w[base + (k + 1) % n] += 0.5 * len;
        }
        base += n;
    }
    return w;
}

VecX solve_spd(const MatX& A, const VecX& b, const LinearSolverConfig& cfg,
               const char* what) {
    VecX x;
    if (cfg.method == LinearSolverConfig::Method::dense) {
        x = Eigen::LDLT<MatX>(A).solve(b);
    } else {
        Eigen::ConjugateGradient<MatX, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(cfg.tol);
        cg.setMaxIterations(cfg.max_iter);
        cg.compute(A);
        x = cg.solve(b);
    }
    const double scale = std::max(b.norm(), 1.0);
    if (!((A * x - b).norm() <= std::max(cfg.tol, 1e-9) * scale * 10.0))
        throw SolverError(std::string(what) + ": linear solve did not converge");
    return x;
}

} // namespace

VecX embedded_areas(const EmbeddedDomain& dom) {
    const Mesh& m = *dom.mesh;
    VecX areas(m.triangle_count());
    for (int t = 0; t < m.triangle_count(); ++t)
        areas[t] = triangle_area(m, dom.positions, t);
    const double scale = std::abs(areas.sum()) / m.triangle_count();
    for (int t = 0; t < m.triangle_count(); ++t)
        if (!(areas[t] > 1e-14 * scale))
            throw SolverError("degenerate or inverted triangle " + std::to_string(t));
    return areas;
}

std::array<Vec2, 3> hat_gradients(const Mesh& m, const MatX& x, int t, double area) {
    const auto& tri = m.triangles[t];
    std::array<Vec2, 3> g;
    for (int k = 0; k < 3; ++k) {
        const Vec2 opp = x.row(tri[(k + 2) % 3]) - x.row(tri[(k + 1) % 3]);
        g[k] = rot90(opp) / (2.0 * area);
    }
    return g;
}

LinearSolverConfig default_solver(int unknowns) {
    LinearSolverConfig cfg;
    cfg.method = unknowns < 2000 ? LinearSolverConfig::Method::dense
                                 : LinearSolverConfig::Method::cg;
    return cfg;
}

std::vector<int> boundary_order(const Mesh& mesh) {
    std::vector<int> order;
    for (const auto& loop : mesh.boundary_loops)
        order.insert(order.end(), loop.begin(), loop.end());
    return order;
}

BoundaryNormals boundary_normals(const Mesh& mesh, const MatX& positions) {
    BoundaryNormals bn;
    bn.order = boundary_order(mesh);
    bn.normal.resize(bn.order.size(), 2);
    bn.weight.resize(bn.order.size());
    int base = 0;
    for (const auto& loop : mesh.boundary_loops) {
        const int n = static_cast<int>(loop.size());
        for (int k = 0; k < n; ++k) {
            const Vec2 chord = positions.row(loop[(k + 1) % n]).transpose() -
                               positions.row(loop[(k - 1 + n) % n]).transpose();
            const double len = chord.norm();
            if (!(len > 0.0))
                throw SolverError("coincident boundary neighbours at vertex " +
                                  std::to_string(loop[k]));
            // Interior lies left of the loop, so -90 degrees points outward.
            bn.normal.row(base + k) = Vec2(chord.y(), -chord.x()) / len;
            bn.weight[base + k] = 0.5 * len;
        }
        base += n;
    }
    return bn;
}

DiscreteForm d0(const Mesh& mesh, const DiscreteForm& f) {
    check_degree(f, 0);
    if (f.values.size() != mesh.vertices)
        throw SchemaError("degree-0 form has wrong length");
    DiscreteForm out{1, VecX(mesh.edge_count())};
    for (int e = 0; e < mesh.edge_count(); ++e)
        out.values[e] = f.values[mesh.edges[e][1]] - f.values[mesh.edges[e][0]];
    return out;
}

DiscreteForm d1(const Mesh& mesh, const DiscreteForm& a) {
    check_degree(a, 1);
    if (a.values.size() != mesh.edge_count())
        throw SchemaError("degree-1 form has wrong length");
    DiscreteForm out{2, VecX::Zero(mesh.triangle_count())};
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (int k = 0; k < 3; ++k)
            out.values[t] += mesh.tri_edge_signs[t][k] * a.values[mesh.tri_edges[t][k]];
    return out;
}

MatX d0_matrix(const Mesh& mesh) {
    MatX D = MatX::Zero(mesh.edge_count(), mesh.vertices);
    for (int e = 0; e < mesh.edge_count(); ++e) {
        D(e, mesh.edges[e][0]) = -1.0;
        D(e, mesh.edges[e][1]) = 1.0;
    }
    return D;
}

MatX d1_matrix(const Mesh& mesh) {
    MatX D = MatX::Zero(mesh.triangle_count(), mesh.edge_count());
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (int k = 0; k < 3; ++k)
            D(t, mesh.tri_edges[t][k]) += mesh.tri_edge_signs[t][k];
    return D;
}

VecX edge_masses(const Mesh& mesh) {
    VecX w = VecX::Zero(mesh.edge_count());
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (int k = 0; k < 3; ++k)
            w[mesh.tri_edges[t][k]] += mesh.ref_areas[t] / 3.0;
    return w;
}

VecX embedded_vertex_mass(const EmbeddedDomain& dom) {
    const VecX areas = embedded_areas(dom);
    VecX m = VecX::Zero(dom.mesh->vertices);
    for (int t = 0; t < dom.mesh->triangle_count(); ++t)
        for (int corner : dom.mesh->triangles[t])
            m[corner] += areas[t] / 3.0;
    return m;
}

MatX averaged_gradient(const EmbeddedDomain& dom, const VecX& nodal) {
    const Mesh& m = *dom.mesh;
    if (nodal.size() != m.vertices)
        throw SchemaError("nodal field has wrong length");
    const VecX areas = embedded_areas(dom);
    MatX out = MatX::Zero(m.vertices, 2);
    VecX mass = VecX::Zero(m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto g = hat_gradients(m, dom.positions, t, areas[t]);
        Vec2 grad = Vec2::Zero();
        for (int k = 0; k < 3; ++k)
            grad += nodal[m.triangles[t][k]] * g[k];
        for (int corner : m.triangles[t]) {
            out.row(corner) += (areas[t] / 3.0) * grad.transpose();
            mass[corner] += areas[t] / 3.0;
        }
    }
    for (int s = 0; s < m.vertices; ++s)
        out.row(s) /= mass[s];
    return out;
}

MatX divergence_rows_interior(const EmbeddedDomain& dom) {
    const Mesh& m = *dom.mesh;
    const VecX areas = embedded_areas(dom);
    std::vector<int> interior;
    for (int s = 0; s < m.vertices; ++s)
        if (!m.boundary_vertex[s])
            interior.push_back(s);
    MatX C = MatX::Zero(interior.size(), 2 * m.vertices);
    // Row r: exact integral of y . grad(hat_s); the integrand is linear per
    // triangle so centroid quadrature (mean of corner values) is exact.
    for (size_t r = 0; r < interior.size(); ++r) {
        const int s = interior[r];
        for (int t = 0; t < m.triangle_count(); ++t) {
            const auto& tri = m.triangles[t];
            const int k = (tri[0] == s) ? 0 : (tri[1] == s) ? 1 : (tri[2] == s) ? 2 : -1;
            if (k < 0)
                continue;
            const auto g = hat_gradients(m, dom.positions, t, areas[t]);
            for (int corner : tri) {
                C(r, 2 * corner) += (areas[t] / 3.0) * g[k].x();
                C(r, 2 * corner + 1) += (areas[t] / 3.0) * g[k].y();
            }
        }
    }
    return C;
}

VecX poisson_dirichlet(const EmbeddedDomain& dom, const VecX& rhs, const VecX& bc,
                       const LinearSolverConfig& cfg) {
    const Mesh& m = *dom.mesh;
    if (rhs.size() != m.vertices)
        throw SchemaError("rhs has wrong length");
    const auto order = boundary_order(m);
    if (bc.size() != static_cast<Eigen::Index>(order.size()))
        throw SchemaError("bc does not cover the boundary vertices");
    const VecX areas = embedded_areas(dom);
    const MatX K = stiffness(dom, areas);
    const VecX mass = embedded_vertex_mass(dom);

    VecX u = VecX::Zero(m.vertices);
    for (size_t k = 0; k < order.size(); ++k)
        u[order[k]] = bc[k];

    std::vector<int> interior;
    for (int s = 0; s < m.vertices; ++s)
        if (!m.boundary_vertex[s])
            interior.push_back(s);
    if (interior.empty())
        return u; // boundary-only mesh: the trace is the whole solution

    const int ni = static_cast<int>(interior.size());
    MatX Kii(ni, ni);
    VecX b(ni);
    for (int i = 0; i < ni; ++i) {
        b[i] = -mass[interior[i]] * rhs[interior[i]];
        for (int j = 0; j < ni; ++j)
            Kii(i, j) = K(interior[i], interior[j]);
        for (int s = 0; s < m.vertices; ++s)
            if (m.boundary_vertex[s])
                b[i] -= K(interior[i], s) * u[s];
    }
    const VecX ui = solve_spd(Kii, b, cfg, "poisson_dirichlet");
    for (int i = 0; i < ni; ++i)
        u[interior[i]] = ui[i];
    return u;
}

VecX poisson_neumann(const EmbeddedDomain& dom, const VecX& rhs, const VecX& flux,
                     const LinearSolverConfig& cfg) {
    const Mesh& m = *dom.mesh;
    if (rhs.size() != m.vertices)
        throw SchemaError("rhs has wrong length");
    const auto order = boundary_order(m);
    if (flux.size() != static_cast<Eigen::Index>(order.size()))
        throw SchemaError("flux does not cover the boundary vertices");
    const VecX areas = embedded_areas(dom);
    const MatX K = stiffness(dom, areas);
    const VecX mass = embedded_vertex_mass(dom);
    const VecX bw = boundary_edge_weights(m, dom.positions);

    VecX b = -(mass.array() * rhs.array()).matrix();
    for (size_t k = 0; k < order.size(); ++k)
        b[order[k]] += bw[k] * flux[k];

    // Divergence-theorem compatibility: the load must sum to zero.
    const double scale = mass.cwiseAbs().dot(rhs.cwiseAbs()) +
                         bw.cwiseAbs().dot(flux.cwiseAbs()) + 1e-30;
    if (std::abs(b.sum()) > 1e-8 * std::max(scale, 1.0))
        throw SolverError("poisson_neumann: incompatible rhs/flux data");

    VecX u;
    if (cfg.method == LinearSolverConfig::Method::dense) {
        // Bordered system pins the (constant) null component.
        const int V = m.vertices;
        MatX A = MatX::Zero(V + 1, V + 1);
        A.topLeftCorner(V, V) = K;
        A.col(V).head(V).setOnes();
        A.row(V).head(V).setOnes();
        VecX bb = VecX::Zero(V + 1);
        bb.head(V) = b;
        const VecX xx = Eigen::PartialPivLU<MatX>(A).solve(bb);
        u = xx.head(V);
        if (!((K * u - b).norm() <= std::max(cfg.tol, 1e-9) * std::max(b.norm(), 1.0) * 10.0))
            throw SolverError("poisson_neumann: bordered solve did not converge");
    } else {
        // CG on the singular operator: keep everything orthogonal to the
        // constant null vector.
        VecX b0 = b.array() - b.mean();
        Eigen::ConjugateGradient<MatX, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(cfg.tol);
        cg.setMaxIterations(cfg.max_iter);
        cg.compute(K);
        u = cg.solve(b0);
        u.array() -= u.mean();
        if (!((K * u - b0).norm() <= std::max(cfg.tol, 1e-9) * std::max(b0.norm(), 1.0) * 10.0))
            throw SolverError("poisson_neumann: cg did not converge");
    }
    u.array() -= mass.dot(u) / mass.sum();
    return u;
}

std::pair<MatX, MatX> helmholtz_project(const EmbeddedDomain& dom, const MatX& u,
                                        const LinearSolverConfig& cfg) {
    (void)cfg; // rank decisions come from the orthogonal decomposition below
    const Mesh& m = *dom.mesh;
    if (u.rows() != m.vertices || u.cols() != 2)
        throw SchemaError("field has wrong shape");
    // Constraint rows: integral(y . grad hat_s) for EVERY hat, plus pointwise
    // normal components at boundary vertices. For a continuum divergence-free
    // tangent field both families vanish (boundary hats included, by the
    // divergence theorem), and together they cut the space down to stream
    // dimension ~ V - B + 1. Testing only interior hats would leave O(V_B)
    // spurious near-boundary divergence modes in u_par.
    const VecX areas = embedded_areas(dom);
    const BoundaryNormals bn = boundary_normals(m, dom.positions);
    const int nb = static_cast<int>(bn.order.size());
    MatX C = MatX::Zero(m.vertices + nb, 2 * m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto g = hat_gradients(m, dom.positions, t, areas[t]);
        for (int k = 0; k < 3; ++k) {
            const int s = m.triangles[t][k];
            for (int corner : m.triangles[t]) {
                C(s, 2 * corner) += (areas[t] / 3.0) * g[k].x();
                C(s, 2 * corner + 1) += (areas[t] / 3.0) * g[k].y();
            }
        }
    }
    for (int k = 0; k < nb; ++k) {
        C(m.vertices + k, 2 * bn.order[k]) = bn.normal(k, 0);
        C(m.vertices + k, 2 * bn.order[k] + 1) = bn.normal(k, 1);
    }
    const VecX mass = embedded_vertex_mass(dom);
    VecX minv(2 * m.vertices);
    for (int s = 0; s < m.vertices; ++s)
        minv[2 * s] = minv[2 * s + 1] = 1.0 / mass[s];

    const VecX uf = flatten(u);
    const MatX G = C * minv.asDiagonal() * C.transpose();
    // The rows of C are not independent in general (the interior divergence
    // rows and the normal rows are tied by the total-area identity), so a
    // rank-revealing solve is required.
    const VecX lambda = Eigen::CompleteOrthogonalDecomposition<MatX>(G).solve(C * uf);
    const VecX upar = uf - minv.asDiagonal() * (C.transpose() * lambda);
    return {unflatten(upar), unflatten(uf - upar)};
}

MatX neumann_gradient_part(const EmbeddedDomain& dom, const MatX& u,
                           const LinearSolverConfig& cfg) {
    const Mesh& m = *dom.mesh;
    const VecX areas = embedded_areas(dom);
    const VecX mass = embedded_vertex_mass(dom);
    // Weak problem for the potential: stiffness * chi = integral(u . grad hat_s).
    // The volume source and the natural boundary flux of the potential
    // telescope into this single load, which sums to zero exactly because the
    // hats partition unity — so no compatibility fixup is needed.
    VecX load = VecX::Zero(m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto g = hat_gradients(m, dom.positions, t, areas[t]);
        Vec2 ubar = Vec2::Zero();
        for (int corner : m.triangles[t])
            ubar += u.row(corner).transpose() / 3.0;
        for (int k = 0; k < 3; ++k)
            load[m.triangles[t][k]] += areas[t] * ubar.dot(g[k]);
    }
    const VecX f = -(load.array() / mass.array()).matrix();
    const VecX zero_flux = VecX::Zero(static_cast<Eigen::Index>(boundary_order(m).size()));
    const VecX chi = poisson_neumann(dom, f, zero_flux, cfg);
    return averaged_gradient(dom, chi);
}

MatX quotient_kernel_basis(const Mesh& mesh, QuotientMode mode) {
    std::vector<int> admissible;
    if (mode == QuotientMode::h_vanishing_on_boundary) {
        for (int s = 0; s < mesh.vertices; ++s)
            if (!mesh.boundary_vertex[s])
                admissible.push_back(s);
    } else {
        for (int s = 1; s < mesh.vertices; ++s) // all functions mod constants
            admissible.push_back(s);
    }
    MatX B = MatX::Zero(mesh.edge_count(), admissible.size());
    for (size_t c = 0; c < admissible.size(); ++c) {
        const int s = admissible[c];
        for (int e = 0; e < mesh.edge_count(); ++e) {
            if (mesh.edges[e][1] == s)
                B(e, c) += 1.0;
            if (mesh.edges[e][0] == s)
                B(e, c) -= 1.0;
        }
    }
    return B;
}

DiscreteForm quotient_project(const Mesh& mesh, const DiscreteForm& a, QuotientMode mode) {
    check_degree(a, 1);
    if (a.values.size() != mesh.edge_count())
        throw SchemaError("degree-1 form has wrong length");
    const MatX B = quotient_kernel_basis(mesh, mode);
    if (B.cols() == 0)
        return a;
    const VecX w = edge_masses(mesh);
    const VecX ws = w.cwiseSqrt();
    const MatX Bw = ws.asDiagonal() * B;
    Eigen::HouseholderQR<MatX> qr(Bw);
    const MatX Q = qr.householderQ() * MatX::Identity(mesh.edge_count(), B.cols());
    const VecX aw = ws.asDiagonal() * a.values;
    DiscreteForm out{1, a.values - ws.cwiseInverse().asDiagonal() * (Q * (Q.transpose() * aw))};
    return out;
}

MatX quotient_matrix(const Mesh& mesh, QuotientMode mode) {
    const int E = mesh.edge_count();
    const MatX B = quotient_kernel_basis(mesh, mode);
    if (B.cols() == 0)
        return MatX::Identity(E, E);
    const VecX ws = edge_masses(mesh).cwiseSqrt();
    Eigen::HouseholderQR<MatX> qr(ws.asDiagonal() * B);
    const MatX Q = qr.householderQ() * MatX::Identity(E, B.cols());
    MatX P = MatX::Identity(E, E);
    P.noalias() -= ws.cwiseInverse().asDiagonal() * Q * Q.transpose() * ws.asDiagonal();
    return P;
}

} // namespace fbdp
