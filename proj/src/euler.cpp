#include "fbdp/euler.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <limits>
#include <sstream>

namespace fbdp {

namespace {

// Per-triangle P1 Jacobian of a vertex vector field.
std::vector<Mat2> velocity_gradients(const EmbeddedDomain& dom, const MatX& v,
                                     const VecX& areas) {
    const Mesh& m = *dom.mesh;
    std::vector<Mat2> J(m.triangle_count());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto g = hat_gradients(m, dom.positions, t, areas[t]);
        Mat2 D = Mat2::Zero();
        for (int k = 0; k < 3; ++k)
            D += v.row(m.triangles[t][k]).transpose() * g[k].transpose();
        J[t] = D;
    }
    return J;
}

double polygon_perimeter(const Mesh& m, const MatX& x) {
    double acc = 0.0;
    for (const auto& loop : m.boundary_loops)
        for (size_t k = 0; k < loop.size(); ++k)
            acc += (x.row(loop[(k + 1) % loop.size()]) - x.row(loop[k])).norm();
    return acc;
}

// Uniform normal boundary displacement restoring the embedded area total to
// the reference total. The half-chord weights make the area derivative of
// the displacement exact, so a couple of Newton passes reach rounding.
MatX restore_volume(const Mesh& m, MatX x) {
    const double target = m.ref_areas.sum();
    for (int pass = 0; pass < 4; ++pass) {
        double total = 0.0;
        for (int t = 0; t < m.triangle_count(); ++t)
            total += triangle_area(m, x, t);
        const double deficit = target - total;
        if (std::abs(deficit) <= 1e-14 * target)
            break;
        const BoundaryNormals bn = boundary_normals(m, x);
        const double slope = bn.weight.sum();
        const double delta = deficit / slope;
        for (size_t k = 0; k < bn.order.size(); ++k)
            x.row(bn.order[k]) += delta * bn.normal.row(k);
    }
    return x;
}

} // namespace

MatX project_velocity(const EmbeddedDomain& dom, const MatX& v,
                      const LinearSolverConfig& cfg) {
    // Interior weak divergences plus the net-flux row: the constant function's
    // weak divergence is the shoelace derivative of total area, so the
    // projected velocity conserves volume exactly along the flow.
    const MatX Ci = divergence_rows_interior(dom);
    MatX C(Ci.rows() + 1, 2 * dom.mesh->vertices);
    C.topRows(Ci.rows()) = Ci;
    C.bottomRows(1) = area_jacobian(*dom.mesh, dom.positions).colwise().sum();
    const VecX mass = embedded_vertex_mass(dom);
    VecX minv(2 * dom.mesh->vertices);
    for (int s = 0; s < dom.mesh->vertices; ++s)
        minv[2 * s] = minv[2 * s + 1] = 1.0 / mass[s];
    const VecX rhs = C * flatten(v);
    const MatX G = C * minv.asDiagonal() * C.transpose();
    VecX q;
    if (cfg.method == LinearSolverConfig::Method::dense) {
        q = Eigen::LDLT<MatX>(G).solve(rhs);
    } else {
        Eigen::ConjugateGradient<MatX, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(cfg.tol);
        cg.setMaxIterations(cfg.max_iter);
        cg.compute(G);
        q = cg.solve(rhs);
    }
    if (!((G * q - rhs).norm() <= std::max(cfg.tol, 1e-9) * std::max(rhs.norm(), 1.0) * 10.0))
        throw SolverError("velocity projection did not converge");
    return v - unflatten(minv.asDiagonal() * (C.transpose() * q));
}

MatX project_velocity(const EmbeddedDomain& dom, const MatX& v) {
    return project_velocity(dom, v, default_solver(dom.mesh->vertices));
}

VecX curvature(const EmbeddedDomain& dom) {
    const Mesh& m = *dom.mesh;
    const MatX& x = dom.positions;
    std::vector<double> vals;
    vals.reserve(boundary_order(m).size());
    for (const auto& loop : m.boundary_loops) {
        const size_t n = loop.size();
        for (size_t k = 0; k < n; ++k) {
            const Vec2 prev = x.row(loop[(k + n - 1) % n]);
            const Vec2 here = x.row(loop[k]);
            const Vec2 next = x.row(loop[(k + 1) % n]);
            const Vec2 a = here - prev, b = next - here;
            const double la = a.norm(), lb = b.norm();
            if (la == 0.0 || lb == 0.0)
                throw SolverError("degenerate boundary edge at vertex " +
                                  std::to_string(loop[k]));
            const double turn = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
            vals.push_back(turn / (0.5 * (la + lb)));
        }
    }
    return Eigen::Map<const VecX>(vals.data(), vals.size());
}

ConnectionSplit connection_split(const VolEmbedding& phi, const MatX& v_phi,
                                 const LinearSolverConfig& cfg) {
    const Mesh& m = *phi.mesh;
    const PhaseTangent probe{v_phi, MatX::Zero(m.vertices, 2)};
    if (v_phi.cwiseAbs().maxCoeff() > 0 && tangent_defect(phi, probe) > 1e-8)
        throw ConstraintError("velocity violates the per-triangle area constraint");

    const EmbeddedDomain dom{phi.mesh, phi.positions};
    auto [u_par, grad] = helmholtz_project(dom, v_phi, cfg);

    // Invert the averaged deformation gradient pointwise: the right-action
    // generator built from this w reproduces u_par exactly.
    const std::vector<Mat2> G = averaged_deformation(phi, phi.positions);
    VecX w(2 * m.vertices);
    for (int s = 0; s < m.vertices; ++s) {
        if (std::abs(G[s].determinant()) < 1e-12)
            throw SolverError("averaged deformation gradient is singular at vertex " +
                              std::to_string(s));
        const Vec2 ws = G[s].inverse() * u_par.row(s).transpose();
        w[2 * s] = ws.x();
        w[2 * s + 1] = ws.y();
    }

    ConnectionSplit out;
    out.w = AlgebraElementS{w};
    out.grad_part = grad;
    out.admissibility_residual = admissibility_defect(m, w);
    const BoundaryNormals bn = boundary_normals(m, phi.positions);
    out.boundary_normal_speed.resize(bn.order.size());
    for (size_t k = 0; k < bn.order.size(); ++k)
        out.boundary_normal_speed[k] = v_phi.row(bn.order[k]).dot(bn.normal.row(k));
    return out;
}

ConnectionSplit connection_split(const VolEmbedding& phi, const MatX& v_phi) {
    return connection_split(phi, v_phi, default_solver(phi.mesh->vertices));
}

VecX pressure_field(const FluidState& s, const LinearSolverConfig& cfg) {
    const Mesh& m = *s.emb.mesh;
    const EmbeddedDomain dom{s.emb.mesh, s.emb.positions};
    const VecX areas = embedded_areas(dom);
    const VecX mass = embedded_vertex_mass(dom);
    const std::vector<Mat2> J = velocity_gradients(dom, s.velocity, areas);
    // Source: -trace((Dv)^2), triangle-constant, mass-averaged to vertices.
    VecX rhs = VecX::Zero(m.vertices);
    for (int t = 0; t < m.triangle_count(); ++t) {
        const double tr = (J[t] * J[t]).trace();
        for (int corner : m.triangles[t])
            rhs[corner] -= areas[t] / 3.0 * tr;
    }
    rhs = rhs.cwiseQuotient(mass);
    const VecX kappa = curvature(dom);
    return poisson_dirichlet(dom, rhs, s.tau * kappa, cfg);
}

VecX pressure_field(const FluidState& s) {
    return pressure_field(s, default_solver(s.emb.mesh->vertices));
}

FluidState step(const FluidState& s, double dt, bool volume_correction,
                const LinearSolverConfig& cfg) {
    if (!(dt > 0))
        throw SchemaError("step needs a positive dt");
    const Mesh& m = *s.emb.mesh;
    const EmbeddedDomain dom{s.emb.mesh, s.emb.positions};
    const VecX areas = embedded_areas(dom);
    const VecX mass = embedded_vertex_mass(dom);

    const VecX p = pressure_field(s, cfg);
    const MatX grad_p = averaged_gradient(dom, p);

    // Advection (v . grad)v from the mass-averaged velocity Jacobian.
    const std::vector<Mat2> J = velocity_gradients(dom, s.velocity, areas);
    MatX vdot = MatX::Zero(m.vertices, 2);
    for (int t = 0; t < m.triangle_count(); ++t)
        for (int corner : m.triangles[t])
            vdot.row(corner) += (areas[t] / 3.0) * (J[t] * s.velocity.row(corner).transpose()).transpose();
    for (int sv = 0; sv < m.vertices; ++sv)
        vdot.row(sv) /= mass[sv];

    MatX v = s.velocity - dt * (vdot + grad_p);

    // Stability guard: no vertex may move more than a fifth of its shortest
    // incident edge.
    VecX shortest = VecX::Constant(m.vertices, std::numeric_limits<double>::infinity());
    for (const auto& e : m.edges) {
        const double len = (s.emb.positions.row(e[1]) - s.emb.positions.row(e[0])).norm();
        shortest[e[0]] = std::min(shortest[e[0]], len);
        shortest[e[1]] = std::min(shortest[e[1]], len);
    }
    for (int sv = 0; sv < m.vertices; ++sv)
        if (dt * v.row(sv).norm() > 0.2 * shortest[sv]) {
            std::ostringstream msg;
            msg << "time step too large: vertex " << sv << " would move "
                << dt * v.row(sv).norm() << " against incident edge " << shortest[sv];
            throw ConstraintError(msg.str());
        }

    MatX x = s.emb.positions + dt * v;
    for (int t = 0; t < m.triangle_count(); ++t)
        if (!(triangle_area(m, x, t) > 0)) {
            std::ostringstream msg;
            msg << "time step inverted triangle " << t;
            throw ConstraintError(msg.str());
        }

    const EmbeddedDomain dom_new{s.emb.mesh, x};
    v = project_velocity(dom_new, v, cfg);

    if (volume_correction)
        x = restore_volume(m, x);

    FluidState out;
    out.emb = VolEmbedding{s.emb.mesh, x};
    out.velocity = v;
    out.tau = s.tau;
    out.time = s.time + dt;
    return out;
}

FluidState step(const FluidState& s, double dt, bool volume_correction) {
    return step(s, dt, volume_correction, default_solver(s.emb.mesh->vertices));
}

Diagnostics diagnostics(const FluidState& s) {
    const Mesh& m = *s.emb.mesh;
    const EmbeddedDomain dom{s.emb.mesh, s.emb.positions};
    const VecX areas = embedded_areas(dom);
    const VecX mass = embedded_vertex_mass(dom);

    Diagnostics d;
    d.volume = areas.sum();
    d.perimeter = polygon_perimeter(m, s.emb.positions);
    for (int sv = 0; sv < m.vertices; ++sv) {
        const double sp = s.velocity.row(sv).norm();
        d.kinetic += 0.5 * mass[sv] * sp * sp;
        d.max_speed = std::max(d.max_speed, sp);
    }
    d.energy = d.kinetic + s.tau * d.perimeter;

    const DiscreteForm vform = pullback(s.emb, s.velocity);
    d.vorticity = d1(m, vform).values;
    d.jr_class = quotient_project(m, vform, QuotientMode::h_free);

    const BoundaryNormals bn = boundary_normals(m, s.emb.positions);
    d.boundary_normal_speed.resize(bn.order.size());
    for (size_t k = 0; k < bn.order.size(); ++k)
        d.boundary_normal_speed[k] = s.velocity.row(bn.order[k]).dot(bn.normal.row(k));

    // Pressure sampled at the area centroid: P1 interpolation inside the
    // containing triangle, nearest vertex if the centroid falls outside a
    // nonconvex boundary.
    const VecX p = pressure_field(s);
    Vec2 centroid = Vec2::Zero();
    for (int t = 0; t < m.triangle_count(); ++t) {
        Vec2 c = Vec2::Zero();
        for (int corner : m.triangles[t])
            c += s.emb.positions.row(corner);
        centroid += areas[t] / 3.0 * c;
    }
    centroid /= areas.sum();
    bool found = false;
    for (int t = 0; t < m.triangle_count() && !found; ++t) {
        const auto& tri = m.triangles[t];
        const Vec2 a = s.emb.positions.row(tri[0]);
        const Vec2 b = s.emb.positions.row(tri[1]);
        const Vec2 c = s.emb.positions.row(tri[2]);
        const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        const Vec2 r = centroid - a;
        const double l1 = (r.x() * (c - a).y() - r.y() * (c - a).x()) / det;
        const double l2 = ((b - a).x() * r.y() - (b - a).y() * r.x()) / det;
        if (l1 >= -1e-12 && l2 >= -1e-12 && l1 + l2 <= 1 + 1e-12) {
            d.pressure_at_centroid = (1 - l1 - l2) * p[tri[0]] + l1 * p[tri[1]] + l2 * p[tri[2]];
            found = true;
        }
    }
    if (!found) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int sv = 0; sv < m.vertices; ++sv) {
            const double dist = (Vec2(s.emb.positions.row(sv)) - centroid).norm();
            if (dist < bd) {
                bd = dist;
                best = sv;
            }
        }
        d.pressure_at_centroid = p[best];
    }
    return d;
}

std::vector<TrajectoryRow> run_trajectory(FluidState s, double dt, int steps,
                                          bool volume_correction) {
    std::vector<TrajectoryRow> rows;
    const Diagnostics d0 = diagnostics(s);
    const double jr_ref = d0.jr_class.values.norm();
    const double vort_ref = d0.vorticity.norm();
    auto emit = [&](const Diagnostics& d, double time) {
        TrajectoryRow r;
        r.time = time;
        r.energy = d.energy;
        r.volume = d.volume;
        r.perimeter = d.perimeter;
        r.max_speed = d.max_speed;
        const double jd = (d.jr_class.values - d0.jr_class.values).norm();
        const double vd = (d.vorticity - d0.vorticity).norm();
        r.jr_drift = jr_ref > 0 ? jd / jr_ref : jd;
        r.vorticity_drift = vort_ref > 0 ? vd / vort_ref : vd;
        r.pressure_at_centroid = d.pressure_at_centroid;
        rows.push_back(r);
    };
    emit(d0, s.time);
    for (int k = 0; k < steps; ++k) {
        s = step(s, dt, volume_correction);
        emit(diagnostics(s), s.time);
    }
    return rows;
}

} // namespace fbdp
