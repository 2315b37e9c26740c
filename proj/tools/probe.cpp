// Scratch measurement driver; not part of the build.
#include "fbdp/euler.hpp"
#include "fbdp/phase.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

using namespace fbdp;

static MatX smooth_field(const MatX& x, int k) {
    MatX v(x.rows(), 2);
    for (int s = 0; s < x.rows(); ++s) {
        const double px = x(s, 0), py = x(s, 1);
        v(s, 0) = std::sin(1.3 * px + 0.4 * k) + 0.3 * py * py;
        v(s, 1) = std::cos(0.9 * py - 0.2 * k) - 0.4 * px * py;
    }
    return v;
}

int main() {
    // helmholtz after the enrichment: idempotence, orthogonality, oracle gap
    for (auto [nr, na] : {std::pair{2, 8}, std::pair{4, 16}}) {
        auto m = std::make_shared<Mesh>(build_disk(nr, na, 1.0));
        const EmbeddedDomain dom{m, require_layout(*m)};
        const VecX mass = embedded_vertex_mass(dom);
        double idem = 0, orth = 0, gap = 0;
        for (int k = 0; k < 3; ++k) {
            const MatX u = smooth_field(dom.positions, k);
            auto [upar, grad] = helmholtz_project(dom, u, default_solver(2 * m->vertices));
            auto [upar2, grad2] = helmholtz_project(dom, upar, default_solver(2 * m->vertices));
            idem = std::max(idem, (upar2 - upar).norm() / upar.norm());
            double dot = 0;
            for (int s = 0; s < m->vertices; ++s)
                dot += mass[s] * upar.row(s).dot(grad.row(s));
            orth = std::max(orth, std::abs(dot) / (upar.norm() * grad.norm()));
            const MatX gref = neumann_gradient_part(dom, u, default_solver(m->vertices));
            gap = std::max(gap, (grad - gref).norm() / u.norm());
        }
        std::printf("helm disk(%d,%d): idem=%.3e orth=%.3e oracle gap=%.4e\n", nr, na, idem,
                    orth, gap);
    }

    // connection_split after the enrichment
    {
        auto m = std::make_shared<Mesh>(build_disk(2, 8, 1.0));
        PhasePoint z = random_phase_point(m, 7);
        PhaseTangent t = random_tangent(z, 8);
        ConnectionSplit cs = connection_split(z.emb, t.dphi);
        PhaseTangent gr = generator_right(z, cs.w);
        std::printf("split: recon=%.3e admis=%.3e |w|=%.3f\n",
                    (gr.dphi + cs.grad_part - t.dphi).norm() / t.dphi.norm(),
                    cs.admissibility_residual, cs.w.w.norm());
        auto bn = boundary_normals(*m, z.emb.positions);
        std::printf("split: net flux = %.3e\n",
                    bn.weight.dot(cs.boundary_normal_speed) / bn.weight.sum());
    }

    // droplet + conservation spot checks (helmholtz does not enter step, but
    // re-confirm nothing drifted)
    {
        auto m = std::make_shared<Mesh>(build_disk(4, 16, 1.0));
        const MatX& X = require_layout(*m);
        FluidState s{{m, X}, MatX::Zero(m->vertices, 2), 0.1, 0.0};
        double vmax = 0;
        for (int k = 0; k < 20; ++k) {
            s = step(s, 1e-3, false);
            vmax = std::max(vmax, s.velocity.rowwise().norm().maxCoeff());
        }
        Diagnostics d = diagnostics(s);
        std::printf("droplet 20 steps: max|v|=%.3e p_centroid=%.5f\n", vmax,
                    d.pressure_at_centroid);
    }
    return 0;
}
