#pragma once

// Free-boundary incompressible flow with surface tension: polygon curvature,
// the connection split of a constrained velocity into reference circulation
// plus horizontal remainder, an explicit projection step, and conservation
// diagnostics.

#include "fbdp/dec.hpp"
#include "fbdp/momentum.hpp"
#include "fbdp/phase.hpp"

#include <vector>

namespace fbdp {

struct FluidState {
    VolEmbedding emb;
    MatX velocity; // V x 2; weakly divergence-free on the embedded domain
    double tau = 0.0;
    double time = 0.0;
};

// Discrete curvature per boundary vertex (canonical boundary order): turning
// angle over half the sum of the adjacent boundary edge lengths. Positive at
// convex corners.
VecX curvature(const EmbeddedDomain& dom);

struct ConnectionSplit {
    VecX boundary_normal_speed; // canonical boundary order
    AlgebraElementS w;          // reference circulation content
    MatX grad_part;             // horizontal (gradient-shaped) remainder
    double admissibility_residual = 0.0; // flux defect of w at the layout
};

// Split a constrained velocity into the right-action generator that
// reproduces its tangent divergence-free part, the gradient-shaped
// remainder, and the boundary normal speed. Exact reconstruction:
// generator_right(w).dphi + grad_part equals the input.
ConnectionSplit connection_split(const VolEmbedding& phi, const MatX& v_phi,
                                 const LinearSolverConfig& cfg);
ConnectionSplit connection_split(const VolEmbedding& phi, const MatX& v_phi);

// Nodal pressure of the projection step: Galerkin solve with boundary values
// tau * curvature and the weak advection source.
VecX pressure_field(const FluidState& s, const LinearSolverConfig& cfg);
VecX pressure_field(const FluidState& s);

// Removes the weak interior divergence of v and its net boundary flux (the
// shoelace derivative of total area), the constraint space used by step's
// re-projection. Also the right way to condition an initial velocity.
MatX project_velocity(const EmbeddedDomain& dom, const MatX& v,
                      const LinearSolverConfig& cfg);
MatX project_velocity(const EmbeddedDomain& dom, const MatX& v);

// One explicit projection step: pressure from surface tension, advection and
// pressure force, material vertex motion, interior re-projection of the
// velocity, optional uniform-normal volume repair. Rejects steps that would
// move a vertex more than a fifth of its shortest incident edge or invert a
// triangle.
FluidState step(const FluidState& s, double dt, bool volume_correction,
                const LinearSolverConfig& cfg);
FluidState step(const FluidState& s, double dt, bool volume_correction = false);

struct Diagnostics {
    double energy = 0.0; // kinetic plus tau * perimeter
    double kinetic = 0.0;
    double volume = 0.0;
    double perimeter = 0.0;
    double max_speed = 0.0;
    VecX vorticity;             // per-triangle circulation of the velocity form
    DiscreteForm jr_class;      // canonical class of the velocity edge form
    VecX boundary_normal_speed; // canonical boundary order
    double pressure_at_centroid = 0.0;
};

Diagnostics diagnostics(const FluidState& s);

struct TrajectoryRow {
    double time = 0.0;
    double energy = 0.0;
    double volume = 0.0;
    double perimeter = 0.0;
    double max_speed = 0.0;
    double jr_drift = 0.0;        // class drift from the run's initial state
    double vorticity_drift = 0.0; // same for per-triangle circulation
    double pressure_at_centroid = 0.0;
};

// Fold `steps` steps from the initial state, one diagnostics row per state
// (including the initial one). Drifts are relative to the first row when its
// reference norm is nonzero, absolute otherwise.
std::vector<TrajectoryRow> run_trajectory(FluidState s, double dt, int steps,
                                          bool volume_correction);

} // namespace fbdp
