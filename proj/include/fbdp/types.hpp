#pragma once

// Shared aliases and the error taxonomy. Every failure the library can
// signal is one of these types; the CLI maps them onto its exit codes.

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>

namespace fbdp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Base class so callers can catch anything of ours in one clause.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed serialized data: missing keys, wrong sizes, bad values.
struct SchemaError : Error {
    using Error::Error;
};

// Complex-level defects: dangling vertex refs, non-manifold edges,
// disconnected pieces, loops that do not match the boundary.
struct ConnectivityError : Error {
    using Error::Error;
};

// Inconsistent triangle winding (an interior edge traversed the same way
// by both of its triangles) or inverted embedded triangles.
struct OrientationError : Error {
    using Error::Error;
};

// Linear solve failed to converge, or the system was degenerate
// (zero-area triangle, incompatible Neumann data, ...).
struct SolverError : Error {
    using Error::Error;
};

// A precondition on a constraint was violated beyond tolerance
// (per-triangle volume, linearized tangency, integrator guard).
struct ConstraintError : Error {
    using Error::Error;
};

// Phase point outside the everywhere-nonzero covector regime.
struct RegimeError : Error {
    using Error::Error;
};

// Filesystem-level failure (cannot open/read/write).
struct IoError : Error {
    using Error::Error;
};

// Interleaved flattening [x0,y0,x1,y1,...] used for all 2V-coordinate
// linear algebra. Kept in one place so every module agrees on the order.
inline VecX flatten(const MatX& a) {
    VecX out(2 * a.rows());
    for (Eigen::Index s = 0; s < a.rows(); ++s) {
        out[2 * s] = a(s, 0);
        out[2 * s + 1] = a(s, 1);
    }
    return out;
}

inline MatX unflatten(const VecX& v) {
    MatX out(v.size() / 2, 2);
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
        out(s, 0) = v[2 * s];
        out(s, 1) = v[2 * s + 1];
    }
    return out;
}

} // namespace fbdp
