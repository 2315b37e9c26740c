#pragma once

// Small dense subspace toolkit shared by the phase/momentum/dualpair layers:
// SVD null spaces with a relative rank cutoff, span orthonormalization, and
// principal-angle subspace comparison. Columns are always basis vectors.

#include "fbdp/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fbdp {

inline constexpr double kRankCutoff = 1e-9; // sigma <= cutoff * sigma_max is rank-null

inline int svd_rank(const Eigen::BDCSVD<MatX>& svd, double rel_cutoff) {
    const auto& s = svd.singularValues();
    if (s.size() == 0)
        return 0;
    const double thresh = rel_cutoff * std::max(s[0], 1e-300);
    int r = 0;
    while (r < s.size() && s[r] > thresh)
        ++r;
    return r;
}

// Orthonormal basis of the null space of A (columns).
inline MatX null_space(const MatX& A, double rel_cutoff = kRankCutoff) {
    if (A.rows() == 0 || A.cols() == 0)
        return MatX::Identity(A.cols(), A.cols());
    Eigen::BDCSVD<MatX> svd(A, Eigen::ComputeFullV);
    const int r = svd_rank(svd, rel_cutoff);
    return svd.matrixV().rightCols(A.cols() - r);
}

// Orthonormal basis of the column span of A, rank-truncated.
inline MatX orthonormal_span(const MatX& A, double rel_cutoff = kRankCutoff) {
    if (A.cols() == 0 || A.rows() == 0)
        return MatX::Zero(A.rows(), 0);
    Eigen::BDCSVD<MatX> svd(A, Eigen::ComputeThinU);
    const int r = svd_rank(svd, rel_cutoff);
    return svd.matrixU().leftCols(r);
}

// Largest singular value.
inline double spectral_norm(const MatX& A) {
    if (A.rows() == 0 || A.cols() == 0)
        return 0.0;
    return Eigen::BDCSVD<MatX>(A).singularValues()[0];
}

// Largest canonical angle between the spans of two orthonormal bases with
// equal dimension; pi/2 when the dimensions differ (no alignment claimed).
// Computed through the sine (projection residual), which resolves angles
// near zero that acos of a cosine would round away.
inline double max_principal_angle(const MatX& U, const MatX& W) {
    if (U.cols() != W.cols())
        return std::numbers::pi / 2.0;
    if (U.cols() == 0)
        return 0.0;
    const MatX R = W - U * (U.transpose() * W);
    Eigen::BDCSVD<MatX> svd(R);
    const double smax = svd.singularValues().maxCoeff();
    return std::asin(std::clamp(smax, 0.0, 1.0));
}

// How far the span of A sticks out of the span of the orthonormal basis W:
// spectral norm of (I - W W^T) A after normalizing A's columns.
inline double containment_residual(const MatX& A, const MatX& W) {
    if (A.cols() == 0)
        return 0.0;
    MatX An = A;
    for (Eigen::Index c = 0; c < An.cols(); ++c) {
        const double n = An.col(c).norm();
        if (n > 0)
            An.col(c) /= n;
    }
    const MatX R = An - W * (W.transpose() * An);
    return R.norm() > 0 ? Eigen::BDCSVD<MatX>(R).singularValues()[0] : 0.0;
}

} // namespace fbdp
