#pragma once
// First and second moments of position/momentum: 5 numbers in 1D, mean
// vectors plus symmetric second-moment matrices in 3D.

#include "friction/state.hpp"

namespace friction {

struct MomentState {
    int dims = 1;

    // 1D: m1.xp holds the full anticommutator <{x,p}>
    Moments1D m1;

    // 3D, symmetrized: Rxx(j,k) = <(x_j x_k + x_k x_j)/2>,
    // Rxp(j,k) = <(x_j p_k + p_k x_j)/2>, Rpp analogous.
    Eigen::Vector3d x3 = Eigen::Vector3d::Zero();
    Eigen::Vector3d p3 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d Rxx = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d Rxp = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d Rpp = Eigen::Matrix3d::Zero();

    static MomentState from_1d(const Moments1D& m) { return {1, m, {}, {}, {}, {}, {}}; }
    static MomentState from_state(const GridState& s) { return from_1d(moments_of(s)); }

    double var_x() const { return m1.xx - m1.x * m1.x; }
    double var_p() const { return m1.pp - m1.p * m1.p; }
    double cov_xp() const { return 0.5 * m1.xp - m1.x * m1.p; }

    // Var(x)Var(p) - Cov^2 >= hbar^2/4 with 1e-9 slack
    void check_uncertainty(double hbar = 1.0) const;
};

} // namespace friction
