#pragma once
// Dissipative-CSL parameter mapping: the (gamma, r_csl, k) -> (sigma, alpha,
// Gamma) dictionary, the operator identity linking the dCSL Lindblad
// operators B(y) to the position-displacement Kraus operators K(y), the
// nonlinear mass-scaling laws, center-of-mass composition, and the
// two-particle bystander cross-term. All grid work is the 1D analog: the
// displayed Gaussian normalizations carry first powers instead of cubes,
// and every Gaussian factorizes per axis.

#include "friction/channel.hpp"

#include <utility>
#include <vector>

namespace friction {

struct DcslParams {
    double gamma = 1;  // rate density (1D: length per time)
    double r_csl = 1;  // length scale
    double k = 0;      // dimensionless dissipation strength, >= 0
    double m = 1;      // particle mass
    double m0 = 1;     // reference mass
    double hbar = 1;

    void validate() const; // throws on non-positive parameters or k < 0
};

struct MappedParams {
    double sigma = 0;  // Gaussian mu width; infinite when frictionless
    double alpha = 0;  // 2k/(1+k), in [0, 2)
    double Gamma = 0;  // measurement rate
    bool frictionless = false; // k = 0: plain CSL, no K representation
};

// sigma = hbar/(2 sqrt(2) k r_csl), alpha = 2k/(1+k),
// Gamma = (m/m0)^2 gamma / [2 sqrt(pi) (1+k) r_csl]  (1D power)
MappedParams map_params(const DcslParams& p);

// Channel spec of the mapped measurement-feedback model (k > 0 only).
ChannelSpec dcsl_channel_spec(const DcslParams& p);

// Momentum-basis matrix of the 1D dCSL Lindblad operator
//   B(y) = (m/2 pi hbar) int dQ e^{iQ(x - y)/hbar}
//                        e^{-r^2 ((1+k)Q + 2k p)^2 / 2 hbar^2},
// the Q-quadrature running on the grid's momentum lattice (where the shift
// e^{iQx/hbar} is exact). Same coefficient convention as kraus_K_matrix.
MatrixXcd dcsl_B_operator(const DcslParams& p, double y, const Grid& g);

// max_y max-elementwise |sqrt(Gamma) K(y) - (sqrt(gamma)/m0) B(y)| over a
// sample of displacements, relative to the operator scale. Columns whose
// kernel support leaks past the momentum boundary (and therefore wraps in
// the grid construction) are excluded. Throws for k = 0 (no K
// representation) and when the grid cannot resolve r_csl.
double verify_identity(const DcslParams& p, const Grid& g);

// Single-particle parameters at mass m, scaled from a reference mass.
struct ScaledParams {
    double mass = 1;
    double Gamma = 0;
    double alpha = 0;
    double sigma = 0;  // Gaussian mu width at this mass
    double k = 0;
    double r_csl = 0;
};

// Reference point of the scaling laws: the mapped parameters at m = m0.
ScaledParams reference_scaled(const DcslParams& p);

// Nonlinear mass scaling of the literature parameters:
//   k(m) = (m0/m) k0 / [1 + (1 - m0/m) k0],
//   r(m) = [1 + (1 - m0/m) k0] r0.
std::pair<double, double> k_r_scaling(double k0, double r0, double m0, double m);

// Gamma(m) = (m/m_ref)^2 Gamma_ref, alpha(m) = (m_ref/m) alpha_ref,
// sigma(m) = (m/m_ref) sigma_ref, (k, r) per k_r_scaling. Throws domain_error
// with the critical mass when alpha(m) >= 2 (friction turns into heating).
ScaledParams scale_params(const ScaledParams& ref, double m);

// Center-of-mass parameters of a rigid point-like compound. Verifies the
// composition invariants (alpha_n m_n conserved, sqrt(Gamma_n) additive,
// sigma_n/m_n invariant) per constituent and returns the single-particle
// parameters at M = sum of masses.
ScaledParams com_reduction(const std::vector<double>& masses, const ScaledParams& ref);

struct BystanderResult {
    // trace norm of [K1(x2) - K1^dag(x2), rho1], normalized by the largest
    // singular value of K1(x2)
    double cross_norm = 0;
    // same residual with the delta regularized by particle 2's packet:
    // trace norm of int dy tr{K2(y) rho2} [K1(y) - K1^dag(y), rho1],
    // normalized by the integrated trace weight and the K1 scale
    double imbalance = 0;
    // the identical construction for a self-adjoint (position-Gaussian)
    // Lindblad family; vanishes identically
    double control_norm = 0;
    double trace_weight = 0;     // int dy tr{K2(y) rho2}
    double trace_real_error = 0; // max |Im tr{K2(y) rho2}| / max |tr{...}|
};

// Failure of the reduced-state independence condition for two particles
// under the summed-Lindblad ansatz; particle 2 sits in a packet of width
// 2 dx at x2.
BystanderResult bystander_cross_term(const ChannelSpec& spec1, const ChannelSpec& spec2,
                                     const GridState& rho1, double x2);

} // namespace friction
