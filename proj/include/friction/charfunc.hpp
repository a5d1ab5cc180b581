#pragma once
// Characteristic-function picture of the linear friction channel: the
// momentum-damping factor A, the closed one-step transformation law, the
// free-particle Gibbs fix-point residual, and the fix-point iteration
// diagnostics. The true fix point is singular (a delta ridge on the P = 0
// axis); the finite-grid statements implying it are the geometric decay of
// the off-axis mass and the convergence of the on-axis profile.

#include "friction/distributions.hpp"
#include "friction/phase_space.hpp"

#include <vector>

namespace friction {

// A(P, X) = int dq e^{i alpha q X / hbar} sqrt(mu(q - P) mu(q)), trapezoid
// quadrature over the resolved support (refined against the oscillation).
// |A(P, X)| <= A(P, 0) <= 1, with A(P, 0) = 1 only at P = 0.
cplx A_factor(const MeasurementDistribution& mu, double alpha, double P, double X);

// One application of the channel in the characteristic-function picture.
// The grid chi stores tr{rho e^{i(P x - X p)/hbar}} (X reflected relative to
// A's argument), so the one-step law reads
//   chi'(P, X) = A(P, -X) e^{i alpha P X / 2 hbar} chi(P, (1 - alpha) X).
// Each row of chi, after stripping the symmetric e^{-iPX/2 hbar} phase, is a
// finite sum of momentum-lattice frequencies; the X-rescaling evaluates that
// band-limited interpolant exactly. Weight on the unpaired -p_max Nyquist
// frequency leaves the interpolant undefined and makes the call throw.
// pre: alpha in (0, 2); mu 1D with mu.hbar equal to the grid's.
CharFunction channel_on_char(double alpha, const MeasurementDistribution& mu,
                             const CharFunction& chi);

// Sup-norm distance over an X sample between A(0, X) and the free-particle
// Gibbs profile e^{-m k_B T X^2 alpha (2 - alpha) / 2 hbar^2} (k_B = 1).
// Falls below 1e-8 only for Gaussian mu at T = alpha sigma^2 / ((2-alpha) m);
// any other mu keeps the residual bounded away from zero for every T.
// pre: alpha in (0, 2), T > 0, mass > 0.
double gibbs_residual(double T, double mass, const MeasurementDistribution& mu,
                      double alpha);

struct CharIteration {
    std::vector<double> off_axis_sup; // [k] = sup_{P != 0, X} |chi_k|, k = 0..n
    double decay_bound = 0;           // max over off-axis grid rows of A(P, 0)
    CharFunction chi;                 // after n applications
};

// Applies channel_on_char n times. Records the off-axis sup of |chi| after
// every step and checks the geometric decay sup_{k+1} <= decay_bound * sup_k
// (small slack for the sampled sup); a violation throws logic_error.
CharIteration iterate_channel_char(double alpha, const MeasurementDistribution& mu,
                                   const CharFunction& chi0, int n);

} // namespace friction
