#pragma once
// Quantum states on a grid (momentum basis) and expectation machinery.
//
// Matrices are operator kernels: (A psi)(p_j) = sum_l A[j,l] psi[l] dp,
// tr{A rho} = sum_{jl} A[j,l] rho[l,j] dp^2. The identity kernel is I/dp.

#include "friction/grid.hpp"

namespace friction {

struct WavefunctionState {
    Grid grid;
    VectorXcd psi; // momentum amplitudes, sum |psi|^2 dp = 1
    double norm() const;
    void normalize();
};

struct GridState {
    Grid grid;
    MatrixXcd rho; // trace(rho)*dp = 1
    cplx trace() const;
    double hermiticity_error() const;       // max |rho - rho^dagger|
    double min_eigenvalue() const;          // of the operator rho*dp (on demand)
};

// Minimum-uncertainty Gaussian: <x>=x0, <p>=p0c, Var(x)=width^2,
// Var(p)=hbar^2/(4 width^2). Throws if the packet does not fit the grid.
WavefunctionState gaussian_state(const Grid& g, double x0, double p0c, double width);

GridState to_density(const WavefunctionState& s);

struct Observable {
    enum class Kind { Identity, X, P, X2, P2, XPSym, DiagP, DiagX, Full };
    Kind kind = Kind::Identity;
    VectorXd diag;  // DiagP / DiagX
    MatrixXcd full; // Full (kernel convention)

    static Observable x() { return {Kind::X, {}, {}}; }
    static Observable p() { return {Kind::P, {}, {}}; }
    static Observable x2() { return {Kind::X2, {}, {}}; }
    static Observable p2() { return {Kind::P2, {}, {}}; }
    static Observable xp_sym() { return {Kind::XPSym, {}, {}}; } // {x,p}/2
    static Observable identity() { return {Kind::Identity, {}, {}}; }
    static Observable diag_p(VectorXd v) { return {Kind::DiagP, std::move(v), {}}; }
    static Observable diag_x(VectorXd v) { return {Kind::DiagX, std::move(v), {}}; }
    static Observable matrix(MatrixXcd m) { return {Kind::Full, {}, std::move(m)}; }
};

cplx expectation(const GridState& s, const Observable& obs);
cplx expectation(const WavefunctionState& s, const Observable& obs);

struct Moments1D {
    double x = 0, p = 0;
    double xx = 0;     // <x^2>
    double xp = 0;     // <{x,p}> (full anticommutator)
    double pp = 0;     // <p^2>
};

Moments1D moments_of(const GridState& s);
Moments1D moments_of(const WavefunctionState& s);

// Trace norm of the operator (a-b)*dp via eigenvalues of the Hermitian part.
double trace_distance(const GridState& a, const GridState& b);
double trace_norm(const Grid& g, const MatrixXcd& m); // general, via SVD

// Random localized mixed state: mixture of k Gaussian packets with interior
// support. Deterministic in seed.
GridState random_mixed_state(const Grid& g, int k, unsigned long long seed,
                             double x_span = 0.25, double p_span = 0.25);

} // namespace friction
