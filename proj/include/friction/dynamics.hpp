#pragma once
// Time evolution: grid master equation, Monte Carlo jump unraveling, closed
// moment ODEs, and harmonic-oscillator stability/equilibrium analysis.

#include "friction/channel.hpp"
#include "friction/hamiltonian.hpp"

#include <array>
#include <utility>
#include <vector>

namespace friction {

struct EvolutionResult {
    VectorXd times;
    std::vector<MomentState> moments; // one per time sample
    VectorXd energy;                  // <H> per sample

    // Monte Carlo only: standard error of the ensemble means
    std::vector<Moments1D> std_error;
    VectorXd energy_std_error;

    // optional density snapshots (evolve_master with snapshot_every > 0)
    std::vector<GridState> snapshots;
    VectorXd snapshot_times;
};

// d rho/dt = -(i/hbar)[H, rho] + Gamma (Lambda[rho] - rho), Strang-split:
// coherent half step, dissipator full step in jump form, coherent half step.
// Requires dt*Gamma <= 0.1 and dt*max|spectrum(H)| <= 0.1 hbar (else throws
// before running). Moments/energy recorded every record_every steps.
EvolutionResult evolve_master(const Hamiltonian& h, const ChannelSpec& spec,
                              const GridState& rho0, double t_final, double dt,
                              int record_every = 1, int snapshot_every = 0);

// Piecewise-deterministic jump unraveling: unitary split-step evolution with
// exact exponential waiting times at rate Gamma; at a jump, draw q from the
// outcome density, apply L(q), renormalize. Ensemble means over n_traj
// trajectories with standard errors. Each trajectory owns an RNG stream
// derived from (seed, trajectory index); results are bit-reproducible and
// independent of the worker count.
EvolutionResult unravel(const Hamiltonian& h, const ChannelSpec& spec,
                        const WavefunctionState& psi0, double t_final, double dt,
                        int n_traj, unsigned long long seed,
                        int record_every = 1, int workers = 1);

// RK4 on the closed Ehrenfest system (linear feedback, free or harmonic H;
// anything else is rejected). 1D: 5 variables; 3D Gaussian mu: means plus
// symmetrized second-moment blocks. Moments carry raw x/p units.
EvolutionResult moment_ode(const Hamiltonian& h, const ChannelSpec& spec,
                           const MomentState& m0, double t_final);

// Generator of the dimensionless second-moment vector
// v = (<xi^2>, <{xi,pi}>, <pi^2>); det S = -2 omega^2 Gamma alpha (2-alpha).
Eigen::Matrix3d system_matrix(double omega, double Gamma, double alpha);

// Eigenvalues by the closed-form cubic (deflation for the complex pair),
// sorted by real part then imaginary part.
std::array<cplx, 3> system_eigenvalues(const Eigen::Matrix3d& S);
double max_re_eigenvalue(const Eigen::Matrix3d& S);

struct StabilityScan {
    double omega = 1.0;
    VectorXd gammas, alphas;
    MatrixXd max_re; // (i, j) -> gammas[i], alphas[j]
};
StabilityScan stability_scan(double omega, std::pair<double, double> gamma_range,
                             std::pair<double, double> alpha_range, int resolution);

struct EquilibriumResult {
    // stationary moments in dimensionless quadratures xi = x/x0, pi = p/p0
    MomentState moments;
    double energy = 0; // <H>_inf / (hbar omega), from the linear solve
    // independent closed forms (agreement with the solve asserted internally)
    double correlation_closed = 0; // <{xi,pi}>_inf
    double imbalance_closed = 0;   // <xi^2 - pi^2>_inf
    double energy_closed = 0;
};

// v_inf = -S^{-1} w_inf for the damped oscillator; requires alpha in (0,2)
// and Gamma > 0 (singular S throws).
EquilibriumResult equilibrium_moments(double omega, double Gamma, double alpha,
                                      const MeasurementDistribution& mu,
                                      double mass = 1.0);

} // namespace friction
