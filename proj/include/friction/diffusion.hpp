#pragma once
// Weak measurement/feedback (diffusive) limit: drift and diffusion
// coefficients of the second-order channel expansion, the completely
// positive Caldeira-Leggett master equation built from quadratic Lindblad
// operators, and a comparator against the full channel dynamics.

#include "friction/dynamics.hpp"

namespace friction {

struct DiffusionCoefficients {
    int dims = 1;
    // 1D scalars: drho/dt gains -Gamma(A[p,[p,.]] + iB[x,{p,.}] + C[x,[x,.]])
    // and the coherent drift -(i/hbar)[-F x, .]
    double F = 0, A = 0, B = 0, C = 0;
    // 3D (Gaussian mu, linear feedback)
    Eigen::Vector3d F3 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d A3 = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d B3 = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d C3 = Eigen::Matrix3d::Zero();
};

// A is evaluated both as E_mu[-d^2 ln mu/dq^2]/8 (analytic for Gaussian,
// finite differences on the native table spacing otherwise) and as
// E_nu[y^2]/2 hbar^2; disagreement beyond 1e-6 (ill-behaved tails or an
// under-resolved table) throws. F = Gamma E_mu[f].
DiffusionCoefficients diffusion_coefficients(const MeasurementDistribution& mu,
                                             const FeedbackLaw& f, double Gamma = 1.0);

// Lindblad operator ell = alpha sqrt(2) sigma x/hbar + i p/(sqrt(2) sigma),
// entering as (Gamma/2) D[ell] plus the Hamiltonian correction
// (Gamma alpha/2) on the symmetrized product of x and p, which together
// equal the A,B,C double-commutator generator.
struct LindbladSpec {
    double rate = 0;  // Gamma
    double alpha = 0;
    double sigma = 1;
};
LindbladSpec caldeira_leggett_lindblads(double Gamma, double alpha, double sigma);

// dense momentum-basis matrix of the position operator (coefficient
// convention: psi' = M psi)
MatrixXcd position_matrix(const Grid& g);

// d rho/dt contribution of the dissipator plus the {x,p} correction,
// i.e. the double-commutator generator (no system Hamiltonian)
MatrixXcd cl_dissipator(const LindbladSpec& lb, const GridState& s);

// Strang-split evolution under H and the Caldeira-Leggett generator.
// Prechecks: dt*Gamma <= 0.1, dt*max|spectrum(H)| <= 0.1 hbar, and explicit
// stability of the quadratic dissipator on the grid corners.
EvolutionResult evolve_CL(const Hamiltonian& h, const LindbladSpec& lb,
                          const GridState& rho0, double t_final, double dt,
                          int record_every = 1, int snapshot_every = 0);

struct DiffusionComparison {
    VectorXd times;
    VectorXd trace_dist;          // full channel vs CL at sampled times
    VectorXd d_xx, d_xp, d_pp;    // absolute second-moment discrepancies
    // worst relative Frobenius discrepancy of the 2x2 second-moment matrix,
    // measured in coordinates normalized by the full solution's widths
    double max_rel_second = 0;
};

// Runs evolve_master (full channel) and evolve_CL with coefficients matched
// through diffusion_coefficients of the same mu, f. Unbiased Gaussian mu with
// linear feedback only.
DiffusionComparison compare_full_vs_diffusion(const Hamiltonian& h,
                                              const ChannelSpec& spec,
                                              const GridState& rho0, double t_final,
                                              int n_samples = 10);

} // namespace friction
