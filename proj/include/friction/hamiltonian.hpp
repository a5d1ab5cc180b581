#pragma once
// System Hamiltonian H = p^2/2m + V(x) and a 4th-order split-step
// propagator for the coherent part of the evolution.

#include "friction/state.hpp"

namespace friction {

struct Hamiltonian {
    enum class Potential { Free, Harmonic, Tabulated };
    double mass = 1.0;
    Potential potential = Potential::Free;
    double omega = 0.0;  // Harmonic: V = m omega^2 x^2 / 2
    VectorXd v_of_x;     // Tabulated: sampled on the position grid

    static Hamiltonian free_particle(double m) {
        return {m, Potential::Free, 0.0, {}};
    }
    static Hamiltonian harmonic(double m, double omega) {
        return {m, Potential::Harmonic, omega, {}};
    }
    static Hamiltonian tabulated(double m, VectorXd v) {
        return {m, Potential::Tabulated, 0.0, std::move(v)};
    }

    VectorXd potential_diag(const Grid& g) const;
    VectorXd kinetic_diag(const Grid& g) const; // p^2/2m
};

// exp(-i H dt / hbar) by Yoshida composition of Strang kinetic/potential
// splitting (exact for Free). A fixed dt is baked into the cached phases.
class Propagator {
public:
    Propagator(const Grid& g, const Hamiltonian& h, double dt);

    void step(VectorXcd& psi) const;  // momentum-basis amplitudes
    void step(MatrixXcd& rho) const;  // rho -> U rho U^dagger
    void step(WavefunctionState& s) const { step(s.psi); }
    void step(GridState& s) const { step(s.rho); }

    double dt() const { return dt_; }

private:
    Grid grid_;
    double dt_;
    bool free_ = false;
    VectorXcd kin_edge_, kin_mid_; // kinetic phases: w1/2 and (w0+w1)/2
    VectorXcd pot_w1_, pot_w0_;    // potential phases: w1 and w0
    VectorXcd kin_full_;           // Free only: exact phase for dt
};

// <H> for diagnostics (uses the grid observables).
double energy(const GridState& s, const Hamiltonian& h);
double energy(const WavefunctionState& s, const Hamiltonian& h);

} // namespace friction
