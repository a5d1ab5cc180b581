#include "friction/hamiltonian.hpp"

#include "friction/kernels.hpp"

#include <cmath>

namespace friction {

VectorXd Hamiltonian::kinetic_diag(const Grid& g) const {
    return g.pv.array().square() / (2.0 * mass);
}

VectorXd Hamiltonian::potential_diag(const Grid& g) const {
    switch (potential) {
    case Potential::Free:
        return VectorXd::Zero(g.n);
    case Potential::Harmonic:
        return 0.5 * mass * omega * omega * g.xv.array().square();
    case Potential::Tabulated:
        if (v_of_x.size() != g.n)
            throw std::invalid_argument("potential_diag: tabulated size mismatch");
        return v_of_x;
    }
    throw std::logic_error("potential_diag: unknown potential");
}

namespace {

VectorXcd phase_of(const VectorXd& e, double dt, double hbar) {
    VectorXcd u(e.size());
    for (Eigen::Index j = 0; j < e.size(); ++j)
        u[j] = std::polar(1.0, -e[j] * dt / hbar);
    return u;
}

} // namespace

Propagator::Propagator(const Grid& g, const Hamiltonian& h, double dt)
    : grid_(g), dt_(dt) {
    if (dt <= 0)
        throw std::invalid_argument("Propagator: dt must be positive");
    const VectorXd kin = h.kinetic_diag(g);
    if (h.potential == Hamiltonian::Potential::Free) {
        free_ = true;
        kin_full_ = phase_of(kin, dt, g.hbar);
        return;
    }
    const VectorXd pot = h.potential_diag(g);
    // Yoshida coefficients: w1 = 1/(2 - 2^(1/3)), w0 = 1 - 2 w1
    const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
    const double w0 = 1.0 - 2.0 * w1;
    kin_edge_ = phase_of(kin, 0.5 * w1 * dt, g.hbar);
    kin_mid_ = phase_of(kin, 0.5 * (w0 + w1) * dt, g.hbar);
    pot_w1_ = phase_of(pot, w1 * dt, g.hbar);
    pot_w0_ = phase_of(pot, w0 * dt, g.hbar);
}

void Propagator::step(VectorXcd& psi) const {
    const auto& k = kernels::ops();
    const std::size_t n = static_cast<std::size_t>(grid_.n);
    if (free_) {
        k.chad_mult(psi.data(), kin_full_.data(), n);
        return;
    }
    const Fourier& ft = fourier_for(grid_);
    VectorXcd buf(grid_.n);
    auto pot = [&](const VectorXcd& u) {
        ft.to_position(grid_, psi, buf);
        k.chad_mult(buf.data(), u.data(), n);
        ft.to_momentum(grid_, buf, psi);
    };
    k.chad_mult(psi.data(), kin_edge_.data(), n);
    pot(pot_w1_);
    k.chad_mult(psi.data(), kin_mid_.data(), n);
    pot(pot_w0_);
    k.chad_mult(psi.data(), kin_mid_.data(), n);
    pot(pot_w1_);
    k.chad_mult(psi.data(), kin_edge_.data(), n);
}

void Propagator::step(MatrixXcd& rho) const {
    const auto& k = kernels::ops();
    const std::size_t n = static_cast<std::size_t>(grid_.n);
    if (free_) {
        k.outer_phase_mult(rho.data(), kin_full_.data(), n);
        return;
    }
    const Fourier& ft = fourier_for(grid_);
    auto pot = [&](const VectorXcd& u) {
        ft.rho_to_position(grid_, rho, rho);
        k.outer_phase_mult(rho.data(), u.data(), n);
        ft.rho_to_momentum(grid_, rho, rho);
    };
    k.outer_phase_mult(rho.data(), kin_edge_.data(), n);
    pot(pot_w1_);
    k.outer_phase_mult(rho.data(), kin_mid_.data(), n);
    pot(pot_w0_);
    k.outer_phase_mult(rho.data(), kin_mid_.data(), n);
    pot(pot_w1_);
    k.outer_phase_mult(rho.data(), kin_edge_.data(), n);
}

double energy(const GridState& s, const Hamiltonian& h) {
    Moments1D m = moments_of(s);
    double e = m.pp / (2.0 * h.mass);
    switch (h.potential) {
    case Hamiltonian::Potential::Free:
        break;
    case Hamiltonian::Potential::Harmonic:
        e += 0.5 * h.mass * h.omega * h.omega * m.xx;
        break;
    case Hamiltonian::Potential::Tabulated:
        e += std::real(expectation(s, Observable::diag_x(h.potential_diag(s.grid))));
        break;
    }
    return e;
}

double energy(const WavefunctionState& s, const Hamiltonian& h) {
    Moments1D m = moments_of(s);
    double e = m.pp / (2.0 * h.mass);
    switch (h.potential) {
    case Hamiltonian::Potential::Free:
        break;
    case Hamiltonian::Potential::Harmonic:
        e += 0.5 * h.mass * h.omega * h.omega * m.xx;
        break;
    case Hamiltonian::Potential::Tabulated:
        e += std::real(expectation(s, Observable::diag_x(h.potential_diag(s.grid))));
        break;
    }
    return e;
}

} // namespace friction
