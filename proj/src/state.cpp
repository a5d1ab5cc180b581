#include "friction/state.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace friction {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace

double WavefunctionState::norm() const {
    return std::sqrt(psi.squaredNorm() * grid.dp);
}

void WavefunctionState::normalize() {
    double nr = norm();
    if (nr <= 0)
        throw std::runtime_error("normalize: zero-norm state");
    psi /= nr;
}

cplx GridState::trace() const {
    return rho.diagonal().sum() * grid.dp;
}

double GridState::hermiticity_error() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double GridState::min_eigenvalue() const {
    MatrixXcd h = 0.5 * (rho + rho.adjoint()) * grid.dp;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

WavefunctionState gaussian_state(const Grid& g, double x0, double p0c, double width) {
    if (width <= 0)
        throw std::invalid_argument("gaussian_state: width must be positive");
    const double sp = g.hbar / (2.0 * width);
    if (std::abs(x0) + 4.0 * width > g.x_max())
        throw std::invalid_argument("gaussian_state: packet exceeds position grid (4 sigma)");
    if (std::abs(p0c) + 4.0 * sp > g.p_max)
        throw std::invalid_argument("gaussian_state: packet exceeds momentum grid (4 sigma)");
    WavefunctionState s{g, VectorXcd(g.n)};
    const double amp = std::pow(2.0 * width * width / (std::numbers::pi * g.hbar * g.hbar), 0.25);
    for (int j = 0; j < g.n; ++j) {
        const double dpj = g.p(j) - p0c;
        s.psi[j] = amp * std::exp(-width * width * dpj * dpj / (g.hbar * g.hbar)) *
                   std::polar(1.0, -dpj * x0 / g.hbar);
    }
    s.normalize(); // absorb truncation error
    return s;
}

GridState to_density(const WavefunctionState& s) {
    return {s.grid, s.psi * s.psi.adjoint()};
}

namespace {

// diagonal of F rho F^dagger without forming the full transform
VectorXcd position_diagonal(const GridState& s) {
    MatrixXcd rx;
    fourier_for(s.grid).rho_to_position(s.grid, s.rho, rx);
    return rx.diagonal();
}

} // namespace

cplx expectation(const GridState& s, const Observable& obs) {
    const Grid& g = s.grid;
    using K = Observable::Kind;
    switch (obs.kind) {
    case K::Identity:
        return s.rho.diagonal().sum() * g.dp;
    case K::P:
        return (s.rho.diagonal().array() * g.pv.array()).sum() * g.dp;
    case K::P2:
        return (s.rho.diagonal().array() * g.pv.array().square()).sum() * g.dp;
    case K::DiagP:
        return (s.rho.diagonal().array() * obs.diag.array()).sum() * g.dp;
    case K::X: {
        VectorXcd d = position_diagonal(s);
        return (d.array() * g.xv.array()).sum() * g.dx;
    }
    case K::X2: {
        VectorXcd d = position_diagonal(s);
        return (d.array() * g.xv.array().square()).sum() * g.dx;
    }
    case K::DiagX: {
        VectorXcd d = position_diagonal(s);
        return (d.array() * obs.diag.array()).sum() * g.dx;
    }
    case K::XPSym: {
        // Re tr(x p rho): scale rows by p, read the position diagonal
        GridState t{g, g.pv.asDiagonal() * s.rho};
        VectorXcd d = position_diagonal(t);
        return (d.array() * g.xv.array()).sum().real() * g.dx;
    }
    case K::Full:
        return (obs.full * s.rho).trace() * g.dp * g.dp;
    }
    throw std::logic_error("expectation: unknown observable kind");
}

cplx expectation(const WavefunctionState& s, const Observable& obs) {
    const Grid& g = s.grid;
    const Fourier& ft = fourier_for(g);
    using K = Observable::Kind;
    switch (obs.kind) {
    case K::Identity:
        return s.psi.squaredNorm() * g.dp;
    case K::P:
        return (s.psi.array().abs2() * g.pv.array()).sum() * g.dp;
    case K::P2:
        return (s.psi.array().abs2() * g.pv.array().square()).sum() * g.dp;
    case K::DiagP:
        return (s.psi.array().abs2() * obs.diag.array()).sum() * g.dp;
    case K::X: {
        VectorXcd px;
        ft.to_position(g, s.psi, px);
        return (px.array().abs2() * g.xv.array()).sum() * g.dx;
    }
    case K::X2: {
        VectorXcd px;
        ft.to_position(g, s.psi, px);
        return (px.array().abs2() * g.xv.array().square()).sum() * g.dx;
    }
    case K::DiagX: {
        VectorXcd px;
        ft.to_position(g, s.psi, px);
        return (px.array().abs2() * obs.diag.array()).sum() * g.dx;
    }
    case K::XPSym: {
        VectorXcd px, ppx;
        ft.to_position(g, s.psi, px);
        VectorXcd pscaled = g.pv.asDiagonal() * s.psi;
        ft.to_position(g, pscaled, ppx);
        cplx xp = (px.conjugate().array() * g.xv.array() * ppx.array()).sum() * g.dx;
        return xp.real();
    }
    case K::Full:
        return (s.psi.adjoint() * obs.full * s.psi)(0) * g.dp * g.dp;
    }
    throw std::logic_error("expectation: unknown observable kind");
}

Moments1D moments_of(const GridState& s) {
    const Grid& g = s.grid;
    Moments1D m;
    m.p = std::real((s.rho.diagonal().array() * g.pv.array()).sum()) * g.dp;
    m.pp = std::real((s.rho.diagonal().array() * g.pv.array().square()).sum()) * g.dp;
    VectorXcd d = position_diagonal(s);
    m.x = std::real((d.array() * g.xv.array()).sum()) * g.dx;
    m.xx = std::real((d.array() * g.xv.array().square()).sum()) * g.dx;
    m.xp = 2.0 * std::real(expectation(s, Observable::xp_sym()));
    return m;
}

Moments1D moments_of(const WavefunctionState& s) {
    Moments1D m;
    m.x = std::real(expectation(s, Observable::x()));
    m.p = std::real(expectation(s, Observable::p()));
    m.xx = std::real(expectation(s, Observable::x2()));
    m.pp = std::real(expectation(s, Observable::p2()));
    m.xp = 2.0 * std::real(expectation(s, Observable::xp_sym()));
    return m;
}

double trace_distance(const GridState& a, const GridState& b) {
    if (!a.grid.same_as(b.grid))
        throw std::invalid_argument("trace_distance: grid mismatch");
    MatrixXcd d = 0.5 * ((a.rho - b.rho) + (a.rho - b.rho).adjoint()) * a.grid.dp;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

double trace_norm(const Grid& g, const MatrixXcd& m) {
    Eigen::BDCSVD<MatrixXcd> svd(m * g.dp);
    return svd.singularValues().sum();
}

GridState random_mixed_state(const Grid& g, int k, unsigned long long seed,
                             double x_span, double p_span) {
    if (k < 1)
        throw std::invalid_argument("random_mixed_state: need at least one packet");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-x_span * g.x_max(), x_span * g.x_max());
    std::uniform_real_distribution<double> up(-p_span * g.p_max, p_span * g.p_max);
    const double w_lo = 2.5 * g.hbar / g.p_max; // sigma_p = p_max/5
    const double w_hi = g.x_max() / 8.0;
    if (w_hi <= w_lo)
        throw std::invalid_argument("random_mixed_state: grid too small for packets");
    std::uniform_real_distribution<double> uw(w_lo, w_hi);
    std::uniform_real_distribution<double> uweight(0.2, 1.0);

    MatrixXcd rho = MatrixXcd::Zero(g.n, g.n);
    double total = 0;
    for (int i = 0; i < k; ++i) {
        WavefunctionState psi = gaussian_state(g, ux(rng), up(rng), uw(rng));
        double w = uweight(rng);
        rho += w * (psi.psi * psi.psi.adjoint());
        total += w;
    }
    rho /= total;
    return {g, rho};
}

} // namespace friction
