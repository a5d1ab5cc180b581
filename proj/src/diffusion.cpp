#include "friction/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace friction {

namespace {

// E_mu[-d^2 ln mu / dq^2] / 8 on the table's native spacing
double hessian_A(const MeasurementDistribution& mu) {
    if (mu.is_gaussian())
        return 1.0 / (8 * mu.sigma[0] * mu.sigma[0]);
    const VectorXd& q = mu.qs;
    const VectorXd& w = mu.ws;
    const double dq = q[1] - q[0];
    const double floor = 1e-12 * w.maxCoeff();
    double acc = 0;
    for (int i = 1; i + 1 < q.size(); ++i) {
        if (w[i - 1] < floor || w[i] < floor || w[i + 1] < floor)
            continue; // tail nodes: negligible weight, noisy log-curvature
        double lpp = (std::log(w[i - 1]) - 2 * std::log(w[i]) + std::log(w[i + 1])) /
                     (dq * dq);
        acc += -w[i] * lpp * dq;
    }
    return acc / 8;
}

// E_mu[f'(q)], analytic where the derivative is singular or trivial
double mean_feedback_slope(const MeasurementDistribution& mu, const FeedbackLaw& f) {
    switch (f.kind) {
    case FeedbackLaw::Kind::Linear:
        return f.coeff;
    case FeedbackLaw::Kind::Constant:
        // f = alpha_C sgn(q), f' = 2 alpha_C delta(q)
        return 2 * f.coeff * mu.density(0.0);
    default: {
        double lo, hi, step;
        mu.support(0, lo, hi, step);
        // f is a callable, not a table: a much finer step than the support
        // spacing is fine and keeps kinks (e.g. q|q|) from polluting E[f']
        double h = 1e-5 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        return expectation_mu(mu, [&](double q) { return (f(q + h) - f(q - h)) / (2 * h); });
    }
    }
}

} // namespace

DiffusionCoefficients diffusion_coefficients(const MeasurementDistribution& mu,
                                             const FeedbackLaw& f, double Gamma) {
    DiffusionCoefficients d;
    d.dims = mu.dims;
    const double hbar = mu.hbar;
    if (mu.dims == 3) {
        if (!f.is_linear())
            throw std::invalid_argument("3D diffusion coefficients require linear feedback");
        double a = f.coeff;
        Eigen::Vector3d b = mu.bias.size() == 3 ? Eigen::Vector3d(mu.bias)
                                                : Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k) {
            double s2 = mu.sigma[k] * mu.sigma[k];
            d.A3(k, k) = 1.0 / (8 * s2);
            d.B3(k, k) = a / (2 * hbar);
            d.C3(k, k) = a * a * s2 / (2 * hbar * hbar);
        }
        d.C3 += (a * a / (2 * hbar * hbar)) * (b * b.transpose());
        d.F3 = Gamma * a * b;
        return d;
    }

    double a_nu = conjugate_nu(mu).moment(2) / (2 * hbar * hbar);
    double a_hess = hessian_A(mu);
    if (std::abs(a_hess - a_nu) > 1e-6 * std::max(a_nu, 1e-300))
        throw std::runtime_error(
            "diffusion coefficient A: log-Hessian and conjugate-moment forms disagree "
            "(ill-behaved tails or under-resolved table)");
    d.A = a_nu;
    d.B = mean_feedback_slope(mu, f) / (2 * hbar);
    d.C = expectation_mu(mu, [&](double q) { return f(q) * f(q); }) / (2 * hbar * hbar);
    d.F = Gamma * expectation_mu(mu, [&](double q) { return f(q); });
    return d;
}

LindbladSpec caldeira_leggett_lindblads(double Gamma, double alpha, double sigma) {
    if (!(sigma > 0) || !(alpha > 0) || Gamma < 0)
        throw std::invalid_argument("Caldeira-Leggett spec requires sigma > 0, alpha > 0");
    return {Gamma, alpha, sigma};
}

MatrixXcd position_matrix(const Grid& g) {
    const Fourier& fr = fourier_for(g);
    MatrixXcd X(g.n, g.n);
    VectorXcd e = VectorXcd::Zero(g.n), xk(g.n), col(g.n);
    for (int l = 0; l < g.n; ++l) {
        e[l] = 1.0;
        fr.to_position(g, e, xk);
        for (int k = 0; k < g.n; ++k)
            xk[k] *= g.x(k);
        fr.to_momentum(g, xk, col);
        X.col(l) = col;
        e[l] = 0.0;
    }
    return 0.5 * (X + X.adjoint().eval()); // hermitian to rounding
}

namespace {

struct ClOps {
    MatrixXcd X;
    VectorXd p;
};

ClOps build_cl_ops(const Grid& g) {
    return {position_matrix(g), g.pv};
}

// -Gamma (A [p,[p,rho]] + iB [x,{p,rho}] + C [x,[x,rho]]).  Identically equal
// (in grid matrices, no canonical commutator needed) to (Gamma/2) D[ell] plus
// the Hamiltonian correction (Gamma alpha/4){x,p} on the full anticommutator
// (i.e. Gamma alpha/2 on the symmetrized product), so complete positivity is
// inherited from the Lindblad form.
MatrixXcd cl_rhs(const ClOps& o, const LindbladSpec& lb, double hbar,
                 const MatrixXcd& rho) {
    const double A = 1.0 / (8 * lb.sigma * lb.sigma);
    const double B = lb.alpha / (2 * hbar);
    const double C = lb.alpha * lb.alpha * lb.sigma * lb.sigma / (2 * hbar * hbar);
    const cplx i(0, 1);

    MatrixXcd cxr = o.X * rho - rho * o.X; // [x, rho]
    MatrixXcd d = -(lb.rate * C) * (o.X * cxr - cxr * o.X);

    MatrixXcd apr = o.p.asDiagonal() * rho;
    apr += rho * o.p.asDiagonal(); // {p, rho}
    d -= (i * lb.rate * B) * (o.X * apr - apr * o.X);

    MatrixXcd cpr = o.p.asDiagonal() * rho;
    cpr -= rho * o.p.asDiagonal(); // [p, rho]
    d -= (lb.rate * A) *
         (MatrixXcd(o.p.asDiagonal() * cpr) - MatrixXcd(cpr * o.p.asDiagonal()));
    return d;
}

// explicit-Euler stability proxy: |ell|^2 on the grid corners plus the
// correction term scale
double cl_bound(const Grid& g, const LindbladSpec& lb) {
    const double cx = lb.alpha * std::sqrt(2.0) * lb.sigma / g.hbar;
    const double cp = 1.0 / (std::sqrt(2.0) * lb.sigma);
    double n = cx * g.x_max() * cx * g.x_max() + cp * g.p_max * cp * g.p_max;
    return n + lb.alpha * g.x_max() * g.p_max / g.hbar;
}

} // namespace

MatrixXcd cl_dissipator(const LindbladSpec& lb, const GridState& s) {
    return cl_rhs(build_cl_ops(s.grid), lb, s.grid.hbar, s.rho);
}

EvolutionResult evolve_CL(const Hamiltonian& h, const LindbladSpec& lb,
                          const GridState& rho0, double t_final, double dt,
                          int record_every, int snapshot_every) {
    if (!(t_final > 0) || !(dt > 0))
        throw std::invalid_argument("t_final and dt must be positive");
    if (dt * lb.rate > 0.1 * (1 + 1e-12))
        throw std::invalid_argument("dt*Gamma exceeds 0.1: dissipator step too coarse");
    const Grid& g = rho0.grid;
    double emax = h.kinetic_diag(g).maxCoeff();
    VectorXd v = h.potential_diag(g);
    if (v.size() > 0)
        emax += v.cwiseAbs().maxCoeff();
    if (dt * emax > 0.1 * g.hbar * (1 + 1e-12))
        throw std::invalid_argument(
            "dt does not resolve the Hamiltonian spectrum (dt*E_max > 0.1 hbar)");
    if (lb.rate > 0 && dt * lb.rate * cl_bound(g, lb) > 0.5 * (1 + 1e-12))
        throw std::invalid_argument(
            "dt unstable for the quadratic dissipator on this grid");
    if (record_every < 1)
        throw std::invalid_argument("record_every must be >= 1");

    const long steps = std::max<long>(1, (long)std::ceil(t_final / dt - 1e-12));
    dt = t_final / (double)steps;
    Propagator half(g, h, dt / 2);
    ClOps ops;
    if (lb.rate > 0)
        ops = build_cl_ops(g);

    GridState cur = rho0;
    EvolutionResult out;
    std::vector<double> times, energies, snap_times;
    auto record = [&](long k) {
        times.push_back(k * dt);
        out.moments.push_back(MomentState::from_state(cur));
        energies.push_back(energy(cur, h));
    };
    record(0);
    for (long k = 1; k <= steps; ++k) {
        half.step(cur);
        if (lb.rate > 0)
            cur.rho += dt * cl_rhs(ops, lb, g.hbar, cur.rho);
        half.step(cur);
        if (k % record_every == 0 || k == steps)
            record(k);
        if (snapshot_every > 0 && (k % snapshot_every == 0 || k == steps)) {
            out.snapshots.push_back(cur);
            snap_times.push_back(k * dt);
        }
    }
    out.times = Eigen::Map<VectorXd>(times.data(), (long)times.size());
    out.energy = Eigen::Map<VectorXd>(energies.data(), (long)energies.size());
    if (!snap_times.empty())
        out.snapshot_times = Eigen::Map<VectorXd>(snap_times.data(), (long)snap_times.size());
    return out;
}

DiffusionComparison compare_full_vs_diffusion(const Hamiltonian& h,
                                              const ChannelSpec& spec,
                                              const GridState& rho0, double t_final,
                                              int n_samples) {
    spec.validate();
    if (!spec.mu.is_gaussian() || !spec.feedback.is_linear() || spec.dims != 1)
        throw std::invalid_argument("comparator requires 1D Gaussian mu with linear feedback");
    if (spec.mu.bias.size() > 0 && std::abs(spec.mu.bias[0]) > 1e-14)
        throw std::invalid_argument("comparator requires unbiased mu");
    const Grid& g = rho0.grid;
    const double hbar = g.hbar;

    // matched coefficients, never re-fit
    DiffusionCoefficients d = diffusion_coefficients(spec.mu, spec.feedback, spec.rate);
    LindbladSpec lb = caldeira_leggett_lindblads(spec.rate, 2 * hbar * d.B,
                                                 1.0 / std::sqrt(8 * d.A));

    double emax = h.kinetic_diag(g).maxCoeff();
    VectorXd v = h.potential_diag(g);
    if (v.size() > 0)
        emax += v.cwiseAbs().maxCoeff();
    double dt = std::min({0.1 / std::max(spec.rate, 1e-300), 0.1 * hbar / emax,
                          0.45 / std::max(spec.rate * cl_bound(g, lb), 1e-300),
                          t_final / (4.0 * n_samples)});
    long steps = std::max<long>(1, (long)std::ceil(t_final / dt - 1e-12));
    dt = t_final / (double)steps;
    int every = std::max<long>(1, steps / n_samples);

    auto full = evolve_master(h, spec, rho0, t_final, dt, every, every);
    auto diff = evolve_CL(h, lb, rho0, t_final, dt, every, every);

    DiffusionComparison cmp;
    long ns = full.times.size();
    if (diff.times.size() != ns || full.snapshots.size() != diff.snapshots.size())
        throw std::logic_error("comparator sampling mismatch");
    cmp.times = full.times;
    cmp.trace_dist.resize(ns);
    cmp.d_xx.resize(ns);
    cmp.d_xp.resize(ns);
    cmp.d_pp.resize(ns);
    cmp.trace_dist[0] = 0;
    for (long s = 0; s < ns; ++s) {
        const Moments1D& a = full.moments[s].m1;
        const Moments1D& b = diff.moments[s].m1;
        cmp.d_xx[s] = std::abs(a.xx - b.xx);
        cmp.d_xp[s] = std::abs(a.xp - b.xp);
        cmp.d_pp[s] = std::abs(a.pp - b.pp);
        if (s > 0) {
            // relative Frobenius error of the second-moment matrix in the
            // coordinates x/sqrt(<xx>), p/sqrt(<pp>) of the full solution
            // (its normalized matrix has unit diagonal)
            double exx = cmp.d_xx[s] / a.xx, epp = cmp.d_pp[s] / a.pp;
            double exp_ = cmp.d_xp[s] / std::sqrt(a.xx * a.pp);
            double corr = a.xp / std::sqrt(a.xx * a.pp);
            double rel = std::sqrt((exx * exx + 2 * exp_ * exp_ + epp * epp) /
                                   (2 + 2 * corr * corr));
            cmp.max_rel_second = std::max(cmp.max_rel_second, rel);
        }
    }
    // both solvers snapshot on the same step lattice; snapshot s corresponds
    // to recorded sample s+1 (t=0 is recorded but not snapshot)
    for (std::size_t s = 0; s < full.snapshots.size(); ++s) {
        long idx = std::min<long>((long)s + 1, ns - 1);
        cmp.trace_dist[idx] = trace_distance(full.snapshots[s], diff.snapshots[s]);
    }
    return cmp;
}

} // namespace friction
