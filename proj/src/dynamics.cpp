#include "friction/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace friction {

namespace {

// fastest Hamiltonian scale on the grid: edge kinetic energy plus the
// largest potential magnitude
double max_spectrum(const Grid& g, const Hamiltonian& h) {
    double e = h.kinetic_diag(g).maxCoeff();
    VectorXd v = h.potential_diag(g);
    if (v.size() > 0)
        e += v.cwiseAbs().maxCoeff();
    return e;
}

void check_step_size(const Grid& g, const Hamiltonian& h, const ChannelSpec& spec,
                     double dt) {
    if (!(dt > 0))
        throw std::invalid_argument("dt must be positive");
    if (dt * spec.rate > 0.1 * (1 + 1e-12))
        throw std::invalid_argument("dt*Gamma exceeds 0.1: dissipator step too coarse");
    if (dt * max_spectrum(g, h) > 0.1 * g.hbar * (1 + 1e-12))
        throw std::invalid_argument(
            "dt does not resolve the Hamiltonian spectrum (dt*E_max > 0.1 hbar)");
}

// record steps: every record_every-th step plus the final one
std::vector<long> record_steps(long steps, int record_every) {
    if (record_every < 1)
        throw std::invalid_argument("record_every must be >= 1");
    std::vector<long> ks;
    for (long k = 0; k <= steps; k += record_every)
        ks.push_back(k);
    if (ks.back() != steps)
        ks.push_back(steps);
    return ks;
}

} // namespace

EvolutionResult evolve_master(const Hamiltonian& h, const ChannelSpec& spec,
                              const GridState& rho0, double t_final, double dt,
                              int record_every, int snapshot_every) {
    spec.validate();
    if (spec.dims != 1)
        throw std::invalid_argument("grid evolution is 1D only");
    if (!(t_final > 0))
        throw std::invalid_argument("t_final must be positive");
    const Grid& g = rho0.grid;
    check_step_size(g, h, spec, dt);
    const long steps = std::max<long>(1, (long)std::ceil(t_final / dt - 1e-12));
    dt = t_final / (double)steps; // never larger than the checked dt

    Propagator half(g, h, dt / 2);
    GridState cur = rho0;

    auto ks = record_steps(steps, record_every);
    EvolutionResult out;
    std::vector<double> times, energies, snap_times;

    auto record = [&](long k) {
        times.push_back(k * dt);
        out.moments.push_back(MomentState::from_state(cur));
        energies.push_back(energy(cur, h));
    };

    std::size_t next = 0;
    record(0);
    ++next;
    for (long k = 1; k <= steps; ++k) {
        half.step(cur);
        if (spec.rate > 0) {
            GridState lam = apply_channel(spec, cur);
            cur.rho += (spec.rate * dt) * (lam.rho - cur.rho);
        }
        half.step(cur);
        if (next < ks.size() && ks[next] == k) {
            record(k);
            ++next;
        }
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

// ---------------------------------------------------------------------------
// Monte Carlo jump unraveling

namespace {

constexpr int kQuant = 6; // x, p, xx, xp, pp, energy
constexpr long kChunk = 64;

void run_trajectory(const Grid& g, const Hamiltonian& h, const ChannelSpec& spec,
                    const WavefunctionState& psi0, double dt, long steps,
                    const std::vector<long>& ks, const Propagator& full,
                    unsigned long long seed, long traj, double* sum, double* sumsq) {
    std::seed_seq ss{(unsigned)(seed & 0xffffffffu), (unsigned)(seed >> 32),
                     (unsigned)traj, 0x9e3779b9u};
    std::mt19937_64 rng(ss);
    std::exponential_distribution<double> waiting(spec.rate > 0 ? spec.rate : 1.0);

    WavefunctionState psi = psi0;
    psi.normalize();
    const double inf = std::numeric_limits<double>::infinity();
    double to_jump = spec.rate > 0 ? waiting(rng) : inf;

    auto accumulate = [&](std::size_t slot) {
        Moments1D m = moments_of(psi);
        double vals[kQuant] = {m.x, m.p, m.xx, m.xp, m.pp, energy(psi, h)};
        for (int q = 0; q < kQuant; ++q) {
            sum[slot * kQuant + q] += vals[q];
            sumsq[slot * kQuant + q] += vals[q] * vals[q];
        }
    };

    std::size_t next = 0;
    accumulate(0);
    ++next;
    for (long k = 1; k <= steps; ++k) {
        double seg = dt;
        bool jumped = false;
        while (spec.rate > 0 && to_jump < seg) {
            if (to_jump > 1e-14 * dt)
                Propagator(g, h, to_jump).step(psi);
            seg -= to_jump;
            double q = sample_outcome(spec, psi, rng);
            psi = apply_L(spec, q, psi);
            psi.normalize();
            to_jump = waiting(rng);
            jumped = true;
        }
        if (!jumped)
            full.step(psi);
        else if (seg > 1e-14 * dt)
            Propagator(g, h, seg).step(psi);
        to_jump -= seg;
        if (next < ks.size() && ks[next] == k) {
            accumulate(next);
            ++next;
        }
    }
}

} // namespace

EvolutionResult unravel(const Hamiltonian& h, const ChannelSpec& spec,
                        const WavefunctionState& psi0, double t_final, double dt,
                        int n_traj, unsigned long long seed, int record_every,
                        int workers) {
    spec.validate();
    if (spec.dims != 1)
        throw std::invalid_argument("grid evolution is 1D only");
    if (n_traj < 1)
        throw std::invalid_argument("n_traj must be >= 1");
    if (!(t_final > 0))
        throw std::invalid_argument("t_final must be positive");
    const Grid& g = psi0.grid;
    check_step_size(g, h, spec, dt);
    const long steps = std::max<long>(1, (long)std::ceil(t_final / dt - 1e-12));
    dt = t_final / (double)steps;
    const auto ks = record_steps(steps, record_every);
    const std::size_t ns = ks.size();

    Propagator full(g, h, dt);

    // Trajectories are accumulated into fixed chunks of kChunk by index, and
    // the chunks combined in order afterwards: bit-identical results for any
    // worker count or scheduling.
    const long nchunks = (n_traj + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> csum(nchunks), csumsq(nchunks);

    std::atomic<long> next_chunk{0};
    auto work = [&]() {
        for (;;) {
            long c = next_chunk.fetch_add(1);
            if (c >= nchunks)
                return;
            csum[c].assign(ns * kQuant, 0.0);
            csumsq[c].assign(ns * kQuant, 0.0);
            long lo = c * kChunk, hi = std::min<long>(n_traj, lo + kChunk);
            for (long traj = lo; traj < hi; ++traj)
                run_trajectory(g, h, spec, psi0, dt, steps, ks, full, seed, traj,
                               csum[c].data(), csumsq[c].data());
        }
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }

    std::vector<double> sum(ns * kQuant, 0.0), sumsq(ns * kQuant, 0.0);
    for (long c = 0; c < nchunks; ++c)
        for (std::size_t i = 0; i < ns * kQuant; ++i) {
            sum[i] += csum[c][i];
            sumsq[i] += csumsq[c][i];
        }

    EvolutionResult out;
    out.times.resize((long)ns);
    out.energy.resize((long)ns);
    out.energy_std_error.resize((long)ns);
    const double n = (double)n_traj;
    auto sem = [&](std::size_t i) {
        if (n_traj < 2)
            return 0.0;
        double mean = sum[i] / n;
        double var = std::max(0.0, (sumsq[i] - n * mean * mean) / (n - 1));
        return std::sqrt(var / n);
    };
    for (std::size_t s = 0; s < ns; ++s) {
        out.times[(long)s] = ks[s] * dt;
        Moments1D m{sum[s * kQuant + 0] / n, sum[s * kQuant + 1] / n,
                    sum[s * kQuant + 2] / n, sum[s * kQuant + 3] / n,
                    sum[s * kQuant + 4] / n};
        out.moments.push_back(MomentState::from_1d(m));
        out.energy[(long)s] = sum[s * kQuant + 5] / n;
        out.std_error.push_back(Moments1D{sem(s * kQuant + 0), sem(s * kQuant + 1),
                                          sem(s * kQuant + 2), sem(s * kQuant + 3),
                                          sem(s * kQuant + 4)});
        out.energy_std_error[(long)s] = sem(s * kQuant + 5);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed moment ODEs

namespace {

struct OdeParams {
    double mass, omega2m; // m omega^2
    double G, a;          // Gamma, alpha
    // 1D
    double qbar = 0, Q = 0, Y = 0; // E_mu[q], E_mu[q^2], E_nu[y^2]
    // 3D
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    Eigen::Matrix3d Qm = Eigen::Matrix3d::Zero(); // E_mu[q q^T]
    Eigen::Matrix3d Ym = Eigen::Matrix3d::Zero(); // E_nu[y y^T]
};

VectorXd deriv_1d(const OdeParams& c, const VectorXd& y) {
    double x = y[0], p = y[1], xx = y[2], xp = y[3], pp = y[4];
    VectorXd d(5);
    d[0] = p / c.mass;
    d[1] = -c.omega2m * x + c.G * c.a * (c.qbar - p);
    d[2] = xp / c.mass + c.G * c.Y;
    d[3] = 2 * pp / c.mass - 2 * c.omega2m * xx + c.G * c.a * (2 * c.qbar * x - xp);
    d[4] = -c.omega2m * xp +
           c.G * (-c.a * (2 - c.a) * pp + 2 * c.a * (1 - c.a) * c.qbar * p +
                  c.a * c.a * c.Q);
    return d;
}

void unpack_3d(const VectorXd& y, Eigen::Vector3d& x, Eigen::Vector3d& p,
               Eigen::Matrix3d& Rxx, Eigen::Matrix3d& Rxp, Eigen::Matrix3d& Rpp) {
    x = y.segment<3>(0);
    p = y.segment<3>(3);
    Rxx = Eigen::Map<const Eigen::Matrix3d>(y.data() + 6);
    Rxp = Eigen::Map<const Eigen::Matrix3d>(y.data() + 15);
    Rpp = Eigen::Map<const Eigen::Matrix3d>(y.data() + 24);
}

VectorXd pack_3d(const Eigen::Vector3d& x, const Eigen::Vector3d& p,
                 const Eigen::Matrix3d& Rxx, const Eigen::Matrix3d& Rxp,
                 const Eigen::Matrix3d& Rpp) {
    VectorXd y(33);
    y.segment<3>(0) = x;
    y.segment<3>(3) = p;
    Eigen::Map<Eigen::Matrix3d>(y.data() + 6) = Rxx;
    Eigen::Map<Eigen::Matrix3d>(y.data() + 15) = Rxp;
    Eigen::Map<Eigen::Matrix3d>(y.data() + 24) = Rpp;
    return y;
}

VectorXd deriv_3d(const OdeParams& c, const VectorXd& y) {
    Eigen::Vector3d x, p;
    Eigen::Matrix3d Rxx, Rxp, Rpp;
    unpack_3d(y, x, p, Rxx, Rxp, Rpp);
    Eigen::Vector3d dx = p / c.mass;
    Eigen::Vector3d dp = -c.omega2m * x + c.G * c.a * (c.b - p);
    Eigen::Matrix3d sym_xp = Rxp + Rxp.transpose();
    Eigen::Matrix3d dRxx = sym_xp / c.mass + c.G * c.Ym;
    Eigen::Matrix3d dRxp = Rpp / c.mass - c.omega2m * Rxx +
                           c.G * c.a * (x * c.b.transpose() - Rxp);
    Eigen::Matrix3d dRpp =
        -c.omega2m * sym_xp +
        c.G * (-c.a * (2 - c.a) * Rpp +
               c.a * (1 - c.a) * (p * c.b.transpose() + c.b * p.transpose()) +
               c.a * c.a * c.Qm);
    return pack_3d(dx, dp, dRxx, dRxp, dRpp);
}

} // namespace

EvolutionResult moment_ode(const Hamiltonian& h, const ChannelSpec& spec,
                           const MomentState& m0, double t_final) {
    spec.validate();
    if (h.potential == Hamiltonian::Potential::Tabulated)
        throw std::invalid_argument("moment system does not close for tabulated potentials");
    if (!(t_final > 0))
        throw std::invalid_argument("t_final must be positive");
    if (m0.dims != spec.dims || m0.dims != spec.mu.dims)
        throw std::invalid_argument("dimension mismatch between moments and channel");

    OdeParams c;
    c.mass = h.mass;
    c.omega2m = h.potential == Hamiltonian::Potential::Harmonic
                    ? h.mass * h.omega * h.omega
                    : 0.0;
    c.G = spec.rate;
    c.a = spec.rate > 0 ? spec.alpha() : 0.0; // alpha() rejects nonlinear feedback
    const bool three_d = m0.dims == 3;
    if (three_d) {
        if (!spec.mu.is_gaussian())
            throw std::invalid_argument("3D moment system requires Gaussian mu");
        c.b = spec.mu.bias.size() == 3 ? Eigen::Vector3d(spec.mu.bias)
                                       : Eigen::Vector3d::Zero();
        for (int k = 0; k < 3; ++k) {
            double s2 = spec.mu.sigma[k] * spec.mu.sigma[k];
            c.Ym(k, k) = spec.mu.hbar * spec.mu.hbar / (4 * s2);
            c.Qm(k, k) = s2;
        }
        c.Qm += c.b * c.b.transpose();
    } else {
        c.qbar = dist_moment(spec.mu, 1);
        c.Q = dist_moment(spec.mu, 2);
        c.Y = conjugate_nu(spec.mu).moment(2);
    }

    double dt = std::numeric_limits<double>::infinity();
    if (c.omega2m > 0)
        dt = std::min(dt, 0.01 / h.omega);
    if (c.G * c.a > 0)
        dt = std::min(dt, 0.01 / (c.G * c.a));
    if (!std::isfinite(dt))
        dt = t_final / 1000;
    const long steps = std::max<long>(1, (long)std::ceil(t_final / dt - 1e-12));
    dt = t_final / (double)steps;

    VectorXd y = three_d ? pack_3d(m0.x3, m0.p3, m0.Rxx, m0.Rxp, m0.Rpp)
                         : (VectorXd(5) << m0.m1.x, m0.m1.p, m0.m1.xx, m0.m1.xp,
                            m0.m1.pp)
                               .finished();
    auto f = [&](const VectorXd& v) { return three_d ? deriv_3d(c, v) : deriv_1d(c, v); };

    EvolutionResult out;
    out.times.resize(steps + 1);
    out.energy.resize(steps + 1);
    auto record = [&](long k) {
        out.times[k] = k * dt;
        MomentState m;
        m.dims = m0.dims;
        if (three_d) {
            unpack_3d(y, m.x3, m.p3, m.Rxx, m.Rxp, m.Rpp);
            out.energy[k] = m.Rpp.trace() / (2 * c.mass) + 0.5 * c.omega2m * m.Rxx.trace();
        } else {
            m.m1 = {y[0], y[1], y[2], y[3], y[4]};
            out.energy[k] = y[4] / (2 * c.mass) + 0.5 * c.omega2m * y[2];
        }
        out.moments.push_back(m);
    };

    record(0);
    for (long k = 1; k <= steps; ++k) {
        VectorXd k1 = f(y);
        VectorXd k2 = f(y + 0.5 * dt * k1);
        VectorXd k3 = f(y + 0.5 * dt * k2);
        VectorXd k4 = f(y + dt * k3);
        y += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        record(k);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Harmonic-oscillator moment generator: stability and equilibrium

Eigen::Matrix3d system_matrix(double omega, double Gamma, double alpha) {
    if (!(omega > 0) || Gamma < 0)
        throw std::invalid_argument("system_matrix requires omega > 0, Gamma >= 0");
    Eigen::Matrix3d S;
    S << 0, omega, 0,                              //
        -2 * omega, -Gamma * alpha, 2 * omega,     //
        0, -omega, -Gamma * alpha * (2 - alpha);
    return S;
}

namespace {

// roots of x^3 + a x^2 + b x + c, closed form; the complex pair (or the
// remaining real pair) comes from deflating by the dominant real root
std::array<cplx, 3> cubic_roots(double a, double b, double c) {
    const double shift = a / 3;
    const double p = b - a * a / 3;
    const double q = 2 * a * a * a / 27 - a * b / 3 + c;
    const double scale = std::max({std::abs(p), std::cbrt(q * q), 1e-300});
    const double disc = 0.25 * q * q + p * p * p / 27;
    std::array<cplx, 3> r;
    if (disc > 1e-13 * scale * scale * scale) {
        // one real root, cancellation-safe branch
        double s = std::sqrt(disc);
        double u = std::cbrt(-q / 2 - std::copysign(s, q));
        double t1 = u == 0 ? 0.0 : u - p / (3 * u);
        double r1 = t1 - shift;
        double A2 = a + r1, B2 = b + r1 * A2;
        double d2 = A2 * A2 - 4 * B2;
        if (d2 >= 0) {
            double sq = std::sqrt(d2);
            r = {cplx(r1, 0), cplx((-A2 + sq) / 2, 0), cplx((-A2 - sq) / 2, 0)};
        } else {
            double sq = std::sqrt(-d2);
            r = {cplx(r1, 0), cplx(-A2 / 2, sq / 2), cplx(-A2 / 2, -sq / 2)};
        }
    } else if (std::abs(p) < 1e-13 * scale) {
        r = {cplx(-shift, 0), cplx(-shift, 0), cplx(-shift, 0)};
    } else {
        // three real roots
        double m = 2 * std::sqrt(-p / 3);
        double arg = std::clamp(3 * q / (p * m), -1.0, 1.0);
        double theta = std::acos(arg) / 3;
        for (int k = 0; k < 3; ++k)
            r[k] = cplx(m * std::cos(theta - 2 * std::numbers::pi * k / 3) - shift, 0);
    }
    std::sort(r.begin(), r.end(), [](cplx l, cplx rr) {
        if (l.real() != rr.real())
            return l.real() < rr.real();
        return l.imag() < rr.imag();
    });
    return r;
}

} // namespace

std::array<cplx, 3> system_eigenvalues(const Eigen::Matrix3d& S) {
    double tr = S.trace();
    double tr2 = (S * S).trace();
    double a = -tr;
    double b = 0.5 * (tr * tr - tr2);
    double c = -S.determinant();
    return cubic_roots(a, b, c);
}

double max_re_eigenvalue(const Eigen::Matrix3d& S) {
    auto r = system_eigenvalues(S);
    return std::max({r[0].real(), r[1].real(), r[2].real()});
}

StabilityScan stability_scan(double omega, std::pair<double, double> gamma_range,
                             std::pair<double, double> alpha_range, int resolution) {
    if (resolution < 2)
        throw std::invalid_argument("resolution must be >= 2");
    if (gamma_range.first < 0 || gamma_range.second < gamma_range.first ||
        alpha_range.second < alpha_range.first)
        throw std::invalid_argument("invalid scan ranges");
    StabilityScan scan;
    scan.omega = omega;
    scan.gammas = VectorXd::LinSpaced(resolution, gamma_range.first, gamma_range.second);
    scan.alphas = VectorXd::LinSpaced(resolution, alpha_range.first, alpha_range.second);
    scan.max_re.resize(resolution, resolution);
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j)
            scan.max_re(i, j) =
                max_re_eigenvalue(system_matrix(omega, scan.gammas[i], scan.alphas[j]));
    return scan;
}

EquilibriumResult equilibrium_moments(double omega, double Gamma, double alpha,
                                      const MeasurementDistribution& mu, double mass) {
    if (!(omega > 0) || !(Gamma > 0))
        throw std::invalid_argument("equilibrium requires omega > 0, Gamma > 0");
    Eigen::Matrix3d S = system_matrix(omega, Gamma, alpha);
    double det = S.determinant(); // -2 omega^2 Gamma alpha (2 - alpha)
    if (std::abs(det) < 1e-12 * omega * omega * Gamma)
        throw std::runtime_error("singular system matrix: alpha outside (0,2)");

    const double hbar = mu.hbar;
    const double x0sq = hbar / (mass * omega);
    const double p0sq = hbar * mass * omega;
    const double Y = conjugate_nu(mu).moment(2);
    const double Q = dist_moment(mu, 2);
    const double qbar = dist_moment(mu, 1);

    // stationary means: pi = 0, xi driven by the mean feedback force
    const double xi = Gamma * alpha * qbar / (omega * std::sqrt(p0sq));
    const double pi = 0.0;

    Eigen::Vector3d w(Gamma * Y / x0sq,
                      2 * Gamma * alpha * (qbar / std::sqrt(p0sq)) * xi,
                      Gamma * alpha * alpha * Q / p0sq);
    Eigen::Vector3d v = S.partialPivLu().solve(-w);

    EquilibriumResult res;
    res.correlation_closed = -(Gamma / omega) * Y / x0sq;
    res.imbalance_closed = (w[1] - Gamma * alpha * res.correlation_closed) / (2 * omega);
    double v3c = (alpha * alpha * Q / p0sq + Y / x0sq) / (alpha * (2 - alpha));
    double v1c = v3c + res.imbalance_closed;
    res.energy_closed = 0.5 * (v1c + v3c);
    res.energy = 0.5 * (v[0] + v[2]);

    double ref = std::max({std::abs(v1c), std::abs(v3c), 1.0});
    if (std::abs(v[0] - v1c) > 1e-10 * ref ||
        std::abs(v[1] - res.correlation_closed) > 1e-10 * ref ||
        std::abs(v[2] - v3c) > 1e-10 * ref)
        throw std::logic_error("equilibrium closed forms disagree with the linear solve");

    res.moments.dims = 1;
    res.moments.m1 = {xi, pi, v[0], v[1], v[2]};
    return res;
}

} // namespace friction
