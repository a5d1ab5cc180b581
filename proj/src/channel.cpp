#include "friction/channel.hpp"

#include "friction/kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

namespace friction {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct QGrid {
    double lo, dq;
    int n;
    double q(int i) const { return lo + (i + 0.5) * dq; } // midpoint rule
};

// uniform outcome grid: state momentum range extended by the support of mu
QGrid outcome_grid(const ChannelSpec& spec, const Grid& g) {
    double mlo, mhi, mstep;
    spec.mu.support(0, mlo, mhi, mstep);
    QGrid q;
    q.dq = g.dp;
    q.lo = -g.p_max + mlo;
    q.n = static_cast<int>(std::ceil((g.p_max + mhi - q.lo) / q.dq));
    return q;
}

// contiguous index band where mu(p_j - q) is non-negligible
void mu_band(const ChannelSpec& spec, const Grid& g, double q, int& r0, int& r1) {
    double mlo, mhi, mstep;
    spec.mu.support(0, mlo, mhi, mstep);
    const double plo = q + mlo, phi = q + mhi;
    r0 = std::max(0, static_cast<int>(std::ceil((plo + g.p_max) / g.dp - 0.5)));
    r1 = std::min(g.n, static_cast<int>(std::floor((phi + g.p_max) / g.dp - 0.5)) + 1);
    if (r1 < r0)
        r1 = r0;
}

} // namespace

void ChannelSpec::validate() const {
    if (rate < 0)
        throw std::invalid_argument("ChannelSpec: rate must be >= 0");
    if (dims != 1 && dims != 3)
        throw std::invalid_argument("ChannelSpec: dims must be 1 or 3");
    if (mu.dims != dims)
        throw std::invalid_argument("ChannelSpec: mu dimensionality mismatch");
}

double ChannelSpec::alpha() const {
    if (!feedback.is_linear())
        throw std::invalid_argument("ChannelSpec: operation requires linear feedback");
    return feedback.coeff;
}

WavefunctionState apply_L(const ChannelSpec& spec, double q, const WavefunctionState& s) {
    spec.validate();
    const Grid& g = s.grid;
    WavefunctionState out{g, VectorXcd(g.n)};
    for (int j = 0; j < g.n; ++j)
        out.psi[j] = spec.mu.sqrt_density(g.p(j) - q) * s.psi[j];
    const double fq = spec.feedback(q);
    if (fq != 0.0) {
        if (std::abs(fq) >= 2.0 * g.p_max)
            throw std::runtime_error("apply_L: feedback kick exceeds the momentum grid");
        const Fourier& ft = fourier_for(g);
        VectorXcd x(g.n);
        ft.to_position(g, out.psi, x);
        for (int k = 0; k < g.n; ++k)
            x[k] *= std::polar(1.0, -fq * g.x(k) / g.hbar);
        ft.to_momentum(g, x, out.psi);
    }
    return out;
}

GridState apply_L(const ChannelSpec& spec, double q, const GridState& s) {
    spec.validate();
    const Grid& g = s.grid;
    GridState out{g, MatrixXcd(g.n, g.n)};
    VectorXd m(g.n);
    for (int j = 0; j < g.n; ++j)
        m[j] = spec.mu.sqrt_density(g.p(j) - q);
    const auto n = static_cast<std::size_t>(g.n);
    kernels::ops().outer_scale(out.rho.data(), s.rho.data(), m.data(), m.data(), n, 0, n,
                               0, n);
    const double fq = spec.feedback(q);
    if (fq != 0.0) {
        if (std::abs(fq) >= 2.0 * g.p_max)
            throw std::runtime_error("apply_L: feedback kick exceeds the momentum grid");
        const Fourier& ft = fourier_for(g);
        VectorXcd u(g.n);
        for (int k = 0; k < g.n; ++k)
            u[k] = std::polar(1.0, -fq * g.x(k) / g.hbar);
        ft.rho_to_position(g, out.rho, out.rho);
        kernels::ops().outer_phase_mult(out.rho.data(), u.data(), n);
        ft.rho_to_momentum(g, out.rho, out.rho);
    }
    return out;
}

namespace {

// Exact channel for Gaussian mu with linear feedback, alpha != 0:
//   Lambda[rho](p,p') = e^{-(p-p')^2/8s^2} (dp/(|a| sqrt(2 pi) s)) *
//       sum_t exp(-((p+p')/2 - c t dp - qb)^2/2s^2) rho(p + t dp, p' + t dp)
// with c = (1-a)/a (the substitution u = a q turns the outcome integral into
// a correlation along the matrix diagonals).
GridState channel_gaussian_L(const ChannelSpec& spec, const GridState& s) {
    const Grid& g = s.grid;
    const int n = g.n;
    const double a = spec.feedback.coeff;
    const double sg = spec.mu.sigma[0], qb = spec.mu.bias[0];
    GridState out{g, MatrixXcd::Zero(n, n)};

    if (a == 0.0) { // pure measurement: elementwise momentum decoherence
        for (int l = 0; l < n; ++l)
            for (int j = 0; j < n; ++j) {
                const double d = g.p(j) - g.p(l);
                out.rho(j, l) = std::exp(-d * d / (8 * sg * sg)) * s.rho(j, l);
            }
        return out;
    }

    const double c = (1.0 - a) / a;
    const double h = n / 2.0;
    const double wpref = g.dp / (std::abs(a) * std::sqrt(two_pi) * sg);

    // per-antidiagonal weight tables over the shift t
    std::vector<int> t0(2 * n - 1), t1(2 * n - 1);
    std::vector<std::vector<double>> w(2 * n - 1);
    for (int sidx = 0; sidx <= 2 * n - 2; ++sidx) {
        const double center = (sidx / 2.0 - h) * g.dp - qb;
        int lo = 1 - n, hi = n - 1;
        if (c != 0.0) {
            const double tc = center / (c * g.dp);
            const double ht = 8.0 * sg / (std::abs(c) * g.dp);
            lo = std::max(lo, static_cast<int>(std::floor(tc - ht)));
            hi = std::min(hi, static_cast<int>(std::ceil(tc + ht)));
        }
        t0[sidx] = lo;
        t1[sidx] = hi;
        if (hi >= lo) {
            w[sidx].resize(hi - lo + 1);
            for (int t = lo; t <= hi; ++t) {
                const double v = center - c * t * g.dp;
                w[sidx][t - lo] = wpref * std::exp(-v * v / (2 * sg * sg));
            }
        }
    }

    std::vector<double> pref(n);
    for (int d = 0; d < n; ++d) {
        const double dd = d * g.dp;
        pref[d] = std::exp(-dd * dd / (8 * sg * sg));
    }

    const cplx* rho = s.rho.data();
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j) {
            const int sidx = j + l;
            const int lo = std::max(t0[sidx], -std::min(j, l));
            const int hi = std::min(t1[sidx], n - 1 - std::max(j, l));
            if (lo > hi)
                continue;
            const double* ws = w[sidx].data() + (lo - t0[sidx]);
            const cplx* rp = rho + (l + lo) * n + (j + lo);
            cplx acc = 0;
            for (int t = 0; t <= hi - lo; ++t)
                acc += ws[t] * rp[t * (n + 1)];
            out.rho(j, l) = pref[std::abs(j - l)] * acc;
        }
    return out;
}

// General quadrature path: accumulate U(q) (M rho M)_x U(q)^dagger in the
// position basis, one back-transform at the end. O(n_q (b + n)) FFTs.
GridState channel_generic(const ChannelSpec& spec, const GridState& s) {
    const Grid& g = s.grid;
    const int n = g.n;
    const auto un = static_cast<std::size_t>(n);
    const Fourier& ft = fourier_for(g);
    const auto& k = kernels::ops();
    const QGrid qg = outcome_grid(spec, g);

    MatrixXcd acc = MatrixXcd::Zero(n, n);
    MatrixXcd G(n, n);
    VectorXd m(n);
    VectorXcd u(n);
    for (int i = 0; i < qg.n; ++i) {
        const double q = qg.q(i);
        int r0, r1;
        mu_band(spec, g, q, r0, r1);
        if (r1 <= r0)
            continue;
        double mmax = 0;
        for (int j = r0; j < r1; ++j) {
            m[j] = spec.mu.sqrt_density(g.p(j) - q);
            mmax = std::max(mmax, m[j]);
        }
        if (mmax * mmax < 1e-14)
            continue;
        G.setZero();
        k.outer_scale(G.data(), s.rho.data(), m.data(), m.data(), un, r0, r1, r0, r1);
        ft.cols_to_position(g, G, r0, r1);
        ft.rows_to_position(g, G);
        const double fq = spec.feedback(q);
        for (int kk = 0; kk < n; ++kk)
            u[kk] = std::polar(1.0, -fq * g.x(kk) / g.hbar);
        k.phase_mac(acc.data(), G.data(), u.data(), qg.dq, un);
    }
    GridState out{g, MatrixXcd(n, n)};
    ft.rho_to_momentum(g, acc, out.rho);
    return out;
}

} // namespace

namespace {

// the diagonal-convolution kernel of the fast path must be resolved by the
// shift lattice; alpha near zero (|c| large) falls back to the quadrature
bool fast_path_ok(const ChannelSpec& spec, const Grid& g) {
    if (!spec.mu.is_gaussian() || !spec.feedback.is_linear())
        return false;
    const double a = spec.feedback.coeff;
    if (a == 0.0 || a == 1.0)
        return true;
    const double c = std::abs((1.0 - a) / a);
    return spec.mu.sigma[0] / (c * g.dp) >= 2.0;
}

} // namespace

GridState apply_channel(const ChannelSpec& spec, const GridState& s) {
    spec.validate();
    if (spec.dims != 1)
        throw std::invalid_argument("apply_channel: grid operations are 1D only");
    GridState out = fast_path_ok(spec, s.grid) ? channel_gaussian_L(spec, s)
                                               : channel_generic(spec, s);
    const double tin = std::real(s.trace()), tout = std::real(out.trace());
    if (std::abs(tout - tin) > 1e-7 * std::max(1.0, std::abs(tin)))
        throw std::runtime_error(
            "apply_channel: trace not preserved (outcome coverage or state support "
            "insufficient); trace error = " +
            std::to_string(tout - tin));
    return out;
}

double sample_outcome(const ChannelSpec& spec, const WavefunctionState& s,
                      std::mt19937_64& rng) {
    spec.validate();
    const Grid& g = s.grid;
    const QGrid qg = outcome_grid(spec, g);
    VectorXd w2(g.n);
    for (int j = 0; j < g.n; ++j)
        w2[j] = std::norm(s.psi[j]) * g.dp;
    // the outcome grid is dp-aligned, so mu(p_j - q_i) is Toeplitz in j - i
    const double base = g.p(0) - qg.q(0);
    VectorXd kv(g.n + qg.n - 1);
    for (int m = -(qg.n - 1); m < g.n; ++m)
        kv[m + qg.n - 1] = spec.mu.density(base + m * g.dp);
    VectorXd prob(qg.n);
    for (int i = 0; i < qg.n; ++i) {
        double p = 0;
        for (int j = 0; j < g.n; ++j)
            p += kv[j - i + qg.n - 1] * w2[j];
        prob[i] = p;
    }
    const double total = prob.sum();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double target = uni(rng) * total;
    double cum = 0;
    for (int i = 0; i < qg.n; ++i) {
        if (cum + prob[i] >= target) {
            const double frac = prob[i] > 0 ? (target - cum) / prob[i] : 0.5;
            return qg.lo + (i + frac) * qg.dq;
        }
        cum += prob[i];
    }
    return qg.q(qg.n - 1);
}

// ---- squeeze: band-limited resampling by the Dirichlet kernel ----

namespace {

// Dir(t) = (1/n) sum_k exp(2 pi i t (k - n/2)/n); delta on integers mod n
cplx dirichlet(double t, int n) {
    const double r = std::remainder(t, static_cast<double>(n));
    if (std::abs(r) < 1e-12)
        return 1.0;
    const double st = std::sin(std::numbers::pi * t);
    const double sn = std::sin(std::numbers::pi * t / n);
    return (st / (n * sn)) * std::polar(1.0, -std::numbers::pi * t / n);
}

// resampling matrix for psi'(p_j) = |s|^(-1/2) psi(p_j / s), s = 1 - alpha
const MatrixXcd& squeeze_matrix(const Grid& g, double alpha) {
    static std::mutex mu;
    static std::map<std::pair<int, double>, std::unique_ptr<MatrixXcd>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{g.n, alpha}];
    if (!slot) {
        const int n = g.n;
        const double s = 1.0 - alpha;
        const double h = n / 2.0;
        auto m = std::make_unique<MatrixXcd>(n, n);
        const double amp = 1.0 / std::sqrt(std::abs(s));
        for (int j = 0; j < n; ++j) {
            const double target = (j - h) / s + h; // fractional source index
            if (target < 0.0 || target > n - 1.0) {
                // outside the fundamental domain the state is zero, not its
                // periodic image
                m->row(j).setZero();
                continue;
            }
            for (int jp = 0; jp < n; ++jp)
                (*m)(j, jp) = amp * dirichlet(target - jp, n);
        }
        slot = std::move(m);
    }
    return *slot;
}

} // namespace

WavefunctionState squeeze(double alpha, const WavefunctionState& s) {
    if (alpha == 1.0)
        throw std::invalid_argument("squeeze: alpha = 1 is singular");
    WavefunctionState out{s.grid, squeeze_matrix(s.grid, alpha) * s.psi};
    const double n0 = s.norm(), n1 = out.norm();
    if (std::abs(n1 - n0) > 1e-8 * std::max(1.0, n0))
        throw std::runtime_error("squeeze: rescaled support exceeds the grid (norm loss)");
    return out;
}

GridState squeeze(double alpha, const GridState& s) {
    if (alpha == 1.0)
        throw std::invalid_argument("squeeze: alpha = 1 is singular");
    const MatrixXcd& R = squeeze_matrix(s.grid, alpha);
    GridState out{s.grid, R * s.rho * R.adjoint()};
    const double t0 = std::real(s.trace()), t1 = std::real(out.trace());
    if (std::abs(t1 - t0) > 1e-8 * std::max(1.0, std::abs(t0)))
        throw std::runtime_error("squeeze: rescaled support exceeds the grid (trace loss)");
    return out;
}

// ---- K representation ----
//
// Pushing the squeeze through the displacement operators analytically gives,
// with s = 1 - alpha, root = sqrt_nu_general, xb = (x + x')/2, delta = x - x':
//
//   Lambda_K[rho]_x(x,x') =
//     int dw root(a*delta/2 - w) conj(root(-a*delta/2 - w))
//            rho_x(xb + w + s*delta/2, xb + w - s*delta/2)
//
// (substitute u = alpha*y, then w = u - alpha*xb in the y-integral of
// K(y) rho K(y)^dagger). The pre-squeeze intermediate, whose momentum support
// is 1/|s| times wider than the result, never appears on the grid; the
// formula is regular for every alpha > 0 including alpha = 1 (s = 0, sharp
// position measurement: only the position diagonal of rho enters). The
// alpha > 1 parity flip is the sign of s in the contracted separation.

namespace {

void require_K_valid(const ChannelSpec& spec) {
    if (spec.alpha() <= 0)
        throw std::invalid_argument(
            "K representation: undefined for alpha <= 0 (no position-displacement form)");
}

// largest displacement where the envelope root is non-negligible
double envelope_cut(const MeasurementDistribution& mu) {
    if (mu.is_gaussian())
        return 5.5 * mu.hbar / mu.sigma[0]; // |root|^2 below 1e-26 of peak
    DisplacementDistribution nu = conjugate_nu(mu);
    const double peak = nu.ws.maxCoeff();
    double cut = std::max(std::abs(nu.ys[0]), nu.ys[nu.ys.size() - 1]);
    for (Eigen::Index j = nu.ys.size() / 2; j < nu.ys.size(); ++j)
        if (nu.ws[j] < 1e-26 * peak) {
            cut = nu.ys[j];
            break;
        }
    return cut;
}

fftw_plan backward_plan(int len) {
    static std::mutex mu;
    static std::map<int, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(len);
    if (it == cache.end()) {
        VectorXcd tmp(len);
        fftw_plan p = fftw_plan_dft_1d(len, reinterpret_cast<fftw_complex*>(tmp.data()),
                                       reinterpret_cast<fftw_complex*>(tmp.data()),
                                       FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        it = cache.emplace(len, p).first;
    }
    return it->second;
}

// Contracted diagonals of rho_x straight from the momentum matrix:
//   C[s_idx] = rho_x(z + tau/2, z - tau/2), z = (s_idx/2 - n/2) dx
//            = dp^2/(2 pi hbar) sum_D T[D] e^{i pi D (s_idx - n)/n},
//   T[D] = sum_j rho[j, j-D] u_j u_{j-D}, u_j = e^{i p_j tau/2 hbar},
// evaluated for all 2n half-lattice centers by one size-2n FFT.
struct ContractedDiagonals {
    const Grid& g;
    const MatrixXcd& rho;

    VectorXcd eval(double tau) const {
        const int n = g.n;
        VectorXcd u(n);
        for (int j = 0; j < n; ++j)
            u[j] = std::polar(1.0, g.p(j) * tau / (2.0 * g.hbar));
        VectorXcd a = VectorXcd::Zero(2 * n);
        for (int D = -(n - 1); D <= n - 1; ++D) {
            const int j0 = std::max(0, D), j1 = n - 1 + std::min(0, D);
            cplx t = 0;
            for (int j = j0; j <= j1; ++j)
                t += rho(j, j - D) * u[j] * u[j - D];
            a[(D + 2 * n) % (2 * n)] = t;
        }
        fftw_execute_dft(backward_plan(2 * n),
                         reinterpret_cast<fftw_complex*>(a.data()),
                         reinterpret_cast<fftw_complex*>(a.data()));
        const double kap = g.dp * g.dp / (two_pi * g.hbar);
        VectorXcd C(2 * n);
        for (int si = 0; si < 2 * n; ++si)
            C[si] = kap * a[((si - n) % (2 * n) + 2 * n) % (2 * n)];
        return C;
    }
};

} // namespace

GridState apply_channel_via_K(const ChannelSpec& spec, const GridState& s) {
    spec.validate();
    require_K_valid(spec);
    const Grid& g = s.grid;
    const int n = g.n;
    const double a = spec.alpha(), sc = 1.0 - a;

    const double rms = std::sqrt(conjugate_nu(spec.mu).moment(2));
    if (rms < 1.2 * g.dx)
        throw std::runtime_error(
            "apply_channel_via_K: position grid too coarse for the back-action width");
    const double zcut = envelope_cut(spec.mu);
    const int dmax =
        std::min(n - 1, static_cast<int>(std::ceil(2.0 * zcut / (a * g.dx))));

    ContractedDiagonals cd{g, s.rho};
    MatrixXcd outx = MatrixXcd::Zero(n, n);
    std::vector<cplx> kap;
    for (int d = -dmax; d <= dmax; ++d) {
        const double delta = d * g.dx;
        const double off = a * std::abs(delta) / 2.0;
        const int tlo = static_cast<int>(std::ceil((-zcut + off) / g.dx));
        const int thi = static_cast<int>(std::floor((zcut - off) / g.dx));
        if (tlo > thi)
            continue;
        kap.assign(thi - tlo + 1, 0.0);
        for (int t = tlo; t <= thi; ++t) {
            const double w = t * g.dx;
            kap[t - tlo] = g.dx * sqrt_nu_general(spec.mu, a * delta / 2.0 - w) *
                           std::conj(sqrt_nu_general(spec.mu, -a * delta / 2.0 - w));
        }
        const VectorXcd C = cd.eval(sc * delta);
        for (int kk = std::max(0, d); kk <= n - 1 + std::min(0, d); ++kk) {
            const int base = 2 * kk - d;
            cplx acc = 0;
            for (int t = tlo; t <= thi; ++t) {
                const int si = base + 2 * t;
                if (si >= 0 && si <= 2 * n - 2)
                    acc += kap[t - tlo] * C[si];
            }
            outx(kk, kk - d) = acc;
        }
    }

    GridState out{g, MatrixXcd(n, n)};
    fourier_for(g).rho_to_momentum(g, outx, out.rho);
    const double tin = std::real(s.trace()), tout = std::real(out.trace());
    if (std::abs(tout - tin) > 1e-6 * std::max(1.0, std::abs(tin)))
        throw std::runtime_error("apply_channel_via_K: trace not preserved; error = " +
                                 std::to_string(tout - tin));
    return out;
}

// Same algebra per operator: K(y) psi (x) = sqrt(a) root(a(x-y)) psi_x(sx + ay),
// with psi_x evaluated band-limited (exact on the periodic grid).
WavefunctionState apply_K(const ChannelSpec& spec, double y, const WavefunctionState& s) {
    spec.validate();
    require_K_valid(spec);
    const Grid& g = s.grid;
    const int n = g.n;
    const double a = spec.alpha(), sc = 1.0 - a;
    const double hb = g.hbar;
    VectorXcd outx(n);
    const double amp = std::sqrt(a) * g.dp / std::sqrt(two_pi * hb);
    for (int kk = 0; kk < n; ++kk) {
        const double X = sc * g.x(kk) + a * y;
        cplx cur = std::polar(1.0, g.p(0) * X / hb);
        const cplx step = std::polar(1.0, g.dp * X / hb);
        cplx val = 0;
        for (int j = 0; j < n; ++j) {
            val += s.psi[j] * cur;
            cur *= step;
        }
        outx[kk] = amp * sqrt_nu_general(spec.mu, a * (g.x(kk) - y)) * val;
    }
    WavefunctionState out{g, VectorXcd(n)};
    fourier_for(g).to_momentum(g, outx, out.psi);
    return out;
}

GridState apply_K(const ChannelSpec& spec, double y, const GridState& s) {
    spec.validate();
    require_K_valid(spec);
    const MatrixXcd K = kraus_K_matrix(spec, y, s.grid);
    return {s.grid, K * s.rho * K.adjoint()};
}

MatrixXcd kraus_K_matrix(const ChannelSpec& spec, double y, const Grid& g) {
    spec.validate();
    require_K_valid(spec);
    const int n = g.n;
    MatrixXcd K(n, n);
    WavefunctionState e{g, VectorXcd::Zero(n)};
    for (int col = 0; col < n; ++col) {
        e.psi[col] = 1.0;
        K.col(col) = apply_K(spec, y, e).psi;
        e.psi[col] = 0.0;
    }
    return K;
}

// ---- adjoint moment map ----

MomentState adjoint_moment_map(const ChannelSpec& spec, const MomentState& m,
                               bool second_moments) {
    spec.validate();
    MomentState out = m;
    if (m.dims == 1) {
        const double y2 = conjugate_nu(spec.mu).moment(2);
        if (spec.feedback.is_linear()) {
            const double a = spec.feedback.coeff;
            const double qb = dist_moment(spec.mu, 1);
            const double q2 = dist_moment(spec.mu, 2);
            out.m1.x = m.m1.x;
            out.m1.p = (1 - a) * m.m1.p + a * qb;
            out.m1.xx = m.m1.xx + y2;
            out.m1.xp = (1 - a) * m.m1.xp + 2 * a * qb * m.m1.x;
            out.m1.pp = (1 - a) * (1 - a) * m.m1.pp + 2 * a * (1 - a) * qb * m.m1.p +
                        a * a * q2;
            return out;
        }
        if (second_moments)
            throw std::invalid_argument(
                "adjoint_moment_map: second moments close only for linear feedback");
        // first moments, closed at the mean: p' = p - E_mu(u)[f(p - u)]
        const double pm = m.m1.p;
        const auto& f = spec.feedback;
        out.m1.p = pm - expectation_mu(spec.mu, [&](double u) { return f(pm - u); });
        out.m1.x = m.m1.x;
        return out;
    }
    // 3D, linear feedback, factorizing Gaussian mu
    const double a = spec.alpha();
    if (!spec.mu.is_gaussian())
        throw std::invalid_argument("adjoint_moment_map: 3D requires Gaussian mu");
    Eigen::Vector3d b = spec.mu.bias, s2;
    for (int ax = 0; ax < 3; ++ax)
        s2[ax] = spec.mu.sigma[ax] * spec.mu.sigma[ax];
    Eigen::Matrix3d Snu = Eigen::Matrix3d::Zero(), Smu = Eigen::Matrix3d::Zero();
    for (int ax = 0; ax < 3; ++ax) {
        Snu(ax, ax) = spec.mu.hbar * spec.mu.hbar / (4 * s2[ax]);
        Smu(ax, ax) = s2[ax];
    }
    out.x3 = m.x3;
    out.p3 = (1 - a) * m.p3 + a * b;
    out.Rxx = m.Rxx + Snu;
    out.Rxp = (1 - a) * m.Rxp + a * m.x3 * b.transpose();
    out.Rpp = (1 - a) * (1 - a) * m.Rpp +
              a * (1 - a) * (m.p3 * b.transpose() + b * m.p3.transpose()) +
              a * a * (Smu + b * b.transpose());
    return out;
}

VectorXd adjoint_p_diag(const ChannelSpec& spec, const Grid& g) {
    spec.validate();
    VectorXd d(g.n);
    const auto& f = spec.feedback;
    // Central feedback laws are smooth except at q = 0 (|q| kink, sign jump),
    // i.e. at u = p in the integrand mu(u) f(p - u). The plain equispaced rule
    // loses its fast decay-driven convergence across that point, so integrate
    // the two smooth pieces separately; midpoint nodes never touch u = p,
    // where f's value (0) differs from its one-sided limits.
    double lo, hi, step;
    spec.mu.support(0, lo, hi, step);
    const double h = step / 256;
    auto seg = [&](double a, double b, double p) {
        if (!(b - a > 0)) return 0.0;
        const int n = (int)std::ceil((b - a) / h);
        double acc = 0;
        for (int i = 0; i < n; ++i) {
            const double u = a + (b - a) * (i + 0.5) / n;
            acc += spec.mu.density(u) * f(p - u);
        }
        return acc * (b - a) / n;
    };
    for (int j = 0; j < g.n; ++j) {
        const double p = g.p(j);
        const double split = std::min(std::max(p, lo), hi);
        d[j] = p - seg(lo, split, p) - seg(split, hi, p);
    }
    return d;
}

double completeness_error(const ChannelSpec& spec, const Grid& g) {
    spec.validate();
    const QGrid qg = outcome_grid(spec, g);
    double worst = 0;
    for (int j = 0; j < g.n; ++j) {
        double tot = 0;
        for (int i = 0; i < qg.n; ++i)
            tot += spec.mu.density(g.p(j) - qg.q(i));
        worst = std::max(worst, std::abs(tot * qg.dq - 1.0));
    }
    return worst;
}

void MomentState::check_uncertainty(double hbar) const {
    if (dims != 1)
        return;
    const double det = var_x() * var_p() - cov_xp() * cov_xp();
    if (det < 0.25 * hbar * hbar * (1.0 - 1e-9) - 1e-9)
        throw std::runtime_error("MomentState: uncertainty relation violated");
}

} // namespace friction
