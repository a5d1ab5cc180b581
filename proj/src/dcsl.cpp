#include "friction/dcsl.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace friction {

namespace {

constexpr double sqrt_pi = 1.7724538509055160273;

void require_resolved(const DcslParams& p, const Grid& g) {
    // the Q-Gaussian of B(y) has width hbar/((1+k) r_csl); the momentum
    // lattice must resolve it
    if ((1 + p.k) * p.r_csl * g.dp > 0.5 * p.hbar)
        throw std::invalid_argument(
            "grid too coarse for r_csl: momentum spacing does not resolve the "
            "dCSL Gaussian");
}

} // namespace

void DcslParams::validate() const {
    if (!(gamma > 0) || !(r_csl > 0) || !(m > 0) || !(m0 > 0) || !(hbar > 0) ||
        k < 0 || !std::isfinite(k))
        throw std::invalid_argument("dCSL parameters must be positive (k >= 0)");
}

MappedParams map_params(const DcslParams& p) {
    p.validate();
    MappedParams out;
    out.alpha = 2 * p.k / (1 + p.k);
    out.Gamma = (p.m / p.m0) * (p.m / p.m0) * p.gamma /
                (2 * sqrt_pi * (1 + p.k) * p.r_csl);
    if (p.k == 0) {
        out.frictionless = true;
        out.sigma = std::numeric_limits<double>::infinity();
    } else {
        out.sigma = p.hbar / (2 * std::sqrt(2.0) * p.k * p.r_csl);
    }
    return out;
}

ChannelSpec dcsl_channel_spec(const DcslParams& p) {
    MappedParams m = map_params(p);
    if (m.frictionless)
        throw std::invalid_argument(
            "k = 0 is the frictionless CSL limit: no measurement-feedback channel");
    ChannelSpec spec;
    spec.mu = MeasurementDistribution::gaussian1d(m.sigma, 0.0, p.hbar);
    spec.feedback = FeedbackLaw::linear(m.alpha);
    spec.rate = m.Gamma;
    return spec;
}

MatrixXcd dcsl_B_operator(const DcslParams& p, double y, const Grid& g) {
    p.validate();
    require_resolved(p, g);
    const int n = g.n;
    const double h = p.hbar;
    const double pref = g.dp * p.m / (2 * std::numbers::pi * h);
    MatrixXcd B(n, n);
    // Q-quadrature on the momentum lattice: Q = p_j - p_l, where the shift
    // e^{iQx/hbar} acts exactly; kernel weight dp folded into the prefactor
    for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
            const double Q = g.p(j) - g.p(l);
            const double arg = (1 + p.k) * Q + 2 * p.k * g.p(l);
            B(j, l) = pref * std::exp(-p.r_csl * p.r_csl * arg * arg / (2 * h * h)) *
                      std::polar(1.0, -Q * y / h);
        }
    }
    return B;
}

double verify_identity(const DcslParams& p, const Grid& g) {
    p.validate();
    require_resolved(p, g);
    ChannelSpec spec = dcsl_channel_spec(p); // throws for k = 0
    MappedParams m = map_params(p);
    const double wk = std::sqrt(m.Gamma);
    const double wb = std::sqrt(p.gamma) / p.m0;

    // the kernel column at p_l is centered at (1-alpha) p_l with width
    // hbar/((1+k) r); columns whose support leaks past the momentum boundary
    // wrap around in the grid construction of K and are excluded
    const double width = p.hbar / ((1 + p.k) * p.r_csl);
    int l0 = g.n, l1 = -1;
    for (int l = 0; l < g.n; ++l) {
        if ((1 - m.alpha) * std::abs(g.p(l)) + 8 * width <= g.p_max) {
            l0 = std::min(l0, l);
            l1 = std::max(l1, l);
        }
    }
    if (l1 < l0)
        throw std::invalid_argument(
            "momentum range too small for r_csl: every kernel column leaks past "
            "the grid boundary");

    const double ys[] = {0.0, 1.3, -2.6};
    double dev = 0, scale = 0;
    for (double y : ys) {
        MatrixXcd lhs = wk * kraus_K_matrix(spec, y, g);
        MatrixXcd rhs = wb * dcsl_B_operator(p, y, g);
        auto block = [&](const MatrixXcd& a) {
            return a.middleCols(l0, l1 - l0 + 1).cwiseAbs().maxCoeff();
        };
        dev = std::max(dev, block(lhs - rhs));
        scale = std::max(scale, block(lhs));
    }
    return dev / scale;
}

ScaledParams reference_scaled(const DcslParams& p) {
    DcslParams at0 = p;
    at0.m = p.m0;
    MappedParams m = map_params(at0);
    return {p.m0, m.Gamma, m.alpha, m.sigma, p.k, p.r_csl};
}

std::pair<double, double> k_r_scaling(double k0, double r0, double m0, double m) {
    if (!(m > 0) || !(m0 > 0))
        throw std::invalid_argument("masses must be positive");
    const double kap = m0 / m;
    const double d = 1 + (1 - kap) * k0;
    return {kap * k0 / d, d * r0};
}

ScaledParams scale_params(const ScaledParams& ref, double m) {
    if (!(m > 0))
        throw std::invalid_argument("mass must be positive");
    const double kap = ref.mass / m;
    ScaledParams out;
    out.mass = m;
    out.alpha = kap * ref.alpha;
    if (out.alpha >= 2) {
        std::ostringstream msg;
        msg << "alpha(m) = " << out.alpha
            << " >= 2: friction turns into heating below the critical mass "
            << ref.mass * ref.alpha / 2;
        throw std::domain_error(msg.str());
    }
    out.Gamma = ref.Gamma / (kap * kap);
    out.sigma = ref.sigma / kap;
    std::tie(out.k, out.r_csl) = k_r_scaling(ref.k, ref.r_csl, ref.mass, m);
    return out;
}

ScaledParams com_reduction(const std::vector<double>& masses, const ScaledParams& ref) {
    if (masses.empty())
        throw std::invalid_argument("com_reduction: empty mass list");
    double total = 0, sqrt_rate = 0;
    for (double mn : masses) {
        ScaledParams sn = scale_params(ref, mn);
        // each summand of the center-of-mass Lindblad operator is a mass-m_n
        // copy of the same single-particle form: alpha_n m_n and sigma_n/m_n
        // invariant, sqrt(Gamma_n) proportional to m_n
        if (std::abs(sn.alpha * mn - ref.alpha * ref.mass) >
            1e-12 * ref.alpha * ref.mass)
            throw std::logic_error("com_reduction: alpha*m not conserved");
        if (std::abs(sn.sigma / mn - ref.sigma / ref.mass) >
            1e-12 * ref.sigma / ref.mass)
            throw std::logic_error("com_reduction: mu rescaling broken");
        sqrt_rate += std::sqrt(sn.Gamma);
        total += mn;
    }
    ScaledParams out = scale_params(ref, total);
    if (std::abs(sqrt_rate - std::sqrt(out.Gamma)) > 1e-12 * sqrt_rate)
        throw std::logic_error("com_reduction: sqrt(Gamma) not additive");
    return out;
}

namespace {

// momentum-basis coefficient matrix of a position-diagonal operator
MatrixXcd position_diag_operator(const Grid& g, const VectorXd& diag_x) {
    const Fourier& fr = fourier_for(g);
    const int n = g.n;
    MatrixXcd M(n, n);
    VectorXcd e = VectorXcd::Zero(n), xk(n), col(n);
    for (int l = 0; l < n; ++l) {
        e[l] = 1.0;
        fr.to_position(g, e, xk);
        xk.array() *= diag_x.array();
        fr.to_momentum(g, xk, col);
        M.col(l) = col;
        e[l] = 0.0;
    }
    return M;
}

double largest_sv(const MatrixXcd& m) {
    return Eigen::BDCSVD<MatrixXcd>(m).singularValues()[0];
}

MatrixXcd skew_commutator(const MatrixXcd& op, const MatrixXcd& rho) {
    MatrixXcd a = op - op.adjoint();
    return a * rho - rho * a;
}

} // namespace

BystanderResult bystander_cross_term(const ChannelSpec& spec1, const ChannelSpec& spec2,
                                     const GridState& rho1, double x2) {
    spec1.validate();
    spec2.validate();
    if (!(spec1.alpha() > 0) || !(spec2.alpha() > 0))
        throw std::invalid_argument("bystander cross-term needs alpha > 0 on both particles");
    const Grid& g = rho1.grid;
    const int n = g.n;

    // particle 2: sharp packet, width tied to the grid resolution;
    // t2(y) = <pkt| K2(y) |pkt> regularizes the delta of the trace formula
    WavefunctionState pkt = gaussian_state(g, x2, 0.0, 2 * g.dx);
    VectorXcd t2(n);
    for (int j = 0; j < n; ++j) {
        WavefunctionState im = apply_K(spec2, g.x(j), pkt);
        t2[j] = (pkt.psi.conjugate().cwiseProduct(im.psi)).sum() * g.dp;
    }
    const double tmax = t2.cwiseAbs().maxCoeff();

    BystanderResult out;
    out.trace_real_error = t2.imag().cwiseAbs().maxCoeff() / tmax;
    out.trace_weight = t2.real().sum() * g.dx;

    MatrixXcd k1_at_x2 = kraus_K_matrix(spec1, x2, g);
    const double k1_scale = largest_sv(k1_at_x2);
    out.cross_norm =
        trace_norm(g, skew_commutator(k1_at_x2, rho1.rho)) / (2 * k1_scale);

    MatrixXcd residual = MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        if (std::abs(t2[j]) < 1e-10 * tmax)
            continue;
        MatrixXcd k1 = kraus_K_matrix(spec1, g.x(j), g);
        residual += (t2[j].real() * g.dx) * skew_commutator(k1, rho1.rho);
    }
    out.imbalance =
        trace_norm(g, residual) / (2 * k1_scale * std::abs(out.trace_weight));

    // self-adjoint control family: position-Gaussian Lindblads, same pipeline
    VectorXd cdiag(n);
    for (int j = 0; j < n; ++j) {
        double u = g.x(j) - x2;
        cdiag[j] = std::exp(-u * u / 4.0);
    }
    MatrixXcd ctrl = position_diag_operator(g, cdiag);
    out.control_norm =
        trace_norm(g, skew_commutator(ctrl, rho1.rho)) / (2 * largest_sv(ctrl));
    return out;
}

} // namespace friction
