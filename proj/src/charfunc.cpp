#include "friction/charfunc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace friction {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require_1d(const MeasurementDistribution& mu) {
    if (mu.dims != 1)
        throw std::invalid_argument("characteristic-function ops are 1D only");
}

struct QuadNodes {
    VectorXd q;  // quadrature nodes
    VectorXd gw; // sqrt(mu(q - P) mu(q)) times the trapezoid weight
};

// Nodes of the A quadrature at momentum offset P, with the step refined so
// the e^{i alpha q X / hbar} phase stays resolved for |X| up to xcap.
QuadNodes a_nodes(const MeasurementDistribution& mu, double alpha, double P,
                  double xcap) {
    double lo, hi, step;
    mu.support(0, lo, hi, step);
    const double a = std::max(lo, lo + P), b = std::min(hi, hi + P);
    QuadNodes nd;
    if (!(b > a)) return nd; // disjoint supports: A = 0
    if (xcap > 0 && alpha > 0)
        step = std::min(step, two_pi * mu.hbar / (alpha * xcap) / 12.0);
    const int n = std::max(3, (int)std::ceil((b - a) / step) + 1);
    const double dq = (b - a) / (n - 1);
    nd.q.resize(n);
    nd.gw.resize(n);
    for (int i = 0; i < n; ++i) {
        nd.q[i] = a + i * dq;
        const double w = (i == 0 || i == n - 1) ? 0.5 * dq : dq;
        nd.gw[i] = w * mu.sqrt_density(nd.q[i] - P) * mu.sqrt_density(nd.q[i]);
    }
    return nd;
}

cplx a_eval(const QuadNodes& nd, double alpha, double X, double hbar) {
    cplx acc(0, 0);
    const double k = alpha * X / hbar;
    for (Eigen::Index i = 0; i < nd.q.size(); ++i)
        acc += nd.gw[i] * std::polar(1.0, k * nd.q[i]);
    return acc;
}

} // namespace

cplx A_factor(const MeasurementDistribution& mu, double alpha, double P, double X) {
    require_1d(mu);
    return a_eval(a_nodes(mu, alpha, P, std::abs(X)), alpha, X, mu.hbar);
}

CharFunction channel_on_char(double alpha, const MeasurementDistribution& mu,
                             const CharFunction& chi) {
    require_1d(mu);
    if (!(alpha > 0 && alpha < 2))
        throw std::invalid_argument("channel_on_char needs alpha in (0, 2)");
    const Grid& g = chi.grid;
    if (std::abs(mu.hbar - g.hbar) > 1e-12 * g.hbar)
        throw std::invalid_argument("mu and grid disagree on hbar");
    const Fourier& ft = fourier_for(g);
    const int n = g.n;
    const double hb = g.hbar;
    const double root = std::sqrt(two_pi * hb);

    // recover the shifted-diagonal coefficients row by row: stripping the
    // e^{-iPX/2 hbar} phase leaves phi(P, X) = dp sum_j e^{-i p_j X/hbar} d_j
    MatrixXcd D(n, n); // D(j, a) = d_j of row a
    VectorXcd u(n), d(n);
    for (int a = 0; a < n; ++a) {
        const double Pa = g.p(a);
        for (int b = 0; b < n; ++b)
            u[b] = std::conj(chi.chi(a, b) *
                             std::polar(1.0, Pa * g.x(b) / (2.0 * hb))) / root;
        ft.to_momentum(g, u, d);
        D.col(a) = d.conjugate();
    }
    const double dmax = D.cwiseAbs().maxCoeff();
    for (int a = 0; a < n; ++a)
        if (std::abs(D(0, a)) > 1e-9 * dmax)
            throw std::domain_error(
                "characteristic function carries weight at the unpaired -p_max "
                "Nyquist frequency; the rescaling interpolant is out of band");

    // chi'(P, X) = A(P, -X) e^{i(2 alpha - 1) P X/2 hbar} phi(P, (1-alpha) X)
    CharFunction out{g, MatrixXcd(n, n)};
    const double s = 1.0 - alpha;
    for (int a = 0; a < n; ++a) {
        const double Pa = g.p(a);
        QuadNodes nd = a_nodes(mu, alpha, Pa, g.x_max());
        for (int b = 0; b < n; ++b) {
            const double Xb = g.x(b);
            cplx phi(0, 0);
            const double k = -s * Xb / hb;
            for (int j = 0; j < n; ++j)
                phi += D(j, a) * std::polar(1.0, k * g.p(j));
            out.chi(a, b) = a_eval(nd, alpha, -Xb, hb) *
                            std::polar(g.dp, (2 * alpha - 1) * Pa * Xb / (2 * hb)) *
                            phi;
        }
    }
    return out;
}

double gibbs_residual(double T, double mass, const MeasurementDistribution& mu,
                      double alpha) {
    require_1d(mu);
    if (!(alpha > 0 && alpha < 2))
        throw std::invalid_argument("gibbs_residual needs alpha in (0, 2)");
    if (!(T > 0) || !(mass > 0))
        throw std::invalid_argument("gibbs_residual needs T > 0 and mass > 0");
    const double hb = mu.hbar;
    const double rate = mass * T * alpha * (2 - alpha) / (2 * hb * hb);
    const double m1 = dist_moment(mu, 1);
    const double var = dist_moment(mu, 2) - m1 * m1;
    // sample out to where both profiles have decayed below ~1e-13
    const double x_hi = std::max(std::sqrt(60.0 * hb * hb / (alpha * alpha * var)),
                                 std::sqrt(30.0 / rate));
    const QuadNodes nd = a_nodes(mu, alpha, 0.0, x_hi);
    const int samples = 161;
    double res = 0;
    for (int i = 0; i < samples; ++i) {
        const double X = x_hi * i / (samples - 1);
        const cplx a = a_eval(nd, alpha, X, hb);
        res = std::max(res, std::abs(a - std::exp(-rate * X * X)));
    }
    return res;
}

CharIteration iterate_channel_char(double alpha, const MeasurementDistribution& mu,
                                   const CharFunction& chi0, int n) {
    require_1d(mu);
    if (!(alpha > 0 && alpha < 2))
        throw std::invalid_argument("iterate_channel_char needs alpha in (0, 2)");
    if (n < 0)
        throw std::invalid_argument("iterate_channel_char needs n >= 0");
    const Grid& g = chi0.grid;
    const int h = g.n / 2;
    auto off_sup = [&](const CharFunction& c) {
        double s = 0;
        for (int a = 0; a < g.n; ++a) {
            if (a == h) continue;
            s = std::max(s, c.chi.row(a).cwiseAbs().maxCoeff());
        }
        return s;
    };

    CharIteration out;
    out.chi = chi0;
    out.off_axis_sup.push_back(off_sup(chi0));
    for (int a = 0; a < g.n; ++a) {
        if (a == h) continue;
        out.decay_bound =
            std::max(out.decay_bound, std::abs(A_factor(mu, alpha, g.p(a), 0.0)));
    }

    for (int k = 0; k < n; ++k) {
        out.chi = channel_on_char(alpha, mu, out.chi);
        const double s = off_sup(out.chi);
        const double prev = out.off_axis_sup.back();
        // small slack: the sampled sup understates the continuous one
        if (s > out.decay_bound * prev * (1 + 1e-6) + 1e-12 * out.off_axis_sup[0])
            throw std::logic_error("off-axis decay bound violated");
        out.off_axis_sup.push_back(s);
    }
    return out;
}

} // namespace friction
