#include "friction/distributions.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace friction {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void check_axis(const MeasurementDistribution& mu, int axis) {
    if (axis < 0 || axis >= mu.dims)
        throw std::invalid_argument("distribution: axis out of range");
}

double table_spacing(const VectorXd& q) {
    if (q.size() < 4)
        throw std::invalid_argument("tabulated distribution: need at least 4 points");
    const double dq = q[1] - q[0];
    if (dq <= 0)
        throw std::invalid_argument("tabulated distribution: grid must be increasing");
    for (Eigen::Index j = 1; j + 1 < q.size(); ++j)
        if (std::abs(q[j + 1] - q[j] - dq) > 1e-9 * std::abs(dq))
            throw std::invalid_argument("tabulated distribution: grid must be uniform");
    return dq;
}

} // namespace

MeasurementDistribution MeasurementDistribution::gaussian1d(double sigma, double bias,
                                                            double hbar) {
    if (sigma <= 0 || hbar <= 0)
        throw std::invalid_argument("gaussian1d: sigma and hbar must be positive");
    MeasurementDistribution m;
    m.kind = Kind::Gaussian;
    m.dims = 1;
    m.hbar = hbar;
    m.sigma = VectorXd::Constant(1, sigma);
    m.bias = VectorXd::Constant(1, bias);
    return m;
}

MeasurementDistribution MeasurementDistribution::gaussian3d(const VectorXd& sigma,
                                                            const VectorXd& bias,
                                                            double hbar) {
    if (sigma.size() != 3 || bias.size() != 3)
        throw std::invalid_argument("gaussian3d: need 3 sigmas and 3 biases");
    if (sigma.minCoeff() <= 0 || hbar <= 0)
        throw std::invalid_argument("gaussian3d: sigmas and hbar must be positive");
    MeasurementDistribution m;
    m.kind = Kind::Gaussian;
    m.dims = 3;
    m.hbar = hbar;
    m.sigma = sigma;
    m.bias = bias;
    return m;
}

MeasurementDistribution MeasurementDistribution::tabulated(VectorXd q, VectorXd w,
                                                           double hbar) {
    if (q.size() != w.size())
        throw std::invalid_argument("tabulated distribution: size mismatch");
    const double dq = table_spacing(q);
    if (w.minCoeff() < 0)
        throw std::invalid_argument("tabulated distribution: density must be non-negative");
    const double wmax = w.maxCoeff();
    if (wmax <= 0)
        throw std::invalid_argument("tabulated distribution: density is identically zero");
    // asymptotic decay requirement at the table edges
    auto edge_bad = [&](Eigen::Index j) {
        return q[j] * q[j] * w[j] >= 1e-10 * wmax;
    };
    if (edge_bad(0) || edge_bad(q.size() - 1))
        throw std::invalid_argument(
            "tabulated distribution: q^2 mu(q) does not decay at the table edges");
    w /= w.sum() * dq;
    MeasurementDistribution m;
    m.kind = Kind::Tabulated;
    m.dims = 1;
    m.hbar = hbar;
    m.qs = std::move(q);
    m.ws = std::move(w);
    return m;
}

double MeasurementDistribution::density(double q, int axis) const {
    check_axis(*this, axis);
    if (kind == Kind::Gaussian) {
        const double s = sigma[axis], b = bias[axis];
        const double u = (q - b) / s;
        return std::exp(-0.5 * u * u) / (s * std::sqrt(two_pi));
    }
    if (q < qs[0] || q > qs[qs.size() - 1])
        return 0.0;
    const double dq = qs[1] - qs[0];
    const double t = (q - qs[0]) / dq;
    const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(t), qs.size() - 2);
    const double frac = t - static_cast<double>(j);
    return ws[j] * (1 - frac) + ws[j + 1] * frac;
}

double MeasurementDistribution::sqrt_density(double q, int axis) const {
    return std::sqrt(density(q, axis));
}

void MeasurementDistribution::support(int axis, double& lo, double& hi, double& step) const {
    check_axis(*this, axis);
    if (kind == Kind::Gaussian) {
        const double s = sigma[axis], b = bias[axis];
        lo = b - 9.0 * s;
        hi = b + 9.0 * s;
        step = s / 16.0;
    } else {
        lo = qs[0];
        hi = qs[qs.size() - 1];
        step = qs[1] - qs[0];
    }
}

double expectation_mu(const MeasurementDistribution& mu,
                      const std::function<double(double)>& g, int axis) {
    check_axis(mu, axis);
    if (mu.kind == MeasurementDistribution::Kind::Tabulated) {
        const double dq = mu.qs[1] - mu.qs[0];
        double acc = 0;
        for (Eigen::Index j = 0; j < mu.qs.size(); ++j)
            acc += mu.ws[j] * g(mu.qs[j]);
        return acc * dq;
    }
    double lo, hi, step;
    mu.support(axis, lo, hi, step);
    const int n = static_cast<int>(std::ceil((hi - lo) / step));
    const double h = (hi - lo) / n;
    double acc = 0;
    for (int j = 0; j < n; ++j) { // midpoint rule
        const double q = lo + (j + 0.5) * h;
        acc += mu.density(q, axis) * g(q);
    }
    return acc * h;
}

double dist_moment(const MeasurementDistribution& mu, int order, int axis) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("dist_moment: order must be 1 or 2");
    if (mu.is_gaussian()) {
        check_axis(mu, axis);
        const double s = mu.sigma[axis], b = mu.bias[axis];
        return order == 1 ? b : s * s + b * b;
    }
    return expectation_mu(
        mu, [order](double q) { return order == 1 ? q : q * q; }, axis);
}

double DisplacementDistribution::moment(int order) const {
    const double dy = ys[1] - ys[0];
    double acc = 0;
    for (Eigen::Index j = 0; j < ys.size(); ++j)
        acc += ws[j] * std::pow(ys[j], order);
    return acc * dy;
}

DisplacementDistribution conjugate_nu(const MeasurementDistribution& mu, int axis) {
    check_axis(mu, axis);
    DisplacementDistribution nu;
    nu.hbar = mu.hbar;
    if (mu.is_gaussian()) {
        // |FT of the Gaussian root|^2: centered Gaussian, variance hbar^2/4 sigma^2
        const double sy = mu.hbar / (2.0 * mu.sigma[axis]);
        const int n = 513;
        nu.ys.resize(n);
        nu.ws.resize(n);
        const double lo = -9.0 * sy, h = 18.0 * sy / (n - 1);
        for (int j = 0; j < n; ++j) {
            nu.ys[j] = lo + j * h;
            const double u = nu.ys[j] / sy;
            nu.ws[j] = std::exp(-0.5 * u * u) / (sy * std::sqrt(two_pi));
        }
        return nu;
    }
    const Eigen::Index n = mu.qs.size();
    const double dq = mu.qs[1] - mu.qs[0];
    const double dy = two_pi * mu.hbar / (static_cast<double>(n) * dq);
    nu.ys.resize(n);
    nu.ws.resize(n);
    const double h = static_cast<double>(n) / 2.0;
    double total = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        nu.ys[k] = (static_cast<double>(k) - h) * dy;
        cplx s = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += std::polar(std::sqrt(mu.ws[j]), mu.qs[j] * nu.ys[k] / mu.hbar);
        s *= dq / std::sqrt(two_pi * mu.hbar);
        nu.ws[k] = std::norm(s);
        total += nu.ws[k];
    }
    total *= dy;
    // Discrete Parseval fixes total = 1 on the conjugate grid, so coarseness
    // shows up as aliasing instead: nu failing to decay inside the window.
    const double edge = (nu.ws[0] + nu.ws[1] + nu.ws[n - 2] + nu.ws[n - 1]) * dy;
    if (std::abs(total - 1.0) > 1e-6 || edge > 1e-6)
        throw std::runtime_error(
            "conjugate_nu: table too coarse to resolve sqrt(mu); conjugate density "
            "norm is unreliable (no decay within the Plancherel window)");
    nu.ws /= total;
    return nu;
}

cplx sqrt_nu_general(const MeasurementDistribution& mu, double z, int axis) {
    check_axis(mu, axis);
    if (mu.is_gaussian()) {
        const double s = mu.sigma[axis], b = mu.bias[axis], hb = mu.hbar;
        const double amp = std::pow(2.0 * s * s / (std::numbers::pi * hb * hb), 0.25);
        return amp * std::exp(-s * s * z * z / (hb * hb)) * std::polar(1.0, b * z / hb);
    }
    const double dq = mu.qs[1] - mu.qs[0];
    cplx acc = 0;
    for (Eigen::Index j = 0; j < mu.qs.size(); ++j)
        acc += std::polar(std::sqrt(mu.ws[j]), mu.qs[j] * z / mu.hbar);
    return acc * dq / std::sqrt(two_pi * mu.hbar);
}

double uncertainty_product(const MeasurementDistribution& mu, int axis) {
    const double m1 = dist_moment(mu, 1, axis);
    const double var = dist_moment(mu, 2, axis) - m1 * m1;
    const double y2 = conjugate_nu(mu, axis).moment(2);
    const double product = var * y2;
    const double bound = 0.25 * mu.hbar * mu.hbar;
    if (product < bound * (1.0 - 1e-6))
        throw std::runtime_error("uncertainty_product: bound hbar^2/4 violated");
    return product;
}

FeedbackLaw FeedbackLaw::constant(double alpha_c) {
    if (alpha_c < 0)
        throw std::invalid_argument("FeedbackLaw: constant magnitude must be >= 0");
    return {Kind::Constant, alpha_c, {}, {}};
}

FeedbackLaw FeedbackLaw::quadratic(double alpha_s) {
    if (alpha_s < 0)
        throw std::invalid_argument("FeedbackLaw: quadratic coefficient must be >= 0");
    return {Kind::Quadratic, alpha_s, {}, {}};
}

FeedbackLaw FeedbackLaw::tabulated(VectorXd q, VectorXd f) {
    if (q.size() != f.size() || q.size() < 2)
        throw std::invalid_argument("FeedbackLaw: bad table");
    if (q[0] < 0)
        throw std::invalid_argument("FeedbackLaw: table covers magnitudes q >= 0");
    if (f.minCoeff() < 0)
        throw std::invalid_argument("FeedbackLaw: central form needs f >= 0");
    table_spacing(q);
    return {Kind::Tabulated, 0.0, std::move(q), std::move(f)};
}

double FeedbackLaw::operator()(double q) const {
    switch (kind) {
    case Kind::Linear:
        return coeff * q;
    case Kind::Constant:
        return q > 0 ? coeff : (q < 0 ? -coeff : 0.0);
    case Kind::Quadratic:
        return coeff * q * std::abs(q);
    case Kind::Tabulated: {
        const double a = std::abs(q);
        const double dq = qs[1] - qs[0];
        double mag;
        if (a <= qs[0])
            mag = fs[0];
        else if (a >= qs[qs.size() - 1])
            mag = fs[fs.size() - 1];
        else {
            const double t = (a - qs[0]) / dq;
            const Eigen::Index j = static_cast<Eigen::Index>(t);
            const double frac = t - static_cast<double>(j);
            mag = fs[j] * (1 - frac) + fs[j + 1] * frac;
        }
        return q >= 0 ? mag : -mag;
    }
    }
    throw std::logic_error("FeedbackLaw: unknown kind");
}

MeasurementDistribution read_distribution_csv(const std::string& path, double hbar) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_distribution_csv: cannot open " + path);
    std::vector<double> q, w;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ss(line);
        double a, b;
        char comma;
        if (ss >> a >> comma >> b)
            q.push_back(a), w.push_back(b);
    }
    VectorXd qv = Eigen::Map<VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
    VectorXd wv = Eigen::Map<VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return MeasurementDistribution::tabulated(std::move(qv), std::move(wv), hbar);
}

void write_distribution_csv(const std::string& path, const MeasurementDistribution& mu) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_distribution_csv: cannot open " + path);
    out << "# q, mu\n";
    out.precision(17);
    if (mu.is_gaussian()) {
        double lo, hi, step;
        mu.support(0, lo, hi, step);
        for (double q = lo; q <= hi; q += step)
            out << q << ", " << mu.density(q) << "\n";
        return;
    }
    for (Eigen::Index j = 0; j < mu.qs.size(); ++j)
        out << mu.qs[j] << ", " << mu.ws[j] << "\n";
}

} // namespace friction
