#include "friction/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace friction {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

fftw_complex* fc(VectorXcd& v) { return reinterpret_cast<fftw_complex*>(v.data()); }
fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
} // namespace

Grid make_grid(int n_points, double p_max, double hbar) {
    if (n_points < 8)
        throw std::invalid_argument("make_grid: n_points must be >= 8");
    if (p_max <= 0)
        throw std::invalid_argument("make_grid: p_max must be positive");
    if (hbar <= 0)
        throw std::invalid_argument("make_grid: hbar must be positive");
    if (!is_pow2(n_points))
        std::cerr << "make_grid: warning: n_points=" << n_points
                  << " is not a power of two; FFT sizes prefer powers of two\n";
    Grid g;
    g.n = n_points;
    g.p_max = p_max;
    g.hbar = hbar;
    g.dp = 2.0 * p_max / n_points;
    g.dx = two_pi * hbar / (n_points * g.dp);
    g.pv.resize(n_points);
    g.xv.resize(n_points);
    const double h = n_points / 2.0;
    for (int j = 0; j < n_points; ++j) {
        g.pv[j] = (j - h) * g.dp;
        g.xv[j] = (j - h) * g.dx;
    }
    return g;
}

Fourier::Fourier(int n) : n_(n) {
    pre_.resize(n);
    post_.resize(n);
    const double h = n / 2.0;
    for (int j = 0; j < n; ++j) {
        pre_[j] = std::polar(1.0, -two_pi * h * j / n);
        post_[j] = std::polar(1.0, two_pi * (h * h - h * j) / n);
    }
    VectorXcd buf(n);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plan_fwd_ = fftw_plan_dft_1d(n, fc(buf), fc(buf), FFTW_FORWARD, flags);
    plan_bwd_ = fftw_plan_dft_1d(n, fc(buf), fc(buf), FFTW_BACKWARD, flags);
    int nn[1] = {n};
    plan_fwd_row_ = fftw_plan_many_dft(1, nn, 1, fc(buf), nullptr, n, 0, fc(buf), nullptr, n, 0,
                                       FFTW_FORWARD, flags);
    plan_bwd_row_ = fftw_plan_many_dft(1, nn, 1, fc(buf), nullptr, n, 0, fc(buf), nullptr, n, 0,
                                       FFTW_BACKWARD, flags);
}

Fourier::~Fourier() {
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_row_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_row_));
}

void Fourier::to_position(const Grid& g, const VectorXcd& in, VectorXcd& out) const {
    const double s = g.dp / std::sqrt(two_pi * g.hbar);
    out = pre_.cwiseProduct(in);
    fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), fc(out), fc(out));
    out = s * post_.cwiseProduct(out);
}

void Fourier::to_momentum(const Grid& g, const VectorXcd& in, VectorXcd& out) const {
    const double s = g.dx / std::sqrt(two_pi * g.hbar);
    out = post_.conjugate().cwiseProduct(in);
    fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), fc(out), fc(out));
    out = s * pre_.conjugate().cwiseProduct(out);
}

void Fourier::cols_to_position(const Grid& g, MatrixXcd& m, int c0, int c1) const {
    const double s = g.dp / std::sqrt(two_pi * g.hbar);
    for (int c = c0; c < c1; ++c) {
        cplx* col = m.data() + static_cast<std::ptrdiff_t>(c) * n_;
        for (int r = 0; r < n_; ++r)
            col[r] *= pre_[r];
        fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), fc(col), fc(col));
        for (int r = 0; r < n_; ++r)
            col[r] *= s * post_[r];
    }
}

void Fourier::cols_to_momentum(const Grid& g, MatrixXcd& m, int c0, int c1) const {
    const double s = g.dx / std::sqrt(two_pi * g.hbar);
    for (int c = c0; c < c1; ++c) {
        cplx* col = m.data() + static_cast<std::ptrdiff_t>(c) * n_;
        for (int r = 0; r < n_; ++r)
            col[r] *= std::conj(post_[r]);
        fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), fc(col), fc(col));
        for (int r = 0; r < n_; ++r)
            col[r] *= s * std::conj(pre_[r]);
    }
}

// Right-multiplication by F^dagger: row passes use the conjugate transform.
void Fourier::rows_to_position(const Grid& g, MatrixXcd& m) const {
    const double s = g.dp / std::sqrt(two_pi * g.hbar);
    for (int r = 0; r < n_; ++r) {
        cplx* row = m.data() + r;
        for (int c = 0; c < n_; ++c)
            row[static_cast<std::ptrdiff_t>(c) * n_] *= std::conj(pre_[c]);
        fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_row_), fc(row), fc(row));
        for (int c = 0; c < n_; ++c)
            row[static_cast<std::ptrdiff_t>(c) * n_] *= s * std::conj(post_[c]);
    }
}

void Fourier::rows_to_momentum(const Grid& g, MatrixXcd& m) const {
    const double s = g.dx / std::sqrt(two_pi * g.hbar);
    for (int r = 0; r < n_; ++r) {
        cplx* row = m.data() + r;
        for (int c = 0; c < n_; ++c)
            row[static_cast<std::ptrdiff_t>(c) * n_] *= post_[c];
        fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_row_), fc(row), fc(row));
        for (int c = 0; c < n_; ++c)
            row[static_cast<std::ptrdiff_t>(c) * n_] *= s * pre_[c];
    }
}

void Fourier::rho_to_position(const Grid& g, const MatrixXcd& in, MatrixXcd& out) const {
    out = in;
    cols_to_position(g, out, 0, n_);
    rows_to_position(g, out);
}

void Fourier::rho_to_momentum(const Grid& g, const MatrixXcd& in, MatrixXcd& out) const {
    out = in;
    cols_to_momentum(g, out, 0, n_);
    rows_to_momentum(g, out);
}

const Fourier& fourier_for(const Grid& g) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Fourier>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[g.n];
    if (!slot)
        slot = std::make_unique<Fourier>(g.n);
    return *slot;
}

} // namespace friction
