#pragma once
// Uniform momentum grid with its FFT-conjugate position grid.
// States live in the momentum basis; dx*dp = 2*pi*hbar/n exactly.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace friction {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct Grid {
    int n = 0;
    double p_max = 0;
    double hbar = 1.0;
    double dp = 0;
    double dx = 0;
    VectorXd pv; // p_j = (j - n/2) dp
    VectorXd xv; // x_k = (k - n/2) dx

    double p(int j) const { return pv[j]; }
    double x(int k) const { return xv[k]; }
    double x_max() const { return -xv[0]; }
    bool same_as(const Grid& o) const {
        return n == o.n && p_max == o.p_max && hbar == o.hbar;
    }
};

// Warns (stderr) for non-power-of-two n; throws for invalid sizes.
Grid make_grid(int n_points, double p_max, double hbar = 1.0);

// Centered unitary-with-measure Fourier transforms between the momentum and
// position representations of a grid. Plans are cached per grid size.
class Fourier {
public:
    explicit Fourier(int n);
    ~Fourier();
    Fourier(const Fourier&) = delete;
    Fourier& operator=(const Fourier&) = delete;

    // psi_x[k] = dp/sqrt(2 pi hbar) * sum_j exp(i p_j x_k / hbar) psi_p[j]
    void to_position(const Grid& g, const VectorXcd& in, VectorXcd& out) const;
    void to_momentum(const Grid& g, const VectorXcd& in, VectorXcd& out) const;

    // rho_x = F rho_p F^dagger and back (kernel convention carries the measure)
    void rho_to_position(const Grid& g, const MatrixXcd& in, MatrixXcd& out) const;
    void rho_to_momentum(const Grid& g, const MatrixXcd& in, MatrixXcd& out) const;

    // In-place column/row passes used by the channel hot path. "cols" applies
    // the transform over the row index of every column in [c0,c1).
    void cols_to_position(const Grid& g, MatrixXcd& m, int c0, int c1) const;
    void rows_to_position(const Grid& g, MatrixXcd& m) const;
    void cols_to_momentum(const Grid& g, MatrixXcd& m, int c0, int c1) const;
    void rows_to_momentum(const Grid& g, MatrixXcd& m) const;

    int size() const { return n_; }

private:
    int n_;
    void* plan_fwd_;      // FFTW_FORWARD, contiguous
    void* plan_bwd_;      // FFTW_BACKWARD, contiguous
    void* plan_fwd_row_;  // stride n
    void* plan_bwd_row_;
    VectorXcd pre_;   // exp(-2 pi i h j / n), h = n/2
    VectorXcd post_;  // exp(+2 pi i (h^2 - h k) / n)
};

const Fourier& fourier_for(const Grid& g);

} // namespace friction
