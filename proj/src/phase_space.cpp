#include "friction/phase_space.hpp"

#include <cmath>
#include <numbers>

namespace friction {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace

// chi(P_a, X_b) = e^{-i P_a X_b/2 hbar} sum_j dp e^{-i p_j X_b/hbar} rho[j, j+a],
// the transformed a-th shifted diagonal. Shifts with |offset| >= n/2 are not
// representable and the corresponding matrix corners are dropped; they carry
// no weight for states resolved by the grid.
CharFunction char_function(const GridState& s) {
    const Grid& g = s.grid;
    const Fourier& ft = fourier_for(g);
    const int n = g.n, h = g.n / 2;
    const double root = std::sqrt(two_pi * g.hbar);
    CharFunction c{g, MatrixXcd::Zero(n, n)};
    VectorXcd d(n), t(n);
    for (int a = 0; a < n; ++a) {
        const int off = a - h;
        for (int j = 0; j < n; ++j) {
            const int l = j + off;
            d[j] = (l >= 0 && l < n) ? std::conj(s.rho(j, l)) : cplx(0);
        }
        ft.to_position(g, d, t);
        const double Pa = g.p(a);
        for (int b = 0; b < n; ++b)
            c.chi(a, b) = root * std::conj(t[b]) *
                          std::polar(1.0, -Pa * g.x(b) / (2.0 * g.hbar));
    }
    return c;
}

GridState state_from_char(const CharFunction& c) {
    const Grid& g = c.grid;
    const Fourier& ft = fourier_for(g);
    const int n = g.n, h = g.n / 2;
    const double root = std::sqrt(two_pi * g.hbar);
    GridState s{g, MatrixXcd::Zero(n, n)};
    VectorXcd u(n), d(n);
    for (int a = 0; a < n; ++a) {
        const double Pa = g.p(a);
        for (int b = 0; b < n; ++b)
            u[b] = std::conj(c.chi(a, b) *
                             std::polar(1.0, Pa * g.x(b) / (2.0 * g.hbar))) / root;
        ft.to_momentum(g, u, d);
        const int off = a - h;
        for (int j = 0; j < n; ++j) {
            const int l = j + off;
            if (l >= 0 && l < n)
                s.rho(j, l) = std::conj(d[j]);
        }
    }
    return s;
}

// Double Fourier transform of the characteristic function,
// W(p,x) = (1/(2 pi hbar)^2) int dP dX chi(P,X) exp(-i(Px - Xp)/hbar).
// Going through chi keeps full x-resolution (direct even-shift sums of rho
// alias with period n dx/2).
MatrixXd wigner(const GridState& s) {
    const Grid& g = s.grid;
    const Fourier& ft = fourier_for(g);
    const int n = g.n;
    CharFunction c = char_function(s);
    // inner pass over X: t(a,j) = sum_b dx chi(a,b) exp(+i x_b p_j / hbar)
    MatrixXcd t(n, n);
    VectorXcd row(n), out(n);
    for (int a = 0; a < n; ++a) {
        row = c.chi.row(a).conjugate();
        ft.to_momentum(g, row, out);
        t.row(a) = std::sqrt(two_pi * g.hbar) * out.conjugate();
    }
    // outer pass over P: w(k,j) = sum_a dp t(a,j) exp(-i P_a x_k / hbar)
    MatrixXd W(n, n); // rows p, cols x
    for (int j = 0; j < n; ++j) {
        row = t.col(j).conjugate();
        ft.to_position(g, row, out);
        for (int k = 0; k < n; ++k)
            W(j, k) = std::real(std::conj(out[k])) * std::sqrt(two_pi * g.hbar);
    }
    return W / (two_pi * g.hbar * two_pi * g.hbar);
}

} // namespace friction
