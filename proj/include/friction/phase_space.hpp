#pragma once
// Phase-space representations: quantum characteristic function and Wigner
// function on the grid.
//
// chi(P, X) = tr[rho exp(i(P xhat - X phat)/hbar)], sampled at P_a = pv[a],
// X_b = xv[b]. chi(0,0) = tr rho = 1 and |chi| <= 1 everywhere.

#include "friction/state.hpp"

namespace friction {

struct CharFunction {
    Grid grid;
    MatrixXcd chi; // chi(a,b) = chi(P_a, X_b)
};

CharFunction char_function(const GridState& s);

// Inverse of char_function. Exact for every matrix element whose diagonal
// offset is representable on the grid (|row - col| < n/2).
GridState state_from_char(const CharFunction& c);

// W(p_j, x_k) = (1/2 pi hbar) int dq exp(i q x_k/hbar) rho(p_j+q/2, p_j-q/2),
// discretized over even momentum shifts. Rows index p, columns x.
MatrixXd wigner(const GridState& s);

} // namespace friction
