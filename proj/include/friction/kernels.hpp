#pragma once
// Runtime-dispatched elementwise kernels for the hot loops of channel
// application and split-step propagation. Matrices are column-major
// (Eigen layout): element (r,c) lives at c*n + r.

#include <complex>
#include <cstddef>

namespace friction::kernels {

using cplx = std::complex<double>;

struct Ops {
    // dst(r,c) = a[r]*b[c]*src(r,c) for r in [r0,r1), c in [c0,c1); a,b real
    void (*outer_scale)(cplx* dst, const cplx* src, const double* a, const double* b,
                        std::size_t n, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1);
    // dst(r,c) = a[r]*conj(b[c])*src(r,c) for r in [r0,r1), c in [c0,c1); a,b complex
    void (*outer_cscale)(cplx* dst, const cplx* src, const cplx* a, const cplx* b,
                         std::size_t n, std::size_t r0, std::size_t r1,
                         std::size_t c0, std::size_t c1);
    // acc(r,c) += w * phi[r]*conj(phi[c]) * h(r,c), w real
    void (*phase_mac)(cplx* acc, const cplx* h, const cplx* phi, double w, std::size_t n);
    // m(r,c) *= u[r]*conj(u[c])
    void (*outer_phase_mult)(cplx* m, const cplx* u, std::size_t n);
    // y[i] += a*x[i]
    void (*caxpy)(cplx* y, const cplx* x, cplx a, std::size_t len);
    // y[i] *= x[i]
    void (*chad_mult)(cplx* y, const cplx* x, std::size_t len);
    const char* name;
};

const Ops& scalar_ops();

// Best variant for this CPU (AVX2 when available, else scalar).
const Ops& ops();

// AVX2 variant, or nullptr when not compiled in / not supported at runtime.
const Ops* avx2_ops();

} // namespace friction::kernels
