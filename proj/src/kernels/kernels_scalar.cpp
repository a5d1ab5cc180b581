#include "friction/kernels.hpp"

namespace friction::kernels {
namespace {

void outer_scale_scalar(cplx* dst, const cplx* src, const double* a, const double* b,
                        std::size_t n, std::size_t r0, std::size_t r1,
                        std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
        const double bc = b[c];
        cplx* d = dst + c * n;
        const cplx* s = src + c * n;
        for (std::size_t r = r0; r < r1; ++r)
            d[r] = a[r] * bc * s[r];
    }
}

void outer_cscale_scalar(cplx* dst, const cplx* src, const cplx* a, const cplx* b,
                         std::size_t n, std::size_t r0, std::size_t r1,
                         std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
        const cplx bc = std::conj(b[c]);
        cplx* d = dst + c * n;
        const cplx* s = src + c * n;
        for (std::size_t r = r0; r < r1; ++r)
            d[r] = a[r] * bc * s[r];
    }
}

void phase_mac_scalar(cplx* acc, const cplx* h, const cplx* phi, double w, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        const cplx f = w * std::conj(phi[c]);
        cplx* ac = acc + c * n;
        const cplx* hc = h + c * n;
        for (std::size_t r = 0; r < n; ++r)
            ac[r] += f * phi[r] * hc[r];
    }
}

void outer_phase_mult_scalar(cplx* m, const cplx* u, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        const cplx f = std::conj(u[c]);
        cplx* mc = m + c * n;
        for (std::size_t r = 0; r < n; ++r)
            mc[r] *= u[r] * f;
    }
}

void caxpy_scalar(cplx* y, const cplx* x, cplx a, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i)
        y[i] += a * x[i];
}

void chad_mult_scalar(cplx* y, const cplx* x, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i)
        y[i] *= x[i];
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{outer_scale_scalar, outer_cscale_scalar, phase_mac_scalar,
                         outer_phase_mult_scalar, caxpy_scalar, chad_mult_scalar, "scalar"};
    return ops;
}

} // namespace friction::kernels
