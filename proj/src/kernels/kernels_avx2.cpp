// AVX2 implementations. This TU is compiled with -mavx2 -mfma; the
// dispatcher only hands these out after a runtime cpuid check.

#include "friction/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace friction::kernels {
namespace {

// two interleaved complex doubles per __m256d
inline __m256d cmul(__m256d a, __m256d b) {
    __m256d b_re = _mm256_movedup_pd(b);
    __m256d b_im = _mm256_permute_pd(b, 0xF);
    __m256d a_sw = _mm256_permute_pd(a, 0x5);
    return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

void outer_scale_avx2(cplx* dst, const cplx* src, const double* a, const double* b,
                      std::size_t n, std::size_t r0, std::size_t r1,
                      std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
        const __m256d bc = _mm256_set1_pd(b[c]);
        double* d = reinterpret_cast<double*>(dst + c * n);
        const double* s = reinterpret_cast<const double*>(src + c * n);
        std::size_t r = r0;
        for (; r + 2 <= r1; r += 2) {
            __m256d av = _mm256_setr_pd(a[r], a[r], a[r + 1], a[r + 1]);
            __m256d sv = _mm256_loadu_pd(s + 2 * r);
            _mm256_storeu_pd(d + 2 * r, _mm256_mul_pd(_mm256_mul_pd(av, bc), sv));
        }
        for (; r < r1; ++r)
            dst[c * n + r] = a[r] * b[c] * src[c * n + r];
    }
}

void outer_cscale_avx2(cplx* dst, const cplx* src, const cplx* a, const cplx* b,
                       std::size_t n, std::size_t r0, std::size_t r1,
                       std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
        const cplx bc = std::conj(b[c]);
        const __m256d bv = _mm256_setr_pd(bc.real(), bc.imag(), bc.real(), bc.imag());
        double* d = reinterpret_cast<double*>(dst + c * n);
        const double* s = reinterpret_cast<const double*>(src + c * n);
        const double* ap = reinterpret_cast<const double*>(a);
        std::size_t r = r0;
        for (; r + 2 <= r1; r += 2) {
            __m256d av = _mm256_loadu_pd(ap + 2 * r);
            __m256d sv = _mm256_loadu_pd(s + 2 * r);
            _mm256_storeu_pd(d + 2 * r, cmul(cmul(sv, av), bv));
        }
        for (; r < r1; ++r)
            dst[c * n + r] = a[r] * bc * src[c * n + r];
    }
}

void phase_mac_avx2(cplx* acc, const cplx* h, const cplx* phi, double w, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        const cplx fc = w * std::conj(phi[c]);
        const __m256d f = _mm256_setr_pd(fc.real(), fc.imag(), fc.real(), fc.imag());
        double* a = reinterpret_cast<double*>(acc + c * n);
        const double* hp = reinterpret_cast<const double*>(h + c * n);
        const double* pp = reinterpret_cast<const double*>(phi);
        std::size_t r = 0;
        for (; r + 2 <= n; r += 2) {
            __m256d ph = _mm256_loadu_pd(pp + 2 * r);
            __m256d hv = _mm256_loadu_pd(hp + 2 * r);
            __m256d t = cmul(cmul(ph, hv), f);
            _mm256_storeu_pd(a + 2 * r, _mm256_add_pd(_mm256_loadu_pd(a + 2 * r), t));
        }
        for (; r < n; ++r)
            acc[c * n + r] += fc * phi[r] * h[c * n + r];
    }
}

void outer_phase_mult_avx2(cplx* m, const cplx* u, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        const cplx fc = std::conj(u[c]);
        const __m256d f = _mm256_setr_pd(fc.real(), fc.imag(), fc.real(), fc.imag());
        double* mp = reinterpret_cast<double*>(m + c * n);
        const double* up = reinterpret_cast<const double*>(u);
        std::size_t r = 0;
        for (; r + 2 <= n; r += 2) {
            __m256d uv = _mm256_loadu_pd(up + 2 * r);
            __m256d mv = _mm256_loadu_pd(mp + 2 * r);
            _mm256_storeu_pd(mp + 2 * r, cmul(cmul(mv, uv), f));
        }
        for (; r < n; ++r)
            m[c * n + r] *= u[r] * fc;
    }
}

void caxpy_avx2(cplx* y, const cplx* x, cplx a, std::size_t len) {
    const __m256d av = _mm256_setr_pd(a.real(), a.imag(), a.real(), a.imag());
    double* yp = reinterpret_cast<double*>(y);
    const double* xp = reinterpret_cast<const double*>(x);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(yv, cmul(xv, av)));
    }
    for (; i < len; ++i)
        y[i] += a * x[i];
}

void chad_mult_avx2(cplx* y, const cplx* x, std::size_t len) {
    double* yp = reinterpret_cast<double*>(y);
    const double* xp = reinterpret_cast<const double*>(x);
    std::size_t i = 0;
    for (; i + 2 <= len; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        _mm256_storeu_pd(yp + 2 * i, cmul(yv, xv));
    }
    for (; i < len; ++i)
        y[i] *= x[i];
}

} // namespace

const Ops* avx2_ops_impl() {
    static const Ops ops{outer_scale_avx2, outer_cscale_avx2, phase_mac_avx2,
                         outer_phase_mult_avx2, caxpy_avx2, chad_mult_avx2, "avx2"};
    return &ops;
}

} // namespace friction::kernels

#endif // __AVX2__
