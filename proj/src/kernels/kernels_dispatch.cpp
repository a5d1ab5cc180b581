#include "friction/kernels.hpp"

namespace friction::kernels {

#if defined(FRICTION_HAVE_AVX2_TU)
const Ops* avx2_ops_impl();
#endif

const Ops* avx2_ops() {
#if defined(FRICTION_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
    if (__builtin_cpu_supports("avx2"))
        return avx2_ops_impl();
#endif
    return nullptr;
}

const Ops& ops() {
    static const Ops* best = [] {
        if (const Ops* v = avx2_ops())
            return v;
        return &scalar_ops();
    }();
    return *best;
}

} // namespace friction::kernels
