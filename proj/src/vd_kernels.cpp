// Vector math kernels. Built in a separate translation unit so the build can
// enable vectorized math (libmvec) here without relaxing IEEE semantics for
// the rest of the library.

#include <cmath>

#include "splitpipe/demolibs.hpp"

namespace splitpipe::demo {

#define SP_BINARY_KERNEL(name, expr)                                                          \
    void name(std::int64_t size, const DenseArray& a, const DenseArray& b, DenseArray& out) { \
        const double* pa = a.data();                                                          \
        const double* pb = b.data();                                                          \
        double* po = out.data();                                                              \
        for (std::int64_t i = 0; i < size; ++i) po[i] = (expr);                               \
    }

SP_BINARY_KERNEL(vd_add, pa[i] + pb[i])
SP_BINARY_KERNEL(vd_sub, pa[i] - pb[i])
SP_BINARY_KERNEL(vd_mul, pa[i] * pb[i])
SP_BINARY_KERNEL(vd_div, pa[i] / pb[i])
#undef SP_BINARY_KERNEL

#define SP_UNARY_KERNEL(name, fn)                                        \
    void name(std::int64_t size, const DenseArray& a, DenseArray& out) { \
        const double* pa = a.data();                                     \
        double* po = out.data();                                         \
        for (std::int64_t i = 0; i < size; ++i) po[i] = fn(pa[i]);       \
    }

SP_UNARY_KERNEL(vd_sqrt, std::sqrt)
SP_UNARY_KERNEL(vd_log1p, std::log1p)
SP_UNARY_KERNEL(vd_exp, std::exp)
SP_UNARY_KERNEL(vd_erf, std::erf)
SP_UNARY_KERNEL(vd_sin, std::sin)
SP_UNARY_KERNEL(vd_cos, std::cos)
SP_UNARY_KERNEL(vd_asin, std::asin)
#undef SP_UNARY_KERNEL

}  // namespace splitpipe::demo
