#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

#include "splitpipe/library.hpp"
#include "splitpipe/split_types.hpp"

namespace splitpipe::demo {

// Contiguous array of doubles. Slices share storage, so pieces produced by
// the runtime write through to the base array.
struct DenseArray {
    std::shared_ptr<double[]> storage;
    std::int64_t offset = 0;
    std::int64_t size = 0;

    static DenseArray zeros(std::int64_t n);
    static DenseArray filled(std::int64_t n, double v);
    static DenseArray from(std::vector<double> values);

    double* data() { return storage.get() + offset; }
    const double* data() const { return storage.get() + offset; }
    double& operator[](std::int64_t i) { return data()[i]; }
    double operator[](std::int64_t i) const { return data()[i]; }

    DenseArray slice(std::int64_t start, std::int64_t end) const;
    std::vector<double> to_vector() const;
};

// Row-major matrix; row_stride lets column slices view the parent storage.
struct DenseMatrix {
    std::shared_ptr<double[]> storage;
    std::int64_t offset = 0;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t row_stride = 0;

    static DenseMatrix zeros(std::int64_t rows, std::int64_t cols);
    static DenseMatrix from(std::initializer_list<std::initializer_list<double>> rows);

    double& at(std::int64_t r, std::int64_t c) { return storage[offset + r * row_stride + c]; }
    double at(std::int64_t r, std::int64_t c) const {
        return storage[offset + r * row_stride + c];
    }
    bool contiguous() const { return row_stride == cols; }

    DenseMatrix slice_rows(std::int64_t r0, std::int64_t r1) const;
    DenseMatrix slice_cols(std::int64_t c0, std::int64_t c1) const;
};

// Vector math kernels in the style of a BLAS-like library: results over
// [0, size) land in `out`, which may alias an input. Scalar loops; the build
// relies on compiler auto-vectorization.
void vd_add(std::int64_t size, const DenseArray& a, const DenseArray& b, DenseArray& out);
void vd_sub(std::int64_t size, const DenseArray& a, const DenseArray& b, DenseArray& out);
void vd_mul(std::int64_t size, const DenseArray& a, const DenseArray& b, DenseArray& out);
void vd_div(std::int64_t size, const DenseArray& a, const DenseArray& b, DenseArray& out);
void vd_sqrt(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_log1p(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_exp(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_erf(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_sin(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_cos(std::int64_t size, const DenseArray& a, DenseArray& out);
void vd_asin(std::int64_t size, const DenseArray& a, DenseArray& out);

// Matrix operations. axis 0 works over rows, axis 1 over columns.
void normalize_matrix_axis(DenseMatrix& m, std::int64_t axis);  // divide by row/col sums
DenseMatrix matrix_add(const DenseMatrix& left, const DenseMatrix& right);
void scale_matrix(DenseMatrix& m, double factor);
DenseMatrix filter_zeroed_rows(const DenseMatrix& m);  // drop all-zero rows, keep order
// axis selects the iterated axis; the result sums it away (axis 0 -> column
// sums of length cols, axis 1 -> row sums of length rows).
DenseArray sum_reduce_to_vector(const DenseMatrix& m, std::int64_t axis);

// Split kinds: SizeSplit over i64 sizes, ArraySplit over DenseArray,
// MatrixSplit over DenseMatrix (rows, cols, axis), ReduceSplit for reduction
// outputs (merge only). Default kinds: ArraySplit for arrays, MatrixSplit
// (row split) for matrices, SizeSplit for i64.
void register_split_kinds(SplitKindRegistry& registry);

// Registers every kernel above with its annotation.
void register_demo_functions(FunctionLibrary& library);

// Registry and library with everything above registered, for callers that
// need the stock setup.
struct DemoRuntime {
    SplitKindRegistry registry;
    FunctionLibrary library{registry};

    DemoRuntime() {
        register_split_kinds(registry);
        register_demo_functions(library);
    }
};

const DemoRuntime& demo_runtime();

}  // namespace splitpipe::demo

namespace splitpipe {

template <>
struct ValueTraits<demo::DenseArray> {
    static constexpr std::string_view type_name = "DenseArray";
    static const void* identity(const demo::DenseArray& a) {
        return static_cast<const void*>(a.storage.get() + a.offset);
    }
};

template <>
struct ValueTraits<demo::DenseMatrix> {
    static constexpr std::string_view type_name = "DenseMatrix";
    static const void* identity(const demo::DenseMatrix& m) {
        return static_cast<const void*>(m.storage.get() + m.offset);
    }
};

}  // namespace splitpipe
