#include "splitpipe/demolibs.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace splitpipe::demo {

namespace {

std::shared_ptr<double[]> alloc(std::int64_t n) {
    return std::shared_ptr<double[]>(new double[static_cast<std::size_t>(std::max<std::int64_t>(n, 0))]());
}

}  // namespace

DenseArray DenseArray::zeros(std::int64_t n) {
    return DenseArray{alloc(n), 0, n};
}

DenseArray DenseArray::filled(std::int64_t n, double v) {
    DenseArray a = zeros(n);
    std::fill(a.data(), a.data() + n, v);
    return a;
}

DenseArray DenseArray::from(std::vector<double> values) {
    DenseArray a = zeros(static_cast<std::int64_t>(values.size()));
    std::copy(values.begin(), values.end(), a.data());
    return a;
}

DenseArray DenseArray::slice(std::int64_t start, std::int64_t end) const {
    return DenseArray{storage, offset + start, end - start};
}

std::vector<double> DenseArray::to_vector() const {
    return std::vector<double>(data(), data() + size);
}

DenseMatrix DenseMatrix::zeros(std::int64_t rows, std::int64_t cols) {
    return DenseMatrix{alloc(rows * cols), 0, rows, cols, cols};
}

DenseMatrix DenseMatrix::from(std::initializer_list<std::initializer_list<double>> rows) {
    std::int64_t r = static_cast<std::int64_t>(rows.size());
    std::int64_t c = r ? static_cast<std::int64_t>(rows.begin()->size()) : 0;
    DenseMatrix m = zeros(r, c);
    std::int64_t i = 0;
    for (const auto& row : rows) {
        std::int64_t j = 0;
        for (double v : row) m.at(i, j++) = v;
        ++i;
    }
    return m;
}

DenseMatrix DenseMatrix::slice_rows(std::int64_t r0, std::int64_t r1) const {
    return DenseMatrix{storage, offset + r0 * row_stride, r1 - r0, cols, row_stride};
}

DenseMatrix DenseMatrix::slice_cols(std::int64_t c0, std::int64_t c1) const {
    return DenseMatrix{storage, offset + c0, rows, c1 - c0, row_stride};
}

// Vector kernels live in vd_kernels.cpp so they can build with vectorized
// math enabled.

void normalize_matrix_axis(DenseMatrix& m, std::int64_t axis) {
    if (axis == 0) {
        for (std::int64_t r = 0; r < m.rows; ++r) {
            double sum = 0.0;
            for (std::int64_t c = 0; c < m.cols; ++c) sum += m.at(r, c);
            if (sum == 0.0) continue;  // leave all-zero rows untouched
            for (std::int64_t c = 0; c < m.cols; ++c) m.at(r, c) /= sum;
        }
    } else {
        for (std::int64_t c = 0; c < m.cols; ++c) {
            double sum = 0.0;
            for (std::int64_t r = 0; r < m.rows; ++r) sum += m.at(r, c);
            if (sum == 0.0) continue;
            for (std::int64_t r = 0; r < m.rows; ++r) m.at(r, c) /= sum;
        }
    }
}

DenseMatrix matrix_add(const DenseMatrix& left, const DenseMatrix& right) {
    if (left.rows != right.rows || left.cols != right.cols)
        raise(Errc::dimension_mismatch,
              "matrix_add: " + std::to_string(left.rows) + "x" + std::to_string(left.cols) +
                  " vs " + std::to_string(right.rows) + "x" + std::to_string(right.cols));
    DenseMatrix out = DenseMatrix::zeros(left.rows, left.cols);
    for (std::int64_t r = 0; r < left.rows; ++r)
        for (std::int64_t c = 0; c < left.cols; ++c) out.at(r, c) = left.at(r, c) + right.at(r, c);
    return out;
}

void scale_matrix(DenseMatrix& m, double factor) {
    for (std::int64_t r = 0; r < m.rows; ++r)
        for (std::int64_t c = 0; c < m.cols; ++c) m.at(r, c) *= factor;
}

DenseMatrix filter_zeroed_rows(const DenseMatrix& m) {
    std::vector<std::int64_t> keep;
    keep.reserve(static_cast<std::size_t>(m.rows));
    for (std::int64_t r = 0; r < m.rows; ++r) {
        bool all_zero = true;
        for (std::int64_t c = 0; c < m.cols && all_zero; ++c)
            if (m.at(r, c) != 0.0) all_zero = false;
        if (!all_zero) keep.push_back(r);
    }
    DenseMatrix out = DenseMatrix::zeros(static_cast<std::int64_t>(keep.size()), m.cols);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::int64_t c = 0; c < m.cols; ++c)
            out.at(static_cast<std::int64_t>(i), c) = m.at(keep[i], c);
    return out;
}

DenseArray sum_reduce_to_vector(const DenseMatrix& m, std::int64_t axis) {
    if (axis == 0) {
        DenseArray out = DenseArray::zeros(m.cols);
        for (std::int64_t r = 0; r < m.rows; ++r)
            for (std::int64_t c = 0; c < m.cols; ++c) out[c] += m.at(r, c);
        return out;
    }
    DenseArray out = DenseArray::zeros(m.rows);
    for (std::int64_t r = 0; r < m.rows; ++r)
        for (std::int64_t c = 0; c < m.cols; ++c) out[r] += m.at(r, c);
    return out;
}

namespace {

std::int64_t require_i64(const Value& v, const char* what) {
    if (!v.holds<std::int64_t>())
        raise(Errc::constructor_failure, std::string(what) + " must be an i64");
    return v.as<std::int64_t>();
}

SplitKind make_size_split() {
    SplitKind kind;
    kind.name = "SizeSplit";
    kind.concrete_type = "i64";
    kind.constructor = [](std::span<const Value> args) -> std::vector<std::int64_t> {
        if (args.size() != 1)
            raise(Errc::constructor_failure, "SizeSplit takes one argument");
        std::int64_t size = require_i64(args[0], "SizeSplit size");
        if (size < 0) raise(Errc::constructor_failure, "negative size");
        return {size};
    };
    kind.splitter = [](const Value& v, std::int64_t start, std::int64_t end, const SplitType& st,
                       const WorkerContext& ctx) -> std::optional<SplitPiece> {
        std::int64_t total = st.params[0];
        if (start >= total) return std::nullopt;
        std::int64_t clamped = std::min(end, total);
        if (ctx.pedantic && v.as<std::int64_t>() != total)
            raise(Errc::split_failure, "size value disagrees with SizeSplit parameter");
        return SplitPiece{Value::wrap<std::int64_t>(clamped - start), start, clamped};
    };
    kind.info = [](const Value&, const SplitType& st) {
        // A size piece is one scalar per batch, so it contributes a nominal
        // single byte to the batch-size denominator.
        return RuntimeInfo{st.params[0], 1};
    };
    kind.default_constructor = [](const Value& v) {
        return SplitType::make("SizeSplit", {v.as<std::int64_t>()});
    };
    return kind;
}

SplitKind make_array_split() {
    SplitKind kind;
    kind.name = "ArraySplit";
    kind.concrete_type = "DenseArray";
    kind.constructor = [](std::span<const Value> args) -> std::vector<std::int64_t> {
        if (args.size() != 1)
            raise(Errc::constructor_failure, "ArraySplit takes one argument");
        std::int64_t size = require_i64(args[0], "ArraySplit length");
        if (size < 0) raise(Errc::constructor_failure, "negative length");
        return {size};
    };
    kind.splitter = [](const Value& v, std::int64_t start, std::int64_t end, const SplitType& st,
                       const WorkerContext& ctx) -> std::optional<SplitPiece> {
        std::int64_t total = st.params[0];
        if (start >= total) return std::nullopt;
        std::int64_t clamped = std::min(end, total);
        const DenseArray& a = v.as<DenseArray>();
        if (ctx.pedantic && a.size < total)
            raise(Errc::split_failure, "array shorter than its ArraySplit length");
        return SplitPiece{Value::wrap(a.slice(start, clamped)), start, clamped};
    };
    kind.merger = [](std::vector<SplitPiece> pieces, const SplitType&) -> Value {
        std::int64_t total = 0;
        for (const SplitPiece& p : pieces) total += p.value.as<DenseArray>().size;
        DenseArray out = DenseArray::zeros(total);
        std::int64_t cursor = 0;
        for (const SplitPiece& p : pieces) {
            const DenseArray& a = p.value.as<DenseArray>();
            std::copy(a.data(), a.data() + a.size, out.data() + cursor);
            cursor += a.size;
        }
        return Value::wrap(std::move(out));
    };
    kind.info = [](const Value&, const SplitType& st) {
        return RuntimeInfo{st.params[0], static_cast<std::int64_t>(sizeof(double))};
    };
    kind.default_constructor = [](const Value& v) {
        return SplitType::make("ArraySplit", {v.as<DenseArray>().size});
    };
    return kind;
}

SplitKind make_matrix_split() {
    SplitKind kind;
    kind.name = "MatrixSplit";
    kind.concrete_type = "DenseMatrix";
    kind.constructor = [](std::span<const Value> args) -> std::vector<std::int64_t> {
        if (args.size() != 2)
            raise(Errc::constructor_failure, "MatrixSplit takes (matrix, axis)");
        if (!args[0].holds<DenseMatrix>())
            raise(Errc::constructor_failure, "MatrixSplit first argument must be a matrix");
        const DenseMatrix& m = args[0].as<DenseMatrix>();
        std::int64_t axis = require_i64(args[1], "MatrixSplit axis");
        if (axis != 0 && axis != 1)
            raise(Errc::constructor_failure, "axis must be 0 or 1");
        return {m.rows, m.cols, axis};
    };
    kind.splitter = [](const Value& v, std::int64_t start, std::int64_t end, const SplitType& st,
                       const WorkerContext& ctx) -> std::optional<SplitPiece> {
        const DenseMatrix& m = v.as<DenseMatrix>();
        std::int64_t axis = st.params[2];
        std::int64_t total = axis == 0 ? st.params[0] : st.params[1];
        if (start >= total) return std::nullopt;
        std::int64_t clamped = std::min(end, total);
        if (ctx.pedantic && (m.rows != st.params[0] || m.cols != st.params[1]))
            raise(Errc::split_failure, "matrix shape disagrees with MatrixSplit parameters");
        DenseMatrix piece =
            axis == 0 ? m.slice_rows(start, clamped) : m.slice_cols(start, clamped);
        return SplitPiece{Value::wrap(std::move(piece)), start, clamped};
    };
    kind.merger = [](std::vector<SplitPiece> pieces, const SplitType& st) -> Value {
        if (pieces.empty()) {
            // The parameters are the only shape left to honor.
            if (st.params.size() >= 3)
                return Value::wrap(st.params[2] == 0 ? DenseMatrix::zeros(0, st.params[1])
                                                     : DenseMatrix::zeros(st.params[0], 0));
            return Value::wrap(DenseMatrix::zeros(0, 0));
        }
        std::int64_t axis = st.params.size() >= 3 ? st.params[2] : 0;
        if (axis == 0) {
            std::int64_t rows = 0;
            std::int64_t cols = pieces.front().value.as<DenseMatrix>().cols;
            for (const SplitPiece& p : pieces) {
                const DenseMatrix& m = p.value.as<DenseMatrix>();
                if (m.cols != cols)
                    raise(Errc::merge_failure, "row pieces disagree on column count");
                rows += m.rows;
            }
            DenseMatrix out = DenseMatrix::zeros(rows, cols);
            std::int64_t r0 = 0;
            for (const SplitPiece& p : pieces) {
                const DenseMatrix& m = p.value.as<DenseMatrix>();
                for (std::int64_t r = 0; r < m.rows; ++r)
                    for (std::int64_t c = 0; c < cols; ++c) out.at(r0 + r, c) = m.at(r, c);
                r0 += m.rows;
            }
            return Value::wrap(std::move(out));
        }
        std::int64_t cols = 0;
        std::int64_t rows = pieces.front().value.as<DenseMatrix>().rows;
        for (const SplitPiece& p : pieces) {
            const DenseMatrix& m = p.value.as<DenseMatrix>();
            if (m.rows != rows)
                raise(Errc::merge_failure, "column pieces disagree on row count");
            cols += m.cols;
        }
        DenseMatrix out = DenseMatrix::zeros(rows, cols);
        std::int64_t c0 = 0;
        for (const SplitPiece& p : pieces) {
            const DenseMatrix& m = p.value.as<DenseMatrix>();
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t c = 0; c < m.cols; ++c) out.at(r, c0 + c) = m.at(r, c);
            c0 += m.cols;
        }
        return Value::wrap(std::move(out));
    };
    kind.info = [](const Value&, const SplitType& st) {
        std::int64_t axis = st.params[2];
        std::int64_t total = axis == 0 ? st.params[0] : st.params[1];
        std::int64_t other = axis == 0 ? st.params[1] : st.params[0];
        return RuntimeInfo{total, other * static_cast<std::int64_t>(sizeof(double))};
    };
    kind.default_constructor = [](const Value& v) {
        const DenseMatrix& m = v.as<DenseMatrix>();
        return SplitType::make("MatrixSplit", {m.rows, m.cols, 0});
    };
    return kind;
}

SplitKind make_reduce_split() {
    SplitKind kind;
    kind.name = "ReduceSplit";
    kind.concrete_type = "DenseArray";
    kind.constructor = [](std::span<const Value> args) -> std::vector<std::int64_t> {
        if (args.size() != 1)
            raise(Errc::constructor_failure, "ReduceSplit takes one argument");
        return {require_i64(args[0], "ReduceSplit axis")};
    };
    // Partial results: equal-length vectors summed element-wise. The axis
    // parameter records whether the merged vector stands for a row or a
    // column; the arithmetic is the same either way.
    kind.merger = [](std::vector<SplitPiece> pieces, const SplitType&) -> Value {
        if (pieces.empty()) return Value::wrap(DenseArray::zeros(0));
        std::int64_t n = pieces.front().value.as<DenseArray>().size;
        DenseArray out = DenseArray::zeros(n);
        for (const SplitPiece& p : pieces) {
            const DenseArray& a = p.value.as<DenseArray>();
            if (a.size != n)
                raise(Errc::merge_failure, "partial reductions disagree on length");
            for (std::int64_t i = 0; i < n; ++i) out[i] += a[i];
        }
        return Value::wrap(std::move(out));
    };
    return kind;
}

}  // namespace

void register_split_kinds(SplitKindRegistry& registry) {
    registry.register_kind(make_size_split());
    registry.register_kind(make_array_split());
    registry.register_kind(make_matrix_split());
    registry.register_kind(make_reduce_split());
}

namespace {

FunctionSignature binary_sig() {
    return FunctionSignature{{"i64", "DenseArray", "DenseArray", "DenseArray"},
                             {false, false, false, true},
                             ""};
}

FunctionSignature unary_sig() {
    return FunctionSignature{{"i64", "DenseArray", "DenseArray"}, {false, false, true}, ""};
}

constexpr const char* kBinarySA =
    "@splittable(size: SizeSplit(size), a: ArraySplit(size), b: ArraySplit(size), "
    "mut out: ArraySplit(size))";
constexpr const char* kUnarySA =
    "@splittable(size: SizeSplit(size), a: ArraySplit(size), mut out: ArraySplit(size))";

template <typename Kernel>
LibraryFn wrap_binary(Kernel kernel) {
    return [kernel](std::span<const Value> args) -> std::optional<Value> {
        kernel(args[0].as<std::int64_t>(), args[1].as<DenseArray>(), args[2].as<DenseArray>(),
               args[3].as_mut<DenseArray>());
        return std::nullopt;
    };
}

template <typename Kernel>
LibraryFn wrap_unary(Kernel kernel) {
    return [kernel](std::span<const Value> args) -> std::optional<Value> {
        kernel(args[0].as<std::int64_t>(), args[1].as<DenseArray>(),
               args[2].as_mut<DenseArray>());
        return std::nullopt;
    };
}

}  // namespace

void register_demo_functions(FunctionLibrary& library) {
    library.add("vd_add", wrap_binary(vd_add), binary_sig(), kBinarySA);
    library.add("vd_sub", wrap_binary(vd_sub), binary_sig(), kBinarySA);
    library.add("vd_mul", wrap_binary(vd_mul), binary_sig(), kBinarySA);
    library.add("vd_div", wrap_binary(vd_div), binary_sig(), kBinarySA);
    library.add("vd_sqrt", wrap_unary(vd_sqrt), unary_sig(), kUnarySA);
    library.add("vd_log1p", wrap_unary(vd_log1p), unary_sig(), kUnarySA);
    library.add("vd_exp", wrap_unary(vd_exp), unary_sig(), kUnarySA);
    library.add("vd_erf", wrap_unary(vd_erf), unary_sig(), kUnarySA);
    library.add("vd_sin", wrap_unary(vd_sin), unary_sig(), kUnarySA);
    library.add("vd_cos", wrap_unary(vd_cos), unary_sig(), kUnarySA);
    library.add("vd_asin", wrap_unary(vd_asin), unary_sig(), kUnarySA);

    library.add(
        "normalize_matrix_axis",
        [](std::span<const Value> args) -> std::optional<Value> {
            normalize_matrix_axis(args[0].as_mut<DenseMatrix>(), args[1].as<std::int64_t>());
            return std::nullopt;
        },
        FunctionSignature{{"DenseMatrix", "i64"}, {true, false}, ""},
        "@splittable(mut m: MatrixSplit(m, axis), axis: _)");

    library.add(
        "matrix_add",
        [](std::span<const Value> args) -> std::optional<Value> {
            return Value::wrap(matrix_add(args[0].as<DenseMatrix>(), args[1].as<DenseMatrix>()));
        },
        FunctionSignature{{"DenseMatrix", "DenseMatrix"}, {false, false}, "DenseMatrix"},
        "@splittable(left: S, right: S) -> S");

    library.add(
        "scale_matrix",
        [](std::span<const Value> args) -> std::optional<Value> {
            scale_matrix(args[0].as_mut<DenseMatrix>(), args[1].as<double>());
            return std::nullopt;
        },
        FunctionSignature{{"DenseMatrix", "f64"}, {true, false}, ""},
        "@splittable(mut m: S, val: _)");

    library.add(
        "filter_zeroed_rows",
        [](std::span<const Value> args) -> std::optional<Value> {
            return Value::wrap(filter_zeroed_rows(args[0].as<DenseMatrix>()));
        },
        FunctionSignature{{"DenseMatrix"}, {false}, "DenseMatrix"},
        "@splittable(m: S) -> unknown");

    library.add(
        "sum_reduce_to_vector",
        [](std::span<const Value> args) -> std::optional<Value> {
            return Value::wrap(
                sum_reduce_to_vector(args[0].as<DenseMatrix>(), args[1].as<std::int64_t>()));
        },
        FunctionSignature{{"DenseMatrix", "i64"}, {false, false}, "DenseArray"},
        "@splittable(m: MatrixSplit(m, axis), axis: _) -> ReduceSplit(axis)");
}

const DemoRuntime& demo_runtime() {
    static DemoRuntime runtime;
    return runtime;
}

}  // namespace splitpipe::demo
