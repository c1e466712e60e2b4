#include <doctest.h>

#include <random>

#include "test_support.hpp"

using namespace splitpipe;
using namespace tsup;
using demo::DenseArray;
using demo::DenseMatrix;

namespace {

const SplitKindRegistry& reg() {
    return demo::demo_runtime().registry;
}

WorkerContext ctx(bool pedantic = false) {
    return WorkerContext{0, 1, 0, pedantic};
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::internal;
}

}  // namespace

TEST_CASE("registry rejects duplicates and splitters without info") {
    SplitKindRegistry registry;
    demo::register_split_kinds(registry);
    CHECK(registry.contains("ArraySplit"));

    SplitKind dup;
    dup.name = "ArraySplit";
    dup.concrete_type = "DenseArray";
    CHECK(code_of([&] { registry.register_kind(dup); }) == Errc::duplicate_kind);

    SplitKind bad;
    bad.name = "BadSplit";
    bad.concrete_type = "DenseArray";
    bad.splitter = [](const Value&, std::int64_t, std::int64_t, const SplitType&,
                      const WorkerContext&) -> std::optional<SplitPiece> { return std::nullopt; };
    CHECK(code_of([&] { registry.register_kind(bad); }) == Errc::invalid_kind);

    // Merge-only kinds are fine: reductions only need a merger.
    SplitKind reduce_like;
    reduce_like.name = "PartialSum";
    reduce_like.concrete_type = "DenseArray";
    reduce_like.merger = [](std::vector<SplitPiece> pieces, const SplitType&) {
        return pieces.empty() ? Value::wrap(DenseArray::zeros(0)) : std::move(pieces[0].value);
    };
    CHECK_NOTHROW(registry.register_kind(reduce_like));
}

TEST_CASE("constructors evaluate argument snapshots to parameters") {
    Value m = mat({{1, 2, 3, 4, 5, 6, 7, 8},
                   {1, 2, 3, 4, 5, 6, 7, 8},
                   {1, 2, 3, 4, 5, 6, 7, 8},
                   {1, 2, 3, 4, 5, 6, 7, 8}});
    std::vector<Value> args = {m, i64(0)};
    SplitType st = reg().construct("MatrixSplit", args);
    CHECK(st.name == "MatrixSplit");
    CHECK(st.params == std::vector<std::int64_t>{4, 8, 0});

    std::vector<Value> arr_args = {i64(10)};
    SplitType at = reg().construct("ArraySplit", arr_args);
    CHECK(at.params == std::vector<std::int64_t>{10});

    std::vector<Value> size_args = {i64(0)};
    SplitType zt = reg().construct("SizeSplit", size_args);
    CHECK(zt.params == std::vector<std::int64_t>{0});

    std::vector<Value> neg = {i64(-3)};
    CHECK(code_of([&] { reg().construct("ArraySplit", neg); }) == Errc::constructor_failure);
}

TEST_CASE("split returns range views and the exhaustion sentinel") {
    Value a = arr({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    SplitType st = SplitType::make("ArraySplit", {10});

    auto piece = reg().split(a, 0, 5, st, ctx());
    REQUIRE(piece.has_value());
    CHECK(piece->value.as<DenseArray>().to_vector() == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(piece->start == 0);
    CHECK(piece->end == 5);

    CHECK_FALSE(reg().split(a, 10, 15, st, ctx()).has_value());

    // Ranges past the annotated length clamp to it.
    auto tail = reg().split(a, 8, 64, st, ctx());
    REQUIRE(tail.has_value());
    CHECK(tail->end == 10);
}

TEST_CASE("matrix row split matches brute-force row slicing") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> val(-4.0, 4.0);
    DenseMatrix m = DenseMatrix::zeros(4, 8);
    for (std::int64_t r = 0; r < 4; ++r)
        for (std::int64_t c = 0; c < 8; ++c) m.at(r, c) = val(rng);
    Value mv = Value::wrap(m);

    SplitType st = SplitType::make("MatrixSplit", {4, 8, 0});
    auto piece = reg().split(mv, 1, 3, st, ctx());
    REQUIRE(piece.has_value());
    const DenseMatrix& got = piece->value.as<DenseMatrix>();
    CHECK(got.rows == 2);
    CHECK(got.cols == 8);

    // Oracle: copy rows [1,3) element by element from the source.
    for (std::int64_t r = 0; r < 2; ++r)
        for (std::int64_t c = 0; c < 8; ++c) CHECK(got.at(r, c) == m.at(1 + r, c));
}

TEST_CASE("pedantic split flags shape/parameter disagreement") {
    Value a = arr({1, 2, 3});
    SplitType st = SplitType::make("ArraySplit", {10});  // claims more than the array holds
    CHECK(code_of([&] { reg().split(a, 0, 5, st, ctx(true)); }) == Errc::split_failure);
    CHECK_NOTHROW(reg().split(a, 0, 3, SplitType::make("ArraySplit", {3}), ctx(true)));
}

TEST_CASE("reduce merge equals a sequential whole-matrix reduction") {
    // Column pieces of [[1,3],[2,4]] reduced along axis 1 give the partial
    // row sums [1,2] and [3,4]; merging must equal the full row sums.
    DenseMatrix m = DenseMatrix::from({{1, 3}, {2, 4}});
    DenseArray whole = demo::sum_reduce_to_vector(m, 1);

    std::vector<SplitPiece> pieces;
    pieces.push_back({arr({1, 2}), 0, 1});
    pieces.push_back({arr({3, 4}), 1, 2});
    Value merged = reg().merge(std::move(pieces), SplitType::make("ReduceSplit", {1}));

    CHECK(merged.as<DenseArray>().to_vector() == std::vector<double>{4, 6});
    CHECK(merged.as<DenseArray>().to_vector() == whole.to_vector());
}

TEST_CASE("array merge concatenates; a single piece is returned unchanged") {
    std::vector<SplitPiece> pieces;
    pieces.push_back({arr({1, 2, 3}), 0, 3});
    pieces.push_back({arr({4, 5}), 3, 5});
    Value merged = reg().merge(std::move(pieces), SplitType::make("ArraySplit", {5}));
    CHECK(merged.as<DenseArray>().to_vector() == std::vector<double>{1, 2, 3, 4, 5});

    std::vector<SplitPiece> one;
    one.push_back({arr({7, 8}), 0, 2});
    Value single = reg().merge(std::move(one), SplitType::make("ArraySplit", {2}));
    CHECK(single.as<DenseArray>().to_vector() == std::vector<double>{7, 8});
}

TEST_CASE("runtime info reports totals and element bytes") {
    Value big = arr({});  // info is parameter-driven; data is not inspected
    RuntimeInfo info = reg().runtime_info(big, SplitType::make("ArraySplit", {1000000000}));
    CHECK(info.total_elements == 1000000000);
    CHECK(info.element_size_bytes == 8);

    Value m = Value::wrap(DenseMatrix::zeros(4, 8));
    RuntimeInfo mi = reg().runtime_info(m, SplitType::make("MatrixSplit", {4, 8, 0}));
    CHECK(mi.total_elements == 4);
    CHECK(mi.element_size_bytes == 64);  // 8 columns of 8-byte values per row

    RuntimeInfo ei = reg().runtime_info(arr({}), SplitType::make("ArraySplit", {0}));
    CHECK(ei.total_elements == 0);
    CHECK(ei.element_size_bytes == 8);
}

TEST_CASE("split then merge round-trips randomized values") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    std::uniform_int_distribution<int> len(0, 200);

    for (int iter = 0; iter < 50; ++iter) {
        std::int64_t n = len(rng);
        DenseArray a = DenseArray::zeros(n);
        for (std::int64_t i = 0; i < n; ++i) a[i] = val(rng);
        Value av = Value::wrap(a);
        SplitType st = SplitType::make("ArraySplit", {n});

        std::vector<SplitPiece> pieces;
        std::int64_t s = 0;
        while (s < n) {
            std::int64_t step = 1 + std::uniform_int_distribution<std::int64_t>(0, 16)(rng);
            auto piece = reg().split(av, s, s + step, st, ctx());
            REQUIRE(piece.has_value());
            s = piece->end;
            pieces.push_back(std::move(*piece));
        }
        Value merged = reg().merge(std::move(pieces), st);
        CHECK(merged.as<DenseArray>().to_vector() == a.to_vector());
    }

    for (int iter = 0; iter < 30; ++iter) {
        std::int64_t rows = 1 + len(rng) % 24;
        std::int64_t cols = 1 + len(rng) % 24;
        DenseMatrix m = DenseMatrix::zeros(rows, cols);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < cols; ++c) m.at(r, c) = val(rng);
        Value mv = Value::wrap(m);

        for (std::int64_t axis : {0, 1}) {
            SplitType st = SplitType::make("MatrixSplit", {rows, cols, axis});
            std::int64_t total = axis == 0 ? rows : cols;
            std::vector<SplitPiece> pieces;
            std::int64_t s = 0;
            while (s < total) {
                std::int64_t step = 1 + std::uniform_int_distribution<std::int64_t>(0, 5)(rng);
                auto piece = reg().split(mv, s, s + step, st, ctx());
                REQUIRE(piece.has_value());
                s = piece->end;
                pieces.push_back(std::move(*piece));
            }
            Value merged = reg().merge(std::move(pieces), st);
            std::string why;
            CHECK_MESSAGE(values_close(merged, mv, 0.0, &why), why);
        }
    }
}

TEST_CASE("unknown split types are never equal, even to themselves") {
    SplitType u1 = SplitType::make_unknown();
    SplitType u2 = SplitType::make_unknown();
    CHECK_FALSE(split_type_eq(u1, u2));
    CHECK_FALSE(split_type_eq(u1, u1));
    CHECK_FALSE(split_type_eq(u1, SplitType::make("ArraySplit", {4})));
    CHECK(u1.unknown_id != u2.unknown_id);
}

TEST_CASE("equality is an equivalence relation on ordinary split types") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<std::int64_t> param(0, 3);
    const char* names[] = {"ArraySplit", "MatrixSplit", "SizeSplit"};

    auto random_type = [&] {
        SplitType st;
        st.name = names[pick(rng)];
        int params = pick(rng);
        for (int i = 0; i < params; ++i) st.params.push_back(param(rng));
        return st;
    };

    for (int iter = 0; iter < 500; ++iter) {
        SplitType a = random_type();
        SplitType b = random_type();
        SplitType c = random_type();
        CHECK(split_type_eq(a, a));
        CHECK(split_type_eq(a, b) == split_type_eq(b, a));
        if (split_type_eq(a, b) && split_type_eq(b, c)) CHECK(split_type_eq(a, c));
    }
}
