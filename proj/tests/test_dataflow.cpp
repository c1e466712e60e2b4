#include <doctest.h>

#include <sstream>

#include "test_support.hpp"

using namespace splitpipe;
using namespace tsup;
using demo::DenseArray;

namespace {

Session make_session(ExecConfig cfg = {}) {
    return Session(demo::demo_runtime().library, cfg);
}

bool has_edge(const DataflowGraph& g, std::uint32_t from, std::uint32_t to) {
    for (const Edge& e : g.edges)
        if (e.from == from && e.to == to) return true;
    return false;
}

}  // namespace

TEST_CASE("mutable buffers induce writer-to-reader edges") {
    Session s = make_session();
    Value d1 = arr({0.5, 1.0, 1.5});
    Value tmp = arr({1, 1, 1});
    Value vol = arr({2, 2, 2});
    Value size = i64(3);

    s.register_call("vd_log1p", {size, d1, d1});
    s.register_call("vd_add", {size, d1, tmp, d1});
    s.register_call("vd_div", {size, d1, vol, d1});

    const DataflowGraph& g = s.graph();
    REQUIRE(g.nodes.size() == 3);
    CHECK(g.nodes[0].args.size() == 3);
    CHECK(g.nodes[0].args[2].is_mut);
    CHECK(has_edge(g, 0, 1));  // d1 written by log1p, read by add
    CHECK(has_edge(g, 1, 2));  // and again by div
    CHECK(g.in_edges(0).empty());
}

TEST_CASE("pending handles connect producers to consumers") {
    Session s = make_session();
    Value a = mat({{1, 2}, {3, 4}});
    Value b = mat({{5, 6}, {7, 8}});

    auto h = s.register_call("matrix_add", {a, b});
    REQUIRE(h.has_value());
    CHECK_FALSE(h->evaluated());
    s.register_call("scale_matrix", {*h, 2.0});

    const DataflowGraph& g = s.graph();
    REQUIRE(g.nodes.size() == 2);
    CHECK(g.nodes[1].args[0].pending);
    CHECK(has_edge(g, 0, 1));
}

TEST_CASE("force evaluates the captured graph and is idempotent") {
    Session s = make_session();
    Value a = mat({{1, 2}, {3, 4}});
    Value b = mat({{1, 1}, {1, 1}});

    auto h = s.register_call("matrix_add", {a, b});
    Value first = h->force();
    CHECK(h->evaluated());
    CHECK(first.as<demo::DenseMatrix>().at(1, 1) == 5.0);

    // No graph remains; forcing again returns the cached value.
    CHECK(s.graph().empty());
    Value second = h->force();
    CHECK(&second.as<demo::DenseMatrix>().storage[0] ==
          &first.as<demo::DenseMatrix>().storage[0]);
}

TEST_CASE("forcing mid-program evaluates captured calls; later calls start fresh") {
    Session s = make_session();
    Value x = arr({4.0, 9.0});
    Value out = arr({0, 0});
    Value size = i64(2);

    s.register_call("vd_sqrt", {size, x, out});
    auto h = s.register_call("matrix_add", {mat({{1}}), mat({{2}})});
    h->force();

    // The sqrt call executed as part of the same evaluation.
    CHECK(out.as<DenseArray>().to_vector() == std::vector<double>{2, 3});
    CHECK(s.graph().empty());

    s.register_call("vd_sqrt", {size, out, out});
    CHECK(s.graph().nodes.size() == 1);
    CHECK(s.graph().nodes[0].node_id == 0);  // fresh graph, fresh ids
}

TEST_CASE("aliases resolve to the canonical handle's data") {
    Session s = make_session();
    auto h = s.register_call("matrix_add", {mat({{2}}), mat({{3}})});
    LazyHandle alias = h->alias();
    LazyHandle alias2 = alias.alias();
    CHECK(alias.id() != h->id());

    Value via_alias = alias2.force();
    Value via_canonical = h->force();
    CHECK(&via_alias.as<demo::DenseMatrix>().storage[0] ==
          &via_canonical.as<demo::DenseMatrix>().storage[0]);
}

TEST_CASE("evaluated handles re-register as plain values") {
    Session s = make_session();
    auto h = s.register_call("matrix_add", {mat({{1}}), mat({{1}})});
    s.evaluate();
    CHECK(h->evaluated());

    // A second program may consume the evaluated result directly.
    auto h2 = s.register_call("matrix_add", {*h, mat({{3}})});
    CHECK_FALSE(s.graph().nodes[0].args[0].pending);
    CHECK(h2->force().as<demo::DenseMatrix>().at(0, 0) == 5.0);
}

TEST_CASE("touch evaluates only buffers with pending writers") {
    Session s = make_session();
    Value d = arr({1.0, 2.0});
    Value untouched = arr({7.0});
    Value size = i64(2);

    s.register_call("vd_sqrt", {size, d, d});
    s.touch(untouched);
    CHECK_FALSE(s.graph().empty());  // unrelated buffer, nothing ran

    s.touch(d);
    CHECK(s.graph().empty());
    CHECK(d.as<DenseArray>()[0] == doctest::Approx(1.0));
    CHECK(d.as<DenseArray>()[1] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("empty evaluation is a no-op") {
    Session s = make_session();
    CHECK_NOTHROW(s.evaluate());
}

TEST_CASE("registering during evaluation is rejected") {
    SplitKindRegistry registry;
    demo::register_split_kinds(registry);
    FunctionLibrary lib(registry);

    Session* live = nullptr;
    Errc seen = Errc::internal;
    lib.add(
        "reenter",
        [&](std::span<const Value> args) -> std::optional<Value> {
            try {
                live->register_call("reenter", {Arg(args[0]), Arg(args[1]), Arg(args[2])});
            } catch (const Error& e) {
                seen = e.code();
            }
            return std::nullopt;
        },
        FunctionSignature{{"i64", "DenseArray", "DenseArray"}, {false, false, true}, ""},
        "@splittable(size: SizeSplit(size), a: ArraySplit(size), mut out: ArraySplit(size))");

    Session s(lib);
    live = &s;
    Value d = arr({1.0, 2.0});
    s.register_call("reenter", {i64(2), d, d});
    s.evaluate();
    CHECK(seen == Errc::graph_sealed);
}

TEST_CASE("the trace log records sequence, function, argument ids, and mut mask") {
    std::ostringstream trace;
    ExecConfig cfg;
    cfg.trace = &trace;
    Session s = make_session(cfg);

    Value d = arr({1.0, 2.0});
    s.register_call("vd_sqrt", {i64(2), d, d});
    s.register_call("vd_add", {i64(2), d, d, d});

    std::string log = trace.str();
    CHECK(log.find("0 vd_sqrt") != std::string::npos);
    CHECK(log.find("1 vd_add") != std::string::npos);
    CHECK(log.find("mut=001") != std::string::npos);
    CHECK(log.find("mut=0001") != std::string::npos);
}

TEST_CASE("argument arity is checked at registration") {
    Session s = make_session();
    try {
        s.register_call("vd_add", {i64(1), arr({1.0})});
        FAIL("expected invalid_argument");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_argument);
    }
}

TEST_CASE("laziness is unobservable for register/force programs") {
    // The same chain through eager calls and through capture+force.
    Program p;
    p.pool.push_back(arr({1.0, 4.0, 9.0, 16.0}));
    p.pool.push_back(arr({0, 0, 0, 0}));
    p.calls.push_back({"vd_sqrt", {ArgRef::lit(i64(4)), ArgRef::pool(0), ArgRef::pool(1)}});
    p.calls.push_back({"vd_add", {ArgRef::lit(i64(4)), ArgRef::pool(1), ArgRef::pool(0),
                                  ArgRef::pool(1)}});

    Outcome eager = run_eager(p);
    ExecConfig cfg;
    cfg.workers = 2;
    Outcome lazy = run_runtime(p, cfg);
    std::string why;
    CHECK_MESSAGE(outcomes_close(eager, lazy, 1e-12, &why), why);
}
