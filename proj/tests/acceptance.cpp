// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Perf-sensitive criteria size their data from the last-level cache
// (detected when possible, SPLITPIPE_LLC_BYTES otherwise) and run at
// min(8, hardware threads).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "splitpipe/bench.hpp"
#include "splittability.hpp"
#include "test_support.hpp"

// splittability.hpp leans on doctest macros only in test binaries; here we
// provide the two used aliases as plain asserts.
using namespace splitpipe;
using namespace tsup;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " C" << criterion << ": " << detail << "\n";
    std::cout.flush();
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::int64_t detect_llc_bytes() {
    if (const char* env = std::getenv("SPLITPIPE_LLC_BYTES")) {
        std::int64_t v = std::atoll(env);
        if (v > 0) return v;
    }
    // Largest cache reported by sysfs, if any.
    std::int64_t best = 0;
    for (int idx = 0; idx < 8; ++idx) {
        std::ostringstream path;
        path << "/sys/devices/system/cpu/cpu0/cache/index" << idx << "/size";
        std::ifstream in(path.str());
        if (!in) continue;
        std::string text;
        in >> text;
        std::int64_t mult = 1;
        if (!text.empty() && (text.back() == 'K' || text.back() == 'k')) mult = 1024;
        if (!text.empty() && (text.back() == 'M' || text.back() == 'm')) mult = 1024 * 1024;
        best = std::max(best, static_cast<std::int64_t>(std::atoll(text.c_str())) * mult);
    }
    return best > 0 ? best : (std::int64_t{32} << 20);
}

int bench_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, std::min(8, hw));
}

// ---------------------------------------------------------------- C1
void criterion_oracle_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260808);
    const std::int64_t kAll = std::int64_t{1} << 40;
    int runs = 0;
    std::string failure;

    for (int iter = 0; iter < 200 && failure.empty(); ++iter) {
        Program p = random_program(rng);
        Outcome eager = run_eager(p);
        for (int workers : {1, 2, 4, 8}) {
            for (std::int64_t batch : {std::int64_t{1}, std::int64_t{7}, std::int64_t{4096},
                                       kAll}) {
                for (bool pipe : {true, false}) {
                    ExecConfig cfg;
                    cfg.workers = workers;
                    cfg.batch_override = batch;
                    cfg.pipelining_enabled = pipe;
                    Outcome got = run_runtime(p, cfg);
                    ++runs;
                    std::string why;
                    if (!outcomes_close(eager, got, 1e-12, &why)) {
                        failure = "program '" + p.to_string() + "' workers=" +
                                  std::to_string(workers) + " batch=" + std::to_string(batch) +
                                  " pipe=" + (pipe ? "on" : "off") + ": " + why;
                    }
                }
            }
        }
    }
    double secs = seconds_since(t0);
    std::ostringstream detail;
    detail << "oracle equivalence over 200 random programs x " << runs / 200
           << " configs (" << runs << " runs, " << secs << "s)";
    if (!failure.empty()) detail << " first failure: " << failure;
    report(1, failure.empty() && secs < 120.0, detail.str());
}

// ---------------------------------------------------------------- C2
void criterion_splittability() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7117);
    const std::vector<int> piece_counts = {1, 2, 3, 17};
    int checks = 0;
    std::string failure;

    for (const std::string& fn : all_demo_functions()) {
        for (int iter = 0; iter < 50 && failure.empty(); ++iter) {
            auto args = splittability_args(fn, rng);
            auto rep = check_splittability(fn, args, piece_counts, 1e-12);
            ++checks;
            if (!rep.ok) failure = rep.detail;
        }
    }
    double secs = seconds_since(t0);
    std::ostringstream detail;
    detail << "split-compatibility for " << all_demo_functions().size() << " functions, "
           << checks << " input sets, piece counts {1,2,3,17} (" << secs << "s)";
    if (!failure.empty()) detail << " failure: " << failure;
    report(2, failure.empty() && secs < 30.0, detail.str());
}

// ---------------------------------------------------------------- C3
void criterion_stage_counts() {
    bench::BenchOptions opts;
    opts.n = 256;

    auto stages = [](const std::string& text) {
        int n = 0;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("stage ", 0) == 0) ++n;
        return n;
    };

    int bs = stages(bench::explain("blackscholes", opts));
    int norm = stages(bench::explain("normalize2", opts));
    int reduce = stages(bench::explain("reducechain", opts));
    int filter = stages(bench::explain("filterchain", opts));

    bool deterministic = true;
    for (int i = 0; i < 3; ++i) {
        deterministic = deterministic &&
                        bench::explain("blackscholes", opts) ==
                            bench::explain("blackscholes", opts) &&
                        bench::explain("filterchain", opts) == bench::explain("filterchain", opts);
    }

    bool pass = bs == 1 && norm == 2 && reduce == 2 && filter == 2 && deterministic;
    std::ostringstream detail;
    detail << "stage counts: pipeline=" << bs << " (want 1), normalize-axes=" << norm
           << " (want 2), reduce-then-vector=" << reduce << " (want 2), filter-to-generic="
           << filter << " (want 2), deterministic=" << (deterministic ? "yes" : "no");
    report(3, pass, detail.str());
}

// ---------------------------------------------------------------- C4
void criterion_batch_heuristic() {
    auto t0 = std::chrono::steady_clock::now();
    std::int64_t llc = detect_llc_bytes();
    int threads = bench_threads();

    bool pass = true;
    std::ostringstream detail;
    detail << "batch heuristic within 25% of sweep minimum (threads=" << threads
           << ", llc=" << (llc >> 20) << "MiB):";

    for (const char* workload : {"blackscholes", "haversine"}) {
        // Size the arrays so the touched data exceeds 4x LLC.
        int arrays = std::string(workload) == "blackscholes" ? 16 : 14;
        std::int64_t n = std::max<std::int64_t>((4 * llc) / (arrays * 8), 1 << 18);

        bench::BenchOptions opts;
        opts.n = n;
        opts.threads = threads;
        opts.repetitions = 5;

        std::vector<std::int64_t> batches;
        for (int p = 6; p <= 22; ++p) batches.push_back(std::int64_t{1} << p);
        auto rows = bench::sweep_batch(workload, batches, opts);

        double best = rows[0].wall_ms;
        std::int64_t best_batch = rows[0].batch_elements;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            if (rows[i].wall_ms < best) {
                best = rows[i].wall_ms;
                best_batch = rows[i].batch_elements;
            }
        }
        const auto& auto_row = rows.back();
        double ratio = auto_row.wall_ms / best;
        if (ratio > 1.25) {
            // Confirm back to back so clock drift over the sweep cannot decide
            // the outcome: re-time the winner and the heuristic's choice.
            bench::BenchOptions confirm = opts;
            confirm.repetitions = 7;
            std::int64_t confirm_batches[] = {best_batch};
            auto best_run = bench::sweep_batch(workload, confirm_batches, confirm);
            auto run = std::string(workload) == "blackscholes" ? bench::run_blackscholes
                                                               : bench::run_haversine;
            bench::BenchResult auto_run = run(bench::Mode::sa_pipe, confirm);
            ratio = auto_run.wall_ms / best_run[0].wall_ms;
        }
        bool ok = ratio <= 1.25;
        pass = pass && ok;
        detail << " " << workload << " auto=" << auto_row.batch_elements << " ratio="
               << ratio << (ok ? " ok" : " EXCEEDS");
    }
    detail << " (" << seconds_since(t0) << "s)";
    report(4, pass && seconds_since(t0) < 600.0, detail.str());
}

// ---------------------------------------------------------------- C5
void criterion_pipelining_ablation() {
    auto t0 = std::chrono::steady_clock::now();
    std::int64_t llc = detect_llc_bytes();
    int threads = bench_threads();

    bool pass = true;
    std::ostringstream detail;
    detail << "pipelining ablation (threads=" << threads << "):";

    struct Case {
        const char* workload;
        double max_ratio;
        int arrays;
    };
    for (const Case& c : {Case{"blackscholes", 0.75, 16}, Case{"haversine", 0.85, 14}}) {
        bench::BenchOptions opts;
        // Total data at least 4x LLC, and per-worker array slices well beyond
        // the LLC so an unpipelined pass cannot find the previous call's
        // output still cached.
        opts.n = std::max<std::int64_t>(
            {(4 * llc) / (c.arrays * 8), (2 * llc * threads) / 8, 1 << 18});
        opts.threads = threads;
        opts.repetitions = 1;

        auto run = std::string(c.workload) == "blackscholes" ? bench::run_blackscholes
                                                             : bench::run_haversine;
        // Paired samples: alternate the modes so drift cancels in the ratio.
        std::vector<double> pipe_ms;
        std::vector<double> nopipe_ms;
        double pipe_checksum = 0.0;
        double nopipe_checksum = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            bench::BenchResult pipe = run(bench::Mode::sa_pipe, opts);
            bench::BenchResult nopipe = run(bench::Mode::sa_nopipe, opts);
            pipe_ms.push_back(pipe.wall_ms);
            nopipe_ms.push_back(nopipe.wall_ms);
            pipe_checksum = pipe.checksum;
            nopipe_checksum = nopipe.checksum;
        }
        auto median = [](std::vector<double> xs) {
            std::sort(xs.begin(), xs.end());
            return xs[xs.size() / 2];
        };
        double ratio = median(pipe_ms) / median(nopipe_ms);
        bool checksums = std::abs(pipe_checksum - nopipe_checksum) <=
                         1e-12 * std::max({std::abs(pipe_checksum),
                                           std::abs(nopipe_checksum), 1.0});
        bool ok = ratio <= c.max_ratio && checksums;
        pass = pass && ok;
        detail << " " << c.workload << " pipe/nopipe=" << ratio << " (limit " << c.max_ratio
               << (checksums ? "" : ", CHECKSUM MISMATCH") << (ok ? ") ok" : ") EXCEEDS");
    }
    detail << " (" << seconds_since(t0) << "s)";
    report(5, pass && seconds_since(t0) < 300.0, detail.str());
}

// ---------------------------------------------------------------- C6
void criterion_intensity_ordering() {
    auto t0 = std::chrono::steady_clock::now();
    std::int64_t llc = detect_llc_bytes();
    int threads = bench_threads();

    bench::BenchOptions opts;
    opts.n = std::max<std::int64_t>((4 * llc) / (3 * 8), 1 << 18);
    opts.threads = threads;
    opts.repetitions = 3;

    std::vector<std::string> kernels = {"add", "div", "exp"};
    std::vector<int> just_top = {threads};
    auto rows = bench::run_intensity(kernels, just_top, opts);

    double add = rows[0].speedup;
    double div = rows[1].speedup;
    double exp = rows[2].speedup;

    // Ordering with one adjacent-pair inversion of up to 5% tolerated.
    int inversions = 0;
    double worst = 0.0;
    auto check_pair = [&](double hi, double lo) {
        if (hi >= lo) return;
        ++inversions;
        worst = std::max(worst, (lo - hi) / lo);
    };
    check_pair(add, div);
    check_pair(div, exp);
    bool pass = inversions == 0 || (inversions == 1 && worst <= 0.05);

    std::ostringstream detail;
    detail << "speedups at " << threads << " threads: add=" << add << " div=" << div
           << " exp=" << exp << " inversions=" << inversions << " worst=" << worst * 100
           << "% (" << seconds_since(t0) << "s)";
    report(6, pass, detail.str());
}

// ---------------------------------------------------------------- C7
void criterion_parser_round_trip() {
    std::mt19937_64 rng(909);
    std::uniform_int_distribution<int> pick(0, 3);
    std::uniform_int_distribution<int> count(0, 5);
    std::string failure;

    for (int iter = 0; iter < 100 && failure.empty(); ++iter) {
        SplitAnnotation sa;
        int params = count(rng);
        for (int i = 0; i < params; ++i) {
            AnnotationParam p;
            p.name = "a" + std::to_string(i);
            p.is_mut = pick(rng) == 0;
            switch (pick(rng)) {
            case 0: p.expr = SplitTypeExpr::missing_expr(); break;
            case 1: p.expr = SplitTypeExpr{SplitTypeExpr::Kind::unknown, "", {}}; break;
            case 2: p.expr = SplitTypeExpr{SplitTypeExpr::Kind::generic,
                                           "G" + std::to_string(pick(rng)), {}}; break;
            default: {
                SplitTypeExpr e{SplitTypeExpr::Kind::constructor,
                                "Kind" + std::to_string(pick(rng)), {}};
                for (int a = 0; a < std::min(i + 1, count(rng)); ++a)
                    e.args.push_back("a" + std::to_string(a));
                p.expr = std::move(e);
            }
            }
            sa.params.push_back(std::move(p));
        }
        if (pick(rng) != 0)
            sa.return_expr = SplitTypeExpr{SplitTypeExpr::Kind::generic, "R", {}};

        SplitAnnotation once = parse_annotation(sa.to_string());
        SplitAnnotation twice = parse_annotation(once.to_string());
        if (!(once == sa && twice == once))
            failure = "round trip diverged for: " + sa.to_string();
    }

    // Documented annotations parse to the registered structures.
    const auto& lib = demo::demo_runtime().library;
    bool fixed =
        lib.at("vd_add").sa ==
            parse_annotation("@splittable(size: SizeSplit(size), a: ArraySplit(size), "
                             "b: ArraySplit(size), mut out: ArraySplit(size))") &&
        lib.at("vd_log1p").sa ==
            parse_annotation("@splittable(size: SizeSplit(size), a: ArraySplit(size), "
                             "mut out: ArraySplit(size))") &&
        lib.at("normalize_matrix_axis").sa ==
            parse_annotation("@splittable(mut m: MatrixSplit(m, axis), axis: _)") &&
        lib.at("matrix_add").sa == parse_annotation("@splittable(left: S, right: S) -> S") &&
        lib.at("scale_matrix").sa == parse_annotation("@splittable(mut m: S, val: _)") &&
        lib.at("filter_zeroed_rows").sa == parse_annotation("@splittable(m: S) -> unknown") &&
        lib.at("sum_reduce_to_vector").sa ==
            parse_annotation(
                "@splittable(m: MatrixSplit(m, axis), axis: _) -> ReduceSplit(axis)");

    bool pass = failure.empty() && fixed;
    std::string detail = "100 generated annotations round-trip; documented forms parse exactly";
    if (!failure.empty()) detail += " — " + failure;
    if (!fixed) detail += " — documented annotation mismatch";
    report(7, pass, detail);
}

// ---------------------------------------------------------------- C8
void criterion_pedantic_triggers() {
    auto code_of = [](const std::function<void()>& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::internal;
    };

    // Mismatched element counts across one stage's inputs: a kind whose info
    // reports the data's actual extent against the annotated size.
    SplitKindRegistry registry;
    demo::register_split_kinds(registry);
    {
        SplitKind kind;
        kind.name = "CountedSplit";
        kind.concrete_type = "DenseArray";
        kind.constructor = [](std::span<const Value> args) -> std::vector<std::int64_t> {
            return {args[0].as<std::int64_t>()};
        };
        kind.splitter = [](const Value& v, std::int64_t start, std::int64_t end,
                           const SplitType& st,
                           const WorkerContext&) -> std::optional<SplitPiece> {
            std::int64_t total = st.params[0];
            if (start >= total) return std::nullopt;
            std::int64_t clamped = std::min(end, total);
            return SplitPiece{Value::wrap(v.as<demo::DenseArray>().slice(start, clamped)),
                              start, clamped};
        };
        kind.info = [](const Value& v, const SplitType&) {
            return RuntimeInfo{v.as<demo::DenseArray>().size, 8};
        };
        registry.register_kind(kind);
    }
    FunctionLibrary lib(registry);
    lib.add(
        "copy_counted",
        [](std::span<const Value> args) -> std::optional<Value> {
            std::int64_t n = args[0].as<std::int64_t>();
            const demo::DenseArray& a = args[1].as<demo::DenseArray>();
            demo::DenseArray& out = args[2].as_mut<demo::DenseArray>();
            for (std::int64_t i = 0; i < std::min(n, a.size); ++i) out[i] = a[i];
            return std::nullopt;
        },
        FunctionSignature{{"i64", "DenseArray", "DenseArray"}, {false, false, true}, ""},
        "@splittable(size: SizeSplit(size), a: CountedSplit(size), mut out: ArraySplit(size))");

    auto mismatched = [&](bool pedantic) {
        ExecConfig cfg;
        cfg.pedantic = pedantic;
        Session s(lib, cfg);
        Value short_arr = Value::wrap(demo::DenseArray::filled(5, 1.0));
        Value out = Value::wrap(demo::DenseArray::zeros(10));
        s.register_call("copy_counted", {i64(10), short_arr, out});
        return code_of([&] { s.evaluate(); });
    };

    bool counts_on = mismatched(true) == Errc::element_count_mismatch;
    bool counts_off = mismatched(false) == Errc::element_count_mismatch;

    Program empty;
    empty.pool = {Value::wrap(demo::DenseArray::zeros(0)),
                  Value::wrap(demo::DenseArray::zeros(0))};
    empty.calls = {{"vd_sqrt", {ArgRef::lit(i64(0)), ArgRef::pool(0), ArgRef::pool(1)}}};
    ExecConfig strict;
    strict.pedantic = true;
    bool empty_split = code_of([&] { run_runtime(empty, strict); }) == Errc::empty_split;

    Program null_data;
    null_data.pool = {Value()};
    null_data.calls = {{"vd_sqrt", {ArgRef::lit(i64(2)), ArgRef::pool(0), ArgRef::pool(0)}}};
    bool null_flagged = code_of([&] { run_runtime(null_data, strict); }) == Errc::null_data;

    bool pass = counts_on && counts_off && empty_split && null_flagged;
    std::ostringstream detail;
    detail << "pedantic triggers: counts(pedantic)=" << counts_on
           << " counts(off)=" << counts_off << " empty=" << empty_split
           << " null=" << null_flagged;
    report(8, pass, detail.str());
}

// ---------------------------------------------------------------- C9
void criterion_overhead_bound() {
    auto t0 = std::chrono::steady_clock::now();
    bench::BenchOptions opts;
    opts.n = 10'000'000;
    opts.threads = bench_threads();
    opts.repetitions = 3;

    bench::BenchResult pipe = bench::run_blackscholes(bench::Mode::sa_pipe, opts);
    double share = pipe.capture_plan_ms / pipe.wall_ms;
    bool pass = share <= 0.02;
    std::ostringstream detail;
    detail << "register+plan share at n=1e7: " << share * 100 << "% of " << pipe.wall_ms
           << "ms (limit 2%) (" << seconds_since(t0) << "s)";
    report(9, pass, detail.str());
}

}  // namespace

int main() {
    std::cout << "acceptance suite: " << bench_threads() << " bench threads, llc="
              << (detect_llc_bytes() >> 20) << "MiB assumed\n";
    try {
        criterion_oracle_equivalence();
        criterion_splittability();
        criterion_stage_counts();
        criterion_batch_heuristic();
        criterion_pipelining_ablation();
        criterion_intensity_ordering();
        criterion_parser_round_trip();
        criterion_pedantic_triggers();
        criterion_overhead_bound();
    } catch (const std::exception& e) {
        std::cout << "[FAIL] suite aborted: " << e.what() << "\n";
        return 99;
    }
    std::cout << (g_failures == 0 ? "all criteria passed\n"
                                  : std::to_string(g_failures) + " criteria failed\n");
    return g_failures;
}
