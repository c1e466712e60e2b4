#include "splitpipe/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "splitpipe/dataflow.hpp"
#include "splitpipe/executor.hpp"

namespace splitpipe::bench {

using demo::DenseArray;
using demo::DenseMatrix;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point from) {
    return std::chrono::duration<double, std::milli>(Clock::now() - from).count();
}

double checksum_of(const Value& v) {
    const DenseArray& a = v.as<DenseArray>();
    double sum = 0.0;
    for (std::int64_t i = 0; i < a.size; ++i) sum += a[i];
    return sum;
}

Value random_array(std::mt19937_64& rng, std::int64_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    DenseArray a = DenseArray::zeros(n);
    for (std::int64_t i = 0; i < n; ++i) a[i] = dist(rng);
    return Value::wrap(std::move(a));
}

Value const_array(std::int64_t n, double v) {
    return Value::wrap(DenseArray::filled(n, v));
}

// A vector-kernel pipeline: the one call sequence drives the eager baseline,
// the annotated runs, and plan explanations.
struct PipelineSpec {
    std::int64_t n = 0;
    std::vector<std::pair<std::string, std::vector<Value>>> calls;
    std::vector<Value> checksum_outputs;
};

PipelineSpec build_blackscholes(std::int64_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PipelineSpec p;
    p.n = n;
    Value size = Value::wrap<std::int64_t>(n);

    Value price = random_array(rng, n, 10.0, 200.0);
    Value strike = random_array(rng, n, 10.0, 200.0);
    Value t = random_array(rng, n, 0.1, 3.0);
    Value rate = random_array(rng, n, 0.01, 0.08);
    Value vol = random_array(rng, n, 0.1, 0.5);

    Value one = const_array(n, 1.0);
    Value half = const_array(n, 0.5);
    Value sqrt2 = const_array(n, std::numbers::sqrt2);
    Value zero = const_array(n, 0.0);

    Value w1 = const_array(n, 0.0);
    Value w2 = const_array(n, 0.0);
    Value w3 = const_array(n, 0.0);
    Value w4 = const_array(n, 0.0);
    Value w5 = const_array(n, 0.0);
    Value call = const_array(n, 0.0);
    Value put = const_array(n, 0.0);

    auto add = [&](const char* fn, std::vector<Value> args) {
        p.calls.emplace_back(fn, std::move(args));
    };

    add("vd_div", {size, price, strike, w1});
    add("vd_sub", {size, w1, one, w1});
    add("vd_log1p", {size, w1, w1});      // ln(S/K)
    add("vd_mul", {size, vol, vol, w2});
    add("vd_mul", {size, w2, half, w2});
    add("vd_add", {size, w2, rate, w2});
    add("vd_mul", {size, w2, t, w2});     // (r + s^2/2) T
    add("vd_add", {size, w1, w2, w1});
    add("vd_sqrt", {size, t, w3});
    add("vd_mul", {size, w3, vol, w3});   // s sqrt(T)
    add("vd_div", {size, w1, w3, w1});    // d1
    add("vd_sub", {size, w1, w3, w2});    // d2
    add("vd_div", {size, w1, sqrt2, w1});
    add("vd_erf", {size, w1, w1});
    add("vd_mul", {size, w1, half, w1});
    add("vd_add", {size, w1, half, w1});  // Phi(d1)
    add("vd_div", {size, w2, sqrt2, w2});
    add("vd_erf", {size, w2, w2});
    add("vd_mul", {size, w2, half, w2});
    add("vd_add", {size, w2, half, w2});  // Phi(d2)
    add("vd_mul", {size, rate, t, w3});
    add("vd_sub", {size, zero, w3, w3});
    add("vd_exp", {size, w3, w3});
    add("vd_mul", {size, w3, strike, w3});  // K exp(-rT)
    add("vd_mul", {size, price, w1, w4});
    add("vd_mul", {size, w3, w2, w5});
    add("vd_sub", {size, w4, w5, call});
    add("vd_sub", {size, one, w2, w2});   // Phi(-d2)
    add("vd_sub", {size, one, w1, w1});   // Phi(-d1)
    add("vd_mul", {size, w3, w2, w2});
    add("vd_mul", {size, price, w1, w1});
    add("vd_sub", {size, w2, w1, put});

    p.checksum_outputs = {call, put};
    return p;
}

PipelineSpec build_haversine(std::int64_t n, std::uint64_t seed, double lat2_deg = 40.7128,
                             double lon2_deg = -74.0060, double radius = 6371.0) {
    std::mt19937_64 rng(seed);
    PipelineSpec p;
    p.n = n;
    Value size = Value::wrap<std::int64_t>(n);

    constexpr double kDegToRad = std::numbers::pi / 180.0;
    Value lat1 = random_array(rng, n, -90.0, 90.0);
    Value lon1 = random_array(rng, n, -180.0, 180.0);

    Value rad = const_array(n, kDegToRad);
    Value half = const_array(n, 0.5);
    Value lat2 = const_array(n, lat2_deg * kDegToRad);
    Value lon2 = const_array(n, lon2_deg * kDegToRad);
    Value two_r = const_array(n, 2.0 * radius);

    Value lat1r = const_array(n, 0.0);
    Value lon1r = const_array(n, 0.0);
    Value w1 = const_array(n, 0.0);
    Value w2 = const_array(n, 0.0);
    Value w3 = const_array(n, 0.0);
    Value w4 = const_array(n, 0.0);
    Value dist = const_array(n, 0.0);

    auto add = [&](const char* fn, std::vector<Value> args) {
        p.calls.emplace_back(fn, std::move(args));
    };

    add("vd_mul", {size, lat1, rad, lat1r});
    add("vd_mul", {size, lon1, rad, lon1r});
    add("vd_sub", {size, lat2, lat1r, w1});
    add("vd_mul", {size, w1, half, w1});
    add("vd_sin", {size, w1, w1});
    add("vd_mul", {size, w1, w1, w1});    // sin^2(dlat/2)
    add("vd_sub", {size, lon2, lon1r, w2});
    add("vd_mul", {size, w2, half, w2});
    add("vd_sin", {size, w2, w2});
    add("vd_mul", {size, w2, w2, w2});    // sin^2(dlon/2)
    add("vd_cos", {size, lat1r, w3});
    add("vd_cos", {size, lat2, w4});
    add("vd_mul", {size, w3, w4, w3});
    add("vd_mul", {size, w2, w3, w2});
    add("vd_add", {size, w1, w2, w1});    // a
    add("vd_sqrt", {size, w1, w1});
    add("vd_asin", {size, w1, w1});
    add("vd_mul", {size, w1, two_r, dist});

    p.checksum_outputs = {dist};
    return p;
}

const std::map<std::string, std::string, std::less<>>& intensity_kernels() {
    static const std::map<std::string, std::string, std::less<>> kernels = {
        {"add", "vd_add"}, {"mul", "vd_mul"}, {"sqrt", "vd_sqrt"},
        {"div", "vd_div"}, {"erf", "vd_erf"}, {"exp", "vd_exp"},
    };
    return kernels;
}

PipelineSpec build_intensity(std::string_view kernel, std::int64_t n, std::uint64_t seed,
                             int repetitions = 10) {
    auto it = intensity_kernels().find(kernel);
    if (it == intensity_kernels().end())
        raise(Errc::invalid_argument, "unknown intensity kernel '" + std::string(kernel) + "'");
    const std::string& fn = it->second;
    bool binary = fn == "vd_add" || fn == "vd_mul" || fn == "vd_div";

    std::mt19937_64 rng(seed);
    PipelineSpec p;
    p.n = n;
    Value size = Value::wrap<std::int64_t>(n);
    Value a = random_array(rng, n, 0.5, 2.0);
    Value b = random_array(rng, n, 0.5, 2.0);
    Value out = const_array(n, 0.0);

    for (int r = 0; r < repetitions; ++r) {
        if (binary)
            p.calls.emplace_back(fn, std::vector<Value>{size, a, b, out});
        else
            p.calls.emplace_back(fn, std::vector<Value>{size, a, out});
    }
    p.checksum_outputs = {out};
    return p;
}

ExecConfig config_for(Mode mode, const BenchOptions& opts) {
    ExecConfig cfg;
    cfg.workers = opts.threads;
    cfg.l2_bytes = opts.l2_bytes;
    cfg.batch_constant = opts.c_constant;
    cfg.batch_override = opts.batch;
    cfg.pedantic = opts.pedantic;
    cfg.pipelining_enabled = mode != Mode::sa_nopipe;
    return cfg;
}

double run_eager_once(const PipelineSpec& p) {
    const FunctionLibrary& lib = demo::demo_runtime().library;
    for (const auto& [fn, args] : p.calls) lib.at(fn).fn(args);
    return 0.0;
}

// Runs one annotated execution; returns capture+plan milliseconds.
double run_annotated_once(const PipelineSpec& p, const ExecConfig& cfg,
                          std::int64_t* batch_out) {
    Session session(demo::demo_runtime().library, cfg);
    auto capture_started = Clock::now();
    for (const auto& [fn, args] : p.calls) {
        std::vector<Arg> call_args(args.begin(), args.end());
        session.register_call(fn, std::move(call_args));
    }
    double capture_ms = ms_since(capture_started);
    session.evaluate();
    const EvalStats& stats = session.last_eval_stats();
    if (batch_out && !stats.stages.empty()) *batch_out = stats.stages.front().batch_elements;
    return capture_ms + static_cast<double>(stats.plan_ns) / 1e6;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    std::size_t mid = xs.size() / 2;
    if (xs.size() % 2) return xs[mid];
    return 0.5 * (xs[mid - 1] + xs[mid]);
}

BenchResult run_pipeline(std::string workload, const PipelineSpec& p, Mode mode,
                         const BenchOptions& opts) {
    BenchResult result;
    result.workload = std::move(workload);
    result.mode = std::string(mode_name(mode));
    result.threads = mode == Mode::baseline_eager ? 1 : opts.threads;
    result.n = p.n;

    ExecConfig cfg = config_for(mode, opts);
    std::vector<double> walls;
    std::vector<double> overheads;
    std::int64_t batch = 0;
    int reps = std::max(1, opts.repetitions);
    for (int r = 0; r < reps; ++r) {
        auto started = Clock::now();
        if (mode == Mode::baseline_eager) {
            run_eager_once(p);
        } else {
            overheads.push_back(run_annotated_once(p, cfg, &batch));
        }
        walls.push_back(ms_since(started));
    }

    result.wall_ms = median(walls);
    result.capture_plan_ms = overheads.empty() ? 0.0 : median(overheads);
    result.batch_elements = mode == Mode::baseline_eager ? 0 : batch;
    for (const Value& out : p.checksum_outputs) result.checksum += checksum_of(out);
    return result;
}

PipelineSpec build_workload(std::string_view workload, const BenchOptions& opts) {
    if (workload == "blackscholes") return build_blackscholes(opts.n, opts.seed);
    if (workload == "haversine") return build_haversine(opts.n, opts.seed);
    raise(Errc::invalid_argument, "unknown workload '" + std::string(workload) + "'");
}

}  // namespace

std::string_view mode_name(Mode mode) {
    switch (mode) {
    case Mode::baseline_eager:
        return "baseline-eager";
    case Mode::sa_nopipe:
        return "sa-nopipe";
    case Mode::sa_pipe:
        return "sa-pipe";
    }
    return "?";
}

BenchResult run_blackscholes(Mode mode, const BenchOptions& opts) {
    return run_pipeline("blackscholes", build_blackscholes(opts.n, opts.seed), mode, opts);
}

BenchResult run_haversine(Mode mode, const BenchOptions& opts) {
    return run_pipeline("haversine", build_haversine(opts.n, opts.seed), mode, opts);
}

OptionPrice run_blackscholes_point(double spot, double strike, double rate, double volatility,
                                   double maturity) {
    PipelineSpec p = build_blackscholes(1, 1);
    // Overwrite the generated inputs with the requested point.
    auto set = [&](std::size_t call_idx, std::size_t arg_idx, double v) {
        p.calls[call_idx].second[arg_idx].as_mut<DenseArray>()[0] = v;
    };
    set(0, 1, spot);       // price, first use
    set(0, 2, strike);     // strike
    set(8, 1, maturity);   // t in vd_sqrt(t)
    set(5, 2, rate);       // rate in vd_add(w2, rate)
    set(3, 1, volatility); // vol
    set(3, 2, volatility);

    BenchOptions opts;
    opts.n = 1;
    opts.repetitions = 1;
    run_pipeline("blackscholes-point", p, Mode::sa_pipe, opts);
    return OptionPrice{p.checksum_outputs[0].as<DenseArray>()[0],
                       p.checksum_outputs[1].as<DenseArray>()[0]};
}

double run_haversine_point(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg,
                           double radius) {
    PipelineSpec p = build_haversine(1, 1, lat2_deg, lon2_deg, radius);
    p.calls[0].second[1].as_mut<DenseArray>()[0] = lat1_deg;
    p.calls[1].second[1].as_mut<DenseArray>()[0] = lon1_deg;

    BenchOptions opts;
    opts.n = 1;
    opts.repetitions = 1;
    run_pipeline("haversine-point", p, Mode::sa_pipe, opts);
    return p.checksum_outputs[0].as<DenseArray>()[0];
}

std::vector<BenchResult> sweep_batch(std::string_view workload,
                                     std::span<const std::int64_t> batches,
                                     const BenchOptions& opts) {
    PipelineSpec p = build_workload(workload, opts);
    std::vector<BenchResult> rows;
    for (std::int64_t batch : batches) {
        BenchOptions o = opts;
        o.batch = batch;
        rows.push_back(run_pipeline(std::string(workload), p, Mode::sa_pipe, o));
        rows.back().batch_elements = batch;
    }
    BenchOptions o = opts;
    o.batch.reset();  // heuristic-selected size
    rows.push_back(run_pipeline(std::string(workload) + "-auto", p, Mode::sa_pipe, o));
    return rows;
}

std::vector<IntensityResult> run_intensity(std::span<const std::string> kernels,
                                           std::span<const int> thread_counts,
                                           const BenchOptions& opts) {
    std::vector<IntensityResult> rows;
    for (const std::string& kernel : kernels) {
        PipelineSpec p = build_intensity(kernel, opts.n, opts.seed);
        for (int threads : thread_counts) {
            BenchOptions o = opts;
            o.threads = threads;

            IntensityResult row;
            row.kernel = kernel;
            row.threads = threads;

            BenchResult eager = run_pipeline("intensity-" + kernel, p, Mode::baseline_eager, o);
            row.eager_ms = eager.wall_ms;
            row.checksum_eager = eager.checksum;

            BenchResult sa = run_pipeline("intensity-" + kernel, p, Mode::sa_pipe, o);
            row.sa_ms = sa.wall_ms;
            row.checksum_sa = sa.checksum;

            row.speedup = row.sa_ms > 0.0 ? row.eager_ms / row.sa_ms : 0.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string explain(std::string_view workload, const BenchOptions& opts) {
    const auto& runtime = demo::demo_runtime();
    Session session(runtime.library, config_for(Mode::sa_pipe, opts));

    if (workload == "blackscholes" || workload == "haversine") {
        PipelineSpec p = build_workload(workload, opts);
        for (const auto& [fn, args] : p.calls)
            session.register_call(fn, std::vector<Arg>(args.begin(), args.end()));
    } else if (workload == "normalize2") {
        Value m = Value::wrap(DenseMatrix::zeros(64, 64));
        session.register_call("normalize_matrix_axis", {Arg(m), Arg(std::int64_t{0})});
        session.register_call("normalize_matrix_axis", {Arg(m), Arg(std::int64_t{1})});
    } else if (workload == "reducechain") {
        std::int64_t dim = 64;
        Value m = Value::wrap(DenseMatrix::zeros(dim, dim));
        auto v = session.register_call("sum_reduce_to_vector", {Arg(m), Arg(std::int64_t{0})});
        Value out = Value::wrap(DenseArray::zeros(dim));
        session.register_call("vd_sqrt", {Arg(dim), Arg(*v), Arg(out)});
    } else if (workload == "filterchain") {
        Value m = Value::wrap(DenseMatrix::zeros(64, 64));
        auto h = session.register_call("filter_zeroed_rows", {Arg(m)});
        session.register_call("scale_matrix", {Arg(*h), Arg(2.0)});
    } else {
        raise(Errc::invalid_argument, "unknown workload '" + std::string(workload) + "'");
    }
    return session.plan_current().to_string();
}

const char* const kCsvHeader = "workload,mode,threads,batch,wall_ms,checksum";

void write_csv(std::ostream& out, std::span<const BenchResult> results) {
    out << kCsvHeader << "\n";
    std::ostringstream row;
    row.precision(17);
    for (const BenchResult& r : results) {
        row.str("");
        row << r.workload << "," << r.mode << "," << r.threads << "," << r.batch_elements << ","
            << r.wall_ms << "," << r.checksum;
        out << row.str() << "\n";
    }
}

}  // namespace splitpipe::bench
