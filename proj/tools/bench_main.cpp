// Benchmark CLI: runs the demo workloads eagerly and through the annotated
// runtime, sweeps batch sizes, and reports CSV timings.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "splitpipe/bench.hpp"

namespace {

using namespace splitpipe;

std::vector<std::int64_t> default_sweep() {
    std::vector<std::int64_t> batches;
    for (int p = 6; p <= 22; ++p) batches.push_back(std::int64_t{1} << p);
    return batches;
}

// Modes agree up to vector-lane regrouping at batch boundaries.
bool checksums_match(const std::vector<bench::BenchResult>& rows) {
    bool ok = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double scale = std::max({std::abs(rows[0].checksum), std::abs(rows[i].checksum), 1.0});
        if (std::abs(rows[i].checksum - rows[0].checksum) > 1e-12 * scale) {
            std::cerr << "checksum mismatch: " << rows[i].mode << "=" << rows[i].checksum
                      << " vs " << rows[0].mode << "=" << rows[0].checksum << "\n";
            ok = false;
        }
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"split-annotation runtime benchmarks"};
    app.get_formatter()->column_width(34);

    std::string workload;
    app.add_option("workload", workload,
                   "blackscholes | haversine | intensity | normalize2 | reducechain | "
                   "filterchain")
        ->required();

    bench::BenchOptions opts;
    std::int64_t batch = 0;
    bool no_pipeline = false;
    bool do_explain = false;
    bool do_sweep = false;
    std::string csv_path;

    app.add_option("--threads", opts.threads, "worker threads")
        ->envname("SPLITPIPE_THREADS");
    app.add_option("--n", opts.n, "elements per array")->envname("SPLITPIPE_N");
    app.add_option("--batch", batch, "fixed batch size (0 = heuristic)")
        ->envname("SPLITPIPE_BATCH");
    app.add_option("--l2-bytes", opts.l2_bytes, "assumed L2 size in bytes")
        ->envname("SPLITPIPE_L2_BYTES");
    app.add_option("--c-constant", opts.c_constant, "batch-size constant C")
        ->envname("SPLITPIPE_C_CONSTANT");
    app.add_flag("--no-pipeline", no_pipeline, "disable pipelining in annotated runs")
        ->envname("SPLITPIPE_NO_PIPELINE");
    app.add_flag("--pedantic", opts.pedantic, "enable pedantic split checks")
        ->envname("SPLITPIPE_PEDANTIC");
    app.add_option("--csv", csv_path, "write results to this file instead of stdout")
        ->envname("SPLITPIPE_CSV");
    app.add_flag("--explain", do_explain, "print the stage plan and exit");
    app.add_option("--seed", opts.seed, "input seed")->envname("SPLITPIPE_SEED");
    app.add_option("--reps", opts.repetitions, "timing repetitions (median)")
        ->envname("SPLITPIPE_REPS");
    app.add_flag("--sweep", do_sweep, "sweep batch sizes (powers of two, 2^6..2^22)");

    CLI11_PARSE(app, argc, argv);
    if (batch > 0) opts.batch = batch;

    try {
        if (do_explain) {
            std::cout << bench::explain(workload, opts);
            return 0;
        }

        std::vector<bench::BenchResult> rows;

        if (do_sweep) {
            if (workload != "blackscholes" && workload != "haversine") {
                std::cerr << "--sweep supports blackscholes and haversine\n";
                return 2;
            }
            auto batches = default_sweep();
            rows = bench::sweep_batch(workload, batches, opts);
        } else if (workload == "intensity") {
            std::vector<std::string> kernels = {"add", "mul", "sqrt", "div", "erf", "exp"};
            int hw = static_cast<int>(std::thread::hardware_concurrency());
            std::vector<int> threads;
            for (int t : {1, 2, 4, 8, 16})
                if (t <= std::max(1, hw)) threads.push_back(t);
            auto results = bench::run_intensity(kernels, threads, opts);

            std::ostream* out = &std::cout;
            std::ofstream file;
            if (!csv_path.empty()) {
                file.open(csv_path);
                out = &file;
            }
            *out << "kernel,threads,eager_ms,sa_ms,speedup\n";
            bool ok = true;
            for (const auto& r : results) {
                *out << r.kernel << "," << r.threads << "," << r.eager_ms << "," << r.sa_ms
                     << "," << r.speedup << "\n";
                double scale = std::max({std::abs(r.checksum_eager),
                                         std::abs(r.checksum_sa), 1.0});
                if (std::abs(r.checksum_eager - r.checksum_sa) > 1e-12 * scale) ok = false;
            }
            return ok ? 0 : 1;
        } else if (workload == "blackscholes" || workload == "haversine") {
            auto run = workload == "blackscholes" ? bench::run_blackscholes
                                                  : bench::run_haversine;
            rows.push_back(run(bench::Mode::baseline_eager, opts));
            if (!no_pipeline) rows.push_back(run(bench::Mode::sa_nopipe, opts));
            rows.push_back(run(no_pipeline ? bench::Mode::sa_nopipe : bench::Mode::sa_pipe,
                               opts));
        } else {
            std::cerr << "workload '" << workload << "' only supports --explain\n";
            return 2;
        }

        if (!csv_path.empty()) {
            std::ofstream file(csv_path);
            bench::write_csv(file, rows);
        } else {
            bench::write_csv(std::cout, rows);
        }
        return checksums_match(rows) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
