#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitpipe/demolibs.hpp"

namespace splitpipe::bench {

enum class Mode { baseline_eager, sa_nopipe, sa_pipe };

std::string_view mode_name(Mode mode);

struct BenchOptions {
    int threads = 1;
    std::int64_t n = 1 << 21;
    std::optional<std::int64_t> batch;
    std::int64_t l2_bytes = 262144;
    double c_constant = 1.0;
    bool pedantic = false;
    std::uint64_t seed = 42;
    int repetitions = 5;  // wall time is the median over these
};

struct BenchResult {
    std::string workload;
    std::string mode;
    int threads = 1;
    std::int64_t n = 0;
    std::int64_t batch_elements = 0;  // chosen batch (0 for eager runs)
    double wall_ms = 0.0;             // median over repetitions
    double checksum = 0.0;
    double capture_plan_ms = 0.0;     // register + plan share, annotated modes
};

// Options-pricing pipeline of 32 vector-kernel calls over one shared length.
BenchResult run_blackscholes(Mode mode, const BenchOptions& opts);

// Distance-to-fixed-point pipeline of 18 vector-kernel calls.
BenchResult run_haversine(Mode mode, const BenchOptions& opts);

// Single-point runs through the annotated runtime, for closed-form checks.
struct OptionPrice {
    double call = 0.0;
    double put = 0.0;
};
OptionPrice run_blackscholes_point(double spot, double strike, double rate, double volatility,
                                   double maturity);
double run_haversine_point(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg,
                           double radius);

// One row per batch size plus one row for the heuristic's own choice
// (batch_elements records the size used).
std::vector<BenchResult> sweep_batch(std::string_view workload,
                                     std::span<const std::int64_t> batches,
                                     const BenchOptions& opts);

struct IntensityResult {
    std::string kernel;
    int threads = 1;
    double eager_ms = 0.0;
    double sa_ms = 0.0;
    double speedup = 0.0;
    double checksum_eager = 0.0;
    double checksum_sa = 0.0;
};

// Runs each kernel ten times over one large array, annotated vs not, at each
// thread count. Kernel names: add, mul, sqrt, div, erf, exp.
std::vector<IntensityResult> run_intensity(std::span<const std::string> kernels,
                                           std::span<const int> thread_counts,
                                           const BenchOptions& opts);

// Stage breakdown of a workload's captured graph without executing it.
// Workloads: blackscholes, haversine, normalize2, reducechain, filterchain.
std::string explain(std::string_view workload, const BenchOptions& opts);

extern const char* const kCsvHeader;  // workload,mode,threads,batch,wall_ms,checksum
void write_csv(std::ostream& out, std::span<const BenchResult> results);

}  // namespace splitpipe::bench
