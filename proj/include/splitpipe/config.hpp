#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace splitpipe {

// Execution configuration shared by the session and the executor.
struct ExecConfig {
    int workers = 1;
    std::int64_t l2_bytes = 262144;
    double batch_constant = 1.0;  // C in batch = C * l2_bytes / sum(element sizes)
    std::optional<std::int64_t> batch_override;
    bool pedantic = false;
    bool pipelining_enabled = true;
    std::ostream* trace = nullptr;  // when set, one line per registered call

    void validate() const;
};

// Per-stage execution record.
struct StageTiming {
    int stage_index = 0;
    std::int64_t split_ns = 0;
    std::int64_t exec_ns = 0;
    std::int64_t merge_ns = 0;
    std::int64_t piece_count = 0;
    std::int64_t batch_elements = 0;
};

// Filled by Session::evaluate for overhead accounting.
struct EvalStats {
    std::int64_t plan_ns = 0;
    std::int64_t total_ns = 0;
    std::vector<StageTiming> stages;
};

}  // namespace splitpipe
