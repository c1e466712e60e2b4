#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "splitpipe/config.hpp"
#include "splitpipe/planner.hpp"

namespace splitpipe {

// Contiguous element range assigned to one worker. Ranges partition
// [0, total) with sizes differing by at most one.
struct WorkerRange {
    int worker_id = 0;
    std::int64_t start = 0;
    std::int64_t end = 0;

    std::int64_t size() const { return end - start; }
};

// batch = max(1, floor(C * l2_bytes / sum of element sizes)), or the override.
std::int64_t compute_batch_size(std::span<const RuntimeInfo> inputs, const ExecConfig& cfg);

std::vector<WorkerRange> partition(std::int64_t total, int workers);

using ValueEnv = std::map<ValueId, Value>;

class Executor {
  public:
    explicit Executor(const SplitKindRegistry& registry) : registry_(&registry) {}

    // Runs one stage against the environment: splits stage inputs, drives the
    // per-worker batch loop through the pipelined calls, and merges outputs
    // per worker and then globally. Merged outputs are written back into env.
    void run_stage(Stage& stage, const ExecConfig& cfg, ValueEnv& env,
                   StageTiming* timing = nullptr) const;

    // Executes stages in order; merged outputs of stage k feed stage k+1.
    // Returns the plan's outputs (returned values and mutated buffers).
    ValueEnv run_plan(ExecutionPlan& plan, const ExecConfig& cfg, ValueEnv env,
                      std::vector<StageTiming>* timings = nullptr) const;

  private:
    const SplitKindRegistry* registry_;
};

}  // namespace splitpipe
