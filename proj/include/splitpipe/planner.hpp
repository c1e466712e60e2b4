#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitpipe/dataflow.hpp"
#include "splitpipe/split_types.hpp"

namespace splitpipe {

// Split type assigned to one argument or return position of one call.
struct TypeAssignment {
    enum class Mode {
        missing,          // "_": broadcast, never split
        concrete,         // a constructed split type or an unknown instance
        generic_pending,  // generic awaiting inference
        deferred_ctor,    // constructor over values unavailable until execution
    };

    Mode mode = Mode::missing;
    SplitType type;            // valid in concrete mode
    std::string generic_name;  // valid in generic_pending mode
    std::string ctor_kind;     // valid in deferred_ctor mode
    std::vector<ValueId> ctor_args;

    static TypeAssignment missing() { return {}; }
    static TypeAssignment concrete(SplitType st) {
        TypeAssignment a;
        a.mode = Mode::concrete;
        a.type = std::move(st);
        return a;
    }
};

// Assignments for one call: one entry per argument plus the return position.
struct NodeTypes {
    std::vector<TypeAssignment> args;
    TypeAssignment ret;  // missing when the call returns nothing
};

// How the executor obtains the split type of a stage input when the stage
// starts. Unknown-typed inputs re-split via the data type's default kind;
// constructors over values that were pending at plan time run once the
// values materialize.
struct SplitSpec {
    enum class Mode { concrete, default_of, construct };

    Mode mode = Mode::concrete;
    SplitType type;
    std::string ctor_kind;
    std::vector<ValueId> ctor_args;
};

struct StageArg {
    enum class Src { split_input, intermediate, broadcast };

    ValueId id = 0;
    Src src = Src::broadcast;
    bool is_mut = false;
};

struct StageCall {
    std::uint32_t node_id = 0;
    const AnnotatedFunction* fn = nullptr;
    std::vector<StageArg> args;
    std::optional<ValueId> ret;
};

// A value leaving a stage. Mutable buffers are written in place and need no
// merge; returned values merge through their kind (or the data type's
// default kind when the type is unknown).
struct MergeSpec {
    enum class Mode { kind_merge, default_merge, in_place };

    ValueId id = 0;
    Mode mode = Mode::kind_merge;
    SplitType type;
    std::string data_type;  // producing function's return type, for default merges
};

struct StageInput {
    ValueId id = 0;
    SplitSpec spec;
};

struct Stage {
    std::vector<StageCall> calls;
    std::vector<StageInput> input_splits;
    std::vector<MergeSpec> output_merges;
    std::int64_t piece_count = 0;  // set at execution time
};

struct ExecutionPlan {
    std::vector<Stage> stages;
    std::vector<ValueId> outputs;  // returned values and mutated buffers

    std::string to_string() const;  // one line per stage, for --explain
};

class Planner {
  public:
    explicit Planner(const SplitKindRegistry& registry) : registry_(&registry) {}

    // Evaluates constructor expressions against the captured argument
    // snapshots, mints unknown instances, and leaves generics pending.
    std::vector<NodeTypes> assign_split_types(const DataflowGraph& graph) const;

    // Fixed-point propagation of known types along edges into generics, with
    // per-data-type default fallback for generics no edge can determine.
    void infer(const DataflowGraph& graph, std::vector<NodeTypes>& types) const;

    // Greedy program-order packing: a call joins the current stage iff every
    // in-edge from a call already in the stage connects equal split types
    // (and values shared with the stage are split the same way).
    ExecutionPlan build_stages(const DataflowGraph& graph,
                               const std::vector<NodeTypes>& types) const;

    ExecutionPlan plan(const DataflowGraph& graph) const;

  private:
    const SplitKindRegistry* registry_;
};

}  // namespace splitpipe
