#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "splitpipe/config.hpp"
#include "splitpipe/library.hpp"

namespace splitpipe {

struct ExecutionPlan;

// Identifies one value flowing through a captured graph: a buffer passed by
// the application, a scalar snapshot, or the pending result of a call.
using ValueId = std::uint64_t;

struct ArgSnapshot {
    ValueId id = 0;
    Value value;          // empty while pending
    bool pending = false; // true when the value is produced by an earlier node
    bool is_mut = false;  // from the annotation
};

struct CallNode {
    std::uint32_t node_id = 0;  // doubles as the program-order index
    const AnnotatedFunction* fn = nullptr;
    std::vector<ArgSnapshot> args;
    std::optional<ValueId> ret;
};

struct Edge {
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    ValueId value = 0;

    auto operator<=>(const Edge&) const = default;
};

struct DataflowGraph {
    std::vector<CallNode> nodes;
    std::vector<Edge> edges;  // producer -> consumer data dependencies

    bool empty() const { return nodes.empty(); }
    std::vector<const Edge*> in_edges(std::uint32_t node) const;
};

namespace detail {
struct SessionState;
}

// Deferred result of a captured call. Reading it forces evaluation of the
// graph captured so far. Copies share the underlying value; alias() creates a
// distinct handle that resolves to the same data once evaluated.
class LazyHandle {
  public:
    ValueId id() const { return id_; }
    bool evaluated() const;
    Value force() const;
    LazyHandle alias() const;

  private:
    friend class Session;
    friend struct detail::SessionState;
    LazyHandle(std::shared_ptr<detail::SessionState> state, ValueId id)
        : state_(std::move(state)), id_(id) {}

    std::shared_ptr<detail::SessionState> state_;
    ValueId id_ = 0;
};

// Argument to a captured call: either a materialized value or a lazy handle.
// Scalars convert implicitly.
class Arg {
  public:
    Arg(Value v) : repr_(std::move(v)) {}
    Arg(LazyHandle h) : repr_(std::move(h)) {}
    Arg(std::int64_t v) : repr_(Value::wrap<std::int64_t>(v)) {}
    Arg(int v) : repr_(Value::wrap<std::int64_t>(v)) {}
    Arg(double v) : repr_(Value::wrap<double>(v)) {}

    const Value* value() const { return std::get_if<Value>(&repr_); }
    const LazyHandle* handle() const { return std::get_if<LazyHandle>(&repr_); }

  private:
    std::variant<Value, LazyHandle> repr_;
};

// Captures annotated calls into a dataflow graph and evaluates it on demand.
// Capture is single-threaded; evaluation fans out per the ExecConfig.
class Session {
  public:
    Session(const FunctionLibrary& library, ExecConfig config = {});
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    // Appends a call to the graph. Returns a pending handle iff the
    // function's annotation declares a return split type.
    std::optional<LazyHandle> register_call(std::string_view fn_name, std::vector<Arg> args);

    Value force(const LazyHandle& handle);

    // Evaluation point for externally allocated buffers mutated by captured
    // calls: evaluates the graph iff the buffer has a pending writer.
    void touch(const Value& buffer);

    // Plans and executes the captured graph, then resets it. No-op when the
    // graph is empty. On failure the graph is left captured and no handle is
    // marked evaluated.
    void evaluate();

    const DataflowGraph& graph() const;
    ExecutionPlan plan_current() const;

    // Timings of the most recent evaluate(), for overhead accounting.
    const EvalStats& last_eval_stats() const;

    ExecConfig& config();
    const ExecConfig& config() const;

  private:
    std::shared_ptr<detail::SessionState> state_;
};

}  // namespace splitpipe
