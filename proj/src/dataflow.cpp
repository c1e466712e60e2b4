#include "splitpipe/dataflow.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <set>

#include "splitpipe/executor.hpp"
#include "splitpipe/planner.hpp"

namespace splitpipe {

std::vector<const Edge*> DataflowGraph::in_edges(std::uint32_t node) const {
    std::vector<const Edge*> out;
    for (const Edge& e : edges)
        if (e.to == node) out.push_back(&e);
    return out;
}

void ExecConfig::validate() const {
    if (workers < 1) raise(Errc::invalid_argument, "workers must be >= 1");
    if (l2_bytes <= 0) raise(Errc::invalid_argument, "l2_bytes must be positive");
    if (batch_constant <= 0.0) raise(Errc::invalid_argument, "batch constant must be positive");
    if (batch_override && *batch_override < 1)
        raise(Errc::invalid_argument, "batch override must be >= 1");
}

namespace detail {

struct ValueEntry {
    bool evaluated = false;
    Value value;                       // set when evaluated (or materialized buffer)
    std::optional<ValueId> alias_of;   // alias handles resolve through this
    std::optional<std::uint32_t> producer;  // node producing it in the current graph
};

struct SessionState {
    const FunctionLibrary* library = nullptr;
    ExecConfig config;

    DataflowGraph graph;
    std::set<Edge> edge_set;
    std::map<ValueId, ValueEntry> values;
    std::map<const void*, ValueId> buffer_ids;
    std::map<ValueId, std::uint32_t> last_writer;
    ValueId next_value_id = 1;
    bool evaluating = false;
    EvalStats stats;

    ValueId canonical(ValueId id) const {
        auto it = values.find(id);
        while (it != values.end() && it->second.alias_of) {
            it = values.find(*it->second.alias_of);
        }
        return it == values.end() ? id : it->first;
    }

    ValueEntry& entry(ValueId id) {
        auto it = values.find(canonical(id));
        if (it == values.end())
            raise(Errc::invalid_argument, "handle does not belong to this session");
        return it->second;
    }

    ValueId id_for_buffer(const Value& v) {
        auto [it, inserted] = buffer_ids.emplace(v.identity(), next_value_id);
        if (inserted) {
            ++next_value_id;
            ValueEntry e;
            e.evaluated = true;
            e.value = v;
            values.emplace(it->second, std::move(e));
        }
        return it->second;
    }

    void add_edge(std::uint32_t from, std::uint32_t to, ValueId v) {
        if (from == to) return;
        Edge e{from, to, v};
        if (edge_set.insert(e).second) graph.edges.push_back(e);
    }

    void reset_graph() {
        graph.nodes.clear();
        graph.edges.clear();
        edge_set.clear();
        buffer_ids.clear();
        last_writer.clear();
        // Producer links refer to nodes of the cleared graph.
        for (auto& [id, e] : values) e.producer.reset();
    }

    void evaluate();
    Value force(ValueId id);
};

void SessionState::evaluate() {
    if (graph.empty()) return;
    if (evaluating) raise(Errc::graph_sealed, "evaluate() re-entered during evaluation");
    evaluating = true;

    using Clock = std::chrono::steady_clock;
    auto as_ns = [](Clock::duration d) {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(d).count();
    };

    try {
        auto started = Clock::now();
        Planner planner(library->registry());
        ExecutionPlan plan = planner.plan(graph);
        auto planned = Clock::now();

        ValueEnv env;
        for (const CallNode& node : graph.nodes)
            for (const ArgSnapshot& arg : node.args)
                if (!arg.pending) env.emplace(arg.id, arg.value);

        EvalStats run_stats;
        run_stats.plan_ns = as_ns(planned - started);

        Executor executor(library->registry());
        ValueEnv outputs = executor.run_plan(plan, config, std::move(env), &run_stats.stages);

        for (auto& [id, value] : outputs) {
            ValueEntry& e = values[id];
            e.evaluated = true;
            e.value = value;
        }
        run_stats.total_ns = as_ns(Clock::now() - started);
        stats = std::move(run_stats);
    } catch (...) {
        evaluating = false;
        throw;
    }
    evaluating = false;
    reset_graph();
}

Value SessionState::force(ValueId id) {
    ValueEntry* e = &entry(id);
    if (!e->evaluated) {
        evaluate();
        e = &entry(id);
        if (!e->evaluated)
            raise(Errc::internal, "value still pending after evaluation");
    }
    return e->value;
}

}  // namespace detail

bool LazyHandle::evaluated() const {
    return state_->entry(id_).evaluated;
}

Value LazyHandle::force() const {
    return state_->force(id_);
}

LazyHandle LazyHandle::alias() const {
    ValueId alias_id = state_->next_value_id++;
    detail::ValueEntry e;
    e.alias_of = id_;
    state_->values.emplace(alias_id, std::move(e));
    return LazyHandle(state_, alias_id);
}

Session::Session(const FunctionLibrary& library, ExecConfig config)
    : state_(std::make_shared<detail::SessionState>()) {
    config.validate();
    state_->library = &library;
    state_->config = config;
}

Session::~Session() = default;

std::optional<LazyHandle> Session::register_call(std::string_view fn_name,
                                                 std::vector<Arg> args) {
    detail::SessionState& st = *state_;
    if (st.evaluating)
        raise(Errc::graph_sealed, "register() called during evaluation");

    const AnnotatedFunction& fn = st.library->at(fn_name);
    if (args.size() != fn.sa.params.size())
        raise(Errc::invalid_argument,
              "call to '" + fn.name + "' passes " + std::to_string(args.size()) +
                  " arguments, annotation declares " + std::to_string(fn.sa.params.size()));

    CallNode node;
    node.node_id = static_cast<std::uint32_t>(st.graph.nodes.size());
    node.fn = &fn;
    node.args.reserve(args.size());

    for (std::size_t i = 0; i < args.size(); ++i) {
        ArgSnapshot snap;
        snap.is_mut = fn.sa.params[i].is_mut;
        if (const LazyHandle* h = args[i].handle()) {
            ValueId canon = st.canonical(h->id());
            const detail::ValueEntry& e = st.entry(canon);
            if (e.evaluated) {
                // Handles from an earlier evaluation behave like plain values.
                snap.id = st.id_for_buffer(e.value);
                snap.value = e.value;
            } else {
                snap.id = canon;
                snap.pending = true;
            }
        } else {
            const Value& v = *args[i].value();
            snap.id = st.id_for_buffer(v);
            snap.value = v;
        }
        node.args.push_back(std::move(snap));
    }

    // Dependency edges: returned values edge from their producer, buffers
    // edge from their most recent writer (covers write-after-write too).
    for (const ArgSnapshot& snap : node.args) {
        if (snap.pending) {
            const detail::ValueEntry& e = st.entry(snap.id);
            if (e.producer) st.add_edge(*e.producer, node.node_id, snap.id);
        }
        auto w = st.last_writer.find(snap.id);
        if (w != st.last_writer.end()) st.add_edge(w->second, node.node_id, snap.id);
    }
    for (const ArgSnapshot& snap : node.args)
        if (snap.is_mut) st.last_writer[snap.id] = node.node_id;

    std::optional<LazyHandle> handle;
    if (fn.sa.return_expr) {
        ValueId rid = st.next_value_id++;
        detail::ValueEntry e;
        e.producer = node.node_id;
        st.values.emplace(rid, std::move(e));
        node.ret = rid;
        handle = LazyHandle(state_, rid);
    }

    if (st.config.trace) {
        std::ostream& out = *st.config.trace;
        out << node.node_id << " " << fn.name << " [";
        for (std::size_t i = 0; i < node.args.size(); ++i)
            out << (i ? " " : "") << node.args[i].id;
        out << "] mut=";
        for (const ArgSnapshot& snap : node.args) out << (snap.is_mut ? '1' : '0');
        if (node.ret) out << " -> " << *node.ret;
        out << "\n";
    }

    st.graph.nodes.push_back(std::move(node));
    return handle;
}

Value Session::force(const LazyHandle& handle) {
    return state_->force(handle.id());
}

void Session::touch(const Value& buffer) {
    auto it = state_->buffer_ids.find(buffer.identity());
    if (it == state_->buffer_ids.end()) return;
    if (state_->last_writer.count(it->second)) state_->evaluate();
}

void Session::evaluate() {
    state_->evaluate();
}

const DataflowGraph& Session::graph() const {
    return state_->graph;
}

ExecutionPlan Session::plan_current() const {
    Planner planner(state_->library->registry());
    return planner.plan(state_->graph);
}

const EvalStats& Session::last_eval_stats() const {
    return state_->stats;
}

ExecConfig& Session::config() {
    return state_->config;
}

const ExecConfig& Session::config() const {
    return state_->config;
}

}  // namespace splitpipe
