#include "splitpipe/planner.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace splitpipe {

namespace {

// Positions are argument indices; the return position is arg_count.
std::size_t return_position(const CallNode& node) {
    return node.args.size();
}

TypeAssignment& position_type(NodeTypes& nt, std::size_t pos) {
    return pos < nt.args.size() ? nt.args[pos] : nt.ret;
}

// True when two assignments describe the same split for one shared value:
// ordinary types compare structurally, unknown instances by identity.
bool same_split_intent(const TypeAssignment& a, const TypeAssignment& b) {
    if (a.mode != TypeAssignment::Mode::concrete || b.mode != TypeAssignment::Mode::concrete)
        return false;
    if (a.type.is_unknown() || b.type.is_unknown())
        return a.type.unknown_id == b.type.unknown_id;
    return split_type_eq(a.type, b.type);
}

}  // namespace

std::vector<NodeTypes> Planner::assign_split_types(const DataflowGraph& graph) const {
    std::vector<NodeTypes> types(graph.nodes.size());

    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        const CallNode& node = graph.nodes[n];
        const SplitAnnotation& sa = node.fn->sa;
        NodeTypes& nt = types[n];
        nt.args.resize(node.args.size());

        auto assign_expr = [&](const SplitTypeExpr& expr) -> TypeAssignment {
            switch (expr.kind) {
            case SplitTypeExpr::Kind::missing:
                return TypeAssignment::missing();
            case SplitTypeExpr::Kind::unknown:
                return TypeAssignment::concrete(SplitType::make_unknown());
            case SplitTypeExpr::Kind::generic: {
                TypeAssignment a;
                a.mode = TypeAssignment::Mode::generic_pending;
                a.generic_name = expr.name;
                return a;
            }
            case SplitTypeExpr::Kind::constructor: {
                std::vector<Value> ctor_values;
                std::vector<ValueId> ctor_ids;
                bool any_pending = false;
                for (const std::string& arg_name : expr.args) {
                    int idx = sa.index_of(arg_name);
                    if (idx < 0)
                        raise(Errc::unknown_reference,
                              "constructor argument '" + arg_name + "' in '" + node.fn->name +
                                  "' names no parameter");
                    const ArgSnapshot& snap = node.args[static_cast<std::size_t>(idx)];
                    ctor_ids.push_back(snap.id);
                    if (snap.pending)
                        any_pending = true;
                    else
                        ctor_values.push_back(snap.value);
                }
                if (any_pending) {
                    // The shape this constructor needs is produced by an
                    // earlier call; resolve it when the stage starts.
                    TypeAssignment a;
                    a.mode = TypeAssignment::Mode::deferred_ctor;
                    a.ctor_kind = expr.name;
                    a.ctor_args = std::move(ctor_ids);
                    return a;
                }
                try {
                    return TypeAssignment::concrete(
                        registry_->construct(expr.name, ctor_values));
                } catch (const Error& e) {
                    if (e.code() == Errc::constructor_failure)
                        raise(Errc::constructor_failure,
                              std::string(e.what()) + " (call " + std::to_string(node.node_id) +
                                  " '" + node.fn->name + "')");
                    throw;
                }
            }
            }
            raise(Errc::internal, "unhandled expression kind");
        };

        for (std::size_t i = 0; i < node.args.size(); ++i)
            nt.args[i] = assign_expr(sa.params[i].expr);
        nt.ret = sa.return_expr ? assign_expr(*sa.return_expr) : TypeAssignment::missing();
    }
    return types;
}

void Planner::infer(const DataflowGraph& graph, std::vector<NodeTypes>& types) const {
    // Per-node generic bindings. A generic bound anywhere in an annotation
    // binds every same-named position of that call. Bindings stay in this map
    // until the fixed point completes, so every edge pushing a type into a
    // generic is checked against what the generic already holds.
    std::vector<std::map<std::string, SplitType>> bindings(graph.nodes.size());

    auto bind = [&](std::size_t n, const std::string& name, const SplitType& st) {
        auto [it, inserted] = bindings[n].emplace(name, st);
        if (inserted) return true;
        const SplitType& prev = it->second;
        bool consistent;
        if (prev.is_unknown() || st.is_unknown())
            consistent = prev.unknown_id == st.unknown_id;
        else
            consistent = split_type_eq(prev, st);
        if (!consistent)
            raise(Errc::inference_conflict,
                  "generic '" + name + "' of '" + graph.nodes[n].fn->name + "' bound to both " +
                      prev.to_string() + " and " + st.to_string());
        return false;
    };

    // Type a producer sends along an edge: its return position if it returns
    // the value, else its last mut position writing it. Generic positions
    // read through their binding; unresolved ones send nothing yet.
    auto sent_type = [&](const Edge& e) -> const SplitType* {
        const CallNode& p = graph.nodes[e.from];
        const TypeAssignment* pos = nullptr;
        if (p.ret && *p.ret == e.value) pos = &types[e.from].ret;
        for (std::size_t i = 0; i < p.args.size(); ++i)
            if (p.args[i].is_mut && p.args[i].id == e.value) pos = &types[e.from].args[i];
        if (!pos) return nullptr;
        if (pos->mode == TypeAssignment::Mode::concrete) return &pos->type;
        if (pos->mode == TypeAssignment::Mode::generic_pending) {
            auto it = bindings[e.from].find(pos->generic_name);
            if (it != bindings[e.from].end()) return &it->second;
        }
        return nullptr;
    };

    auto propagate = [&] {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Edge& e : graph.edges) {
                const SplitType* src = sent_type(e);
                if (!src) continue;
                const CallNode& consumer = graph.nodes[e.to];
                for (std::size_t i = 0; i < consumer.args.size(); ++i) {
                    if (consumer.args[i].id != e.value) continue;
                    const TypeAssignment& dst = types[e.to].args[i];
                    if (dst.mode != TypeAssignment::Mode::generic_pending) continue;
                    if (bind(e.to, dst.generic_name, *src)) changed = true;
                }
            }
        }
    };

    propagate();

    // Fallback: resolve the first still-unbound generic from its argument's
    // data-type default, then let the new knowledge flow before the next one.
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t n = 0; n < graph.nodes.size() && !progress; ++n) {
            const CallNode& node = graph.nodes[n];
            for (std::size_t i = 0; i < node.args.size(); ++i) {
                const TypeAssignment& a = types[n].args[i];
                if (a.mode != TypeAssignment::Mode::generic_pending) continue;
                if (bindings[n].count(a.generic_name)) continue;
                if (node.args[i].pending) continue;  // producer's type arrives via edges
                const Value& v = node.args[i].value;
                const SplitKind* kind = registry_->default_for(v.type_name());
                if (!kind || !kind->default_constructor)
                    raise(Errc::inference_conflict,
                          "generic '" + a.generic_name + "' of '" + node.fn->name +
                              "' cannot be inferred and data type '" + std::string(v.type_name()) +
                              "' has no default split kind");
                bind(n, a.generic_name, kind->default_constructor(v));
                propagate();
                progress = true;
                break;
            }
        }
    }

    for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
        NodeTypes& nt = types[n];
        for (std::size_t pos = 0; pos <= return_position(graph.nodes[n]); ++pos) {
            TypeAssignment& a = position_type(nt, pos);
            if (a.mode != TypeAssignment::Mode::generic_pending) continue;
            auto it = bindings[n].find(a.generic_name);
            if (it == bindings[n].end())
                raise(Errc::inference_conflict, "generic '" + a.generic_name + "' of '" +
                                                    graph.nodes[n].fn->name +
                                                    "' could not be resolved");
            a = TypeAssignment::concrete(it->second);
        }
    }
}

ExecutionPlan Planner::build_stages(const DataflowGraph& graph,
                                    const std::vector<NodeTypes>& types) const {
    ExecutionPlan plan;
    if (graph.nodes.empty()) return plan;

    // node -> stage index, filled as stages grow.
    std::vector<int> stage_of(graph.nodes.size(), -1);

    // Per-stage packing state: split intent per value (two uses of one value
    // must split it the same way), the element total the stage's inputs are
    // known to produce, and whether any input's total is unknowable before
    // execution. Values with unknowable totals may only be shared, never
    // combined with unrelated inputs, so the executor's element-count check
    // cannot fire on programs that were valid eagerly.
    std::map<ValueId, TypeAssignment> stage_value_types;
    std::set<ValueId> stage_produced;
    std::optional<std::int64_t> stage_total;
    bool stage_has_undetermined = false;

    std::vector<std::vector<std::uint32_t>> stage_nodes;
    stage_nodes.emplace_back();

    auto current_stage = [&]() { return static_cast<int>(stage_nodes.size()) - 1; };

    // Element total one split input will produce, when determinable while
    // planning. Info functions that inspect the (possibly absent) data make
    // it undeterminable.
    auto input_total = [&](const ArgSnapshot& snap,
                           const TypeAssignment& a) -> std::optional<std::int64_t> {
        if (a.mode != TypeAssignment::Mode::concrete || a.type.is_unknown()) return std::nullopt;
        try {
            return registry_->runtime_info(snap.value, a.type).total_elements;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    for (std::uint32_t n = 0; n < graph.nodes.size(); ++n) {
        const CallNode& node = graph.nodes[n];
        const NodeTypes& nt = types[n];

        // Within one call, a value cannot be split two different ways.
        std::map<ValueId, const TypeAssignment*> node_value_types;
        for (std::size_t i = 0; i < node.args.size(); ++i) {
            const TypeAssignment& a = nt.args[i];
            if (a.mode == TypeAssignment::Mode::missing) continue;
            auto [it, inserted] = node_value_types.emplace(node.args[i].id, &a);
            if (!inserted && !same_split_intent(*it->second, a))
                raise(Errc::invalid_argument,
                      "call '" + node.fn->name + "' passes one value with two split types");
        }

        bool joins = true;
        for (const Edge* e : graph.in_edges(n)) {
            if (stage_of[e->from] != current_stage()) continue;
            // Producer side type for this value.
            const CallNode& p = graph.nodes[e->from];
            const TypeAssignment* src = nullptr;
            if (p.ret && *p.ret == e->value) src = &types[e->from].ret;
            for (std::size_t i = 0; i < p.args.size(); ++i)
                if (p.args[i].is_mut && p.args[i].id == e->value) src = &types[e->from].args[i];
            if (!src) continue;
            for (std::size_t i = 0; i < node.args.size() && joins; ++i) {
                if (node.args[i].id != e->value) continue;
                const TypeAssignment& dst = nt.args[i];
                if (dst.mode == TypeAssignment::Mode::missing) continue;
                if (src->mode != TypeAssignment::Mode::concrete ||
                    dst.mode != TypeAssignment::Mode::concrete ||
                    !split_type_eq(src->type, dst.type))
                    joins = false;
            }
            if (!joins) break;
        }
        if (joins) {
            for (const auto& [vid, a] : node_value_types) {
                auto it = stage_value_types.find(vid);
                if (it != stage_value_types.end() && !same_split_intent(it->second, *a)) {
                    joins = false;
                    break;
                }
            }
        }

        // The node's stage inputs: split-typed values not produced in-stage.
        std::optional<std::int64_t> node_total;
        bool node_new_undetermined = false;
        if (joins) {
            for (std::size_t i = 0; i < node.args.size(); ++i) {
                const TypeAssignment& a = nt.args[i];
                if (a.mode == TypeAssignment::Mode::missing) continue;
                ValueId vid = node.args[i].id;
                if (stage_produced.count(vid)) continue;  // consumed as pieces
                auto total = input_total(node.args[i], a);
                if (total) {
                    if (!node_total) node_total = total;
                } else if (!stage_value_types.count(vid)) {
                    node_new_undetermined = true;
                }
            }
            bool stage_empty = stage_nodes.back().empty();
            if (!stage_empty) {
                if (stage_total && node_total && *stage_total != *node_total) joins = false;
                if (node_new_undetermined) joins = false;
                if (stage_has_undetermined) {
                    for (const auto& [vid, a] : node_value_types)
                        if (!stage_value_types.count(vid) && !stage_produced.count(vid))
                            joins = false;
                }
            }
        }

        if (!joins && !stage_nodes.back().empty()) {
            stage_nodes.emplace_back();
            stage_value_types.clear();
            stage_produced.clear();
            stage_total.reset();
            stage_has_undetermined = false;
        }
        stage_nodes.back().push_back(n);
        stage_of[n] = current_stage();
        for (const auto& [vid, a] : node_value_types) stage_value_types.emplace(vid, *a);
        if (node.ret) stage_produced.insert(*node.ret);
        for (std::size_t i = 0; i < node.args.size(); ++i) {
            const TypeAssignment& a = nt.args[i];
            if (a.mode == TypeAssignment::Mode::missing) continue;
            if (stage_produced.count(node.args[i].id)) continue;
            auto total = input_total(node.args[i], a);
            if (total && !stage_total) stage_total = total;
            if (!total) stage_has_undetermined = true;
        }
    }

    // Values read by stages after the one that produces them, or aliased by
    // handles, must materialize at the producing stage's boundary. Returned
    // values always materialize; mutable buffers are in place already.
    std::map<ValueId, int> produced_in;  // value -> stage producing it

    for (std::size_t s = 0; s < stage_nodes.size(); ++s) {
        Stage stage;
        std::set<ValueId> seen_inputs;
        std::set<ValueId> merged;

        for (std::uint32_t n : stage_nodes[s]) {
            const CallNode& node = graph.nodes[n];
            const NodeTypes& nt = types[n];
            StageCall call;
            call.node_id = n;
            call.fn = node.fn;
            call.ret = node.ret;

            for (std::size_t i = 0; i < node.args.size(); ++i) {
                const ArgSnapshot& snap = node.args[i];
                const TypeAssignment& a = nt.args[i];
                StageArg arg;
                arg.id = snap.id;
                arg.is_mut = snap.is_mut;

                if (a.mode == TypeAssignment::Mode::missing) {
                    arg.src = StageArg::Src::broadcast;
                } else {
                    auto it = produced_in.find(snap.id);
                    bool in_stage = it != produced_in.end() && it->second == static_cast<int>(s);
                    if (in_stage) {
                        arg.src = StageArg::Src::intermediate;
                    } else {
                        arg.src = StageArg::Src::split_input;
                        if (seen_inputs.insert(snap.id).second) {
                            StageInput input;
                            input.id = snap.id;
                            switch (a.mode) {
                            case TypeAssignment::Mode::concrete:
                                if (a.type.is_unknown()) {
                                    input.spec.mode = SplitSpec::Mode::default_of;
                                } else {
                                    input.spec.mode = SplitSpec::Mode::concrete;
                                    input.spec.type = a.type;
                                }
                                break;
                            case TypeAssignment::Mode::deferred_ctor:
                                input.spec.mode = SplitSpec::Mode::construct;
                                input.spec.ctor_kind = a.ctor_kind;
                                input.spec.ctor_args = a.ctor_args;
                                break;
                            default:
                                raise(Errc::internal, "unresolved split type at stage build");
                            }
                            stage.input_splits.push_back(std::move(input));
                        }
                    }
                }
                call.args.push_back(arg);
            }

            if (node.ret) {
                produced_in[*node.ret] = static_cast<int>(s);
                if (merged.insert(*node.ret).second) {
                    MergeSpec m;
                    m.id = *node.ret;
                    m.data_type = node.fn->signature.return_type;
                    const TypeAssignment& rt = nt.ret;
                    if (rt.mode == TypeAssignment::Mode::concrete && !rt.type.is_unknown()) {
                        m.mode = MergeSpec::Mode::kind_merge;
                        m.type = rt.type;
                    } else {
                        m.mode = MergeSpec::Mode::default_merge;
                    }
                    stage.output_merges.push_back(std::move(m));
                }
            }
            for (std::size_t i = 0; i < node.args.size(); ++i) {
                if (!node.args[i].is_mut) continue;
                if (!merged.insert(node.args[i].id).second) continue;
                MergeSpec m;
                m.id = node.args[i].id;
                m.mode = MergeSpec::Mode::in_place;
                stage.output_merges.push_back(std::move(m));
            }

            stage.calls.push_back(std::move(call));
        }
        plan.stages.push_back(std::move(stage));
    }

    // Plan outputs: every produced value and every mutated buffer.
    std::set<ValueId> outputs;
    for (const CallNode& node : graph.nodes) {
        if (node.ret) outputs.insert(*node.ret);
        for (const ArgSnapshot& snap : node.args)
            if (snap.is_mut) outputs.insert(snap.id);
    }
    plan.outputs.assign(outputs.begin(), outputs.end());
    return plan;
}

ExecutionPlan Planner::plan(const DataflowGraph& graph) const {
    // Capture order is producer-before-consumer by construction; a back edge
    // would mean the graph was assembled by hand incorrectly.
    for (const Edge& e : graph.edges)
        if (e.from >= e.to)
            raise(Errc::cycle_detected, "edge from node " + std::to_string(e.from) +
                                            " to earlier node " + std::to_string(e.to));

    auto types = assign_split_types(graph);
    infer(graph, types);
    return build_stages(graph, types);
}

std::string ExecutionPlan::to_string() const {
    std::ostringstream out;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const Stage& stage = stages[s];
        out << "stage " << s << ": ";
        for (std::size_t c = 0; c < stage.calls.size(); ++c) {
            if (c) out << " | ";
            out << stage.calls[c].fn->name;
        }
        out << "\n  inputs:";
        if (stage.input_splits.empty()) out << " (none)";
        for (const StageInput& in : stage.input_splits) {
            out << " v" << in.id << ":";
            switch (in.spec.mode) {
            case SplitSpec::Mode::concrete:
                out << in.spec.type.to_string();
                break;
            case SplitSpec::Mode::default_of:
                out << "default";
                break;
            case SplitSpec::Mode::construct:
                out << in.spec.ctor_kind << "(deferred)";
                break;
            }
        }
        out << "\n  merges:";
        if (stage.output_merges.empty()) out << " (none)";
        for (const MergeSpec& m : stage.output_merges) {
            out << " v" << m.id << ":";
            switch (m.mode) {
            case MergeSpec::Mode::kind_merge:
                out << m.type.to_string();
                break;
            case MergeSpec::Mode::default_merge:
                out << "default";
                break;
            case MergeSpec::Mode::in_place:
                out << "in-place";
                break;
            }
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace splitpipe
