#include "splitpipe/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace splitpipe {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point from) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - from).count();
}

struct WorkerPartial {
    std::int64_t start = 0;
    std::int64_t end = 0;
    Value value;
};

}  // namespace

std::int64_t compute_batch_size(std::span<const RuntimeInfo> inputs, const ExecConfig& cfg) {
    if (cfg.batch_override) return *cfg.batch_override;
    if (inputs.empty())
        raise(Errc::no_splittable_inputs, "batch size undefined without split inputs");
    std::int64_t bytes_per_element = 0;
    for (const RuntimeInfo& info : inputs) {
        if (info.element_size_bytes <= 0)
            raise(Errc::invalid_argument, "element size must be positive");
        bytes_per_element += info.element_size_bytes;
    }
    double raw = cfg.batch_constant * static_cast<double>(cfg.l2_bytes) /
                 static_cast<double>(bytes_per_element);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
}

std::vector<WorkerRange> partition(std::int64_t total, int workers) {
    if (workers < 1) raise(Errc::invalid_argument, "workers must be >= 1");
    if (total < 0) raise(Errc::invalid_argument, "negative element count");
    std::vector<WorkerRange> ranges;
    ranges.reserve(static_cast<std::size_t>(workers));
    std::int64_t base = total / workers;
    std::int64_t extra = total % workers;
    std::int64_t cursor = 0;
    for (int w = 0; w < workers; ++w) {
        std::int64_t size = base + (w < extra ? 1 : 0);
        ranges.push_back(WorkerRange{w, cursor, cursor + size});
        cursor += size;
    }
    return ranges;
}

namespace {

// The stage resolved against the environment: every value the stage touches
// gets a dense slot, calls carry slot indices, and split inputs carry their
// kind so the batch loop runs without map lookups.
class StageRunner {
  public:
    StageRunner(const SplitKindRegistry& registry, Stage& stage, const ExecConfig& cfg,
                ValueEnv& env)
        : registry_(registry), stage_(stage), cfg_(cfg), env_(env) {}

    void run(StageTiming* timing) {
        resolve_inputs();
        const std::int64_t total = check_element_counts();

        if (total == 0) {
            // Nothing to split: run the calls once over the whole (empty)
            // values so shaped results keep the shapes the functions produce.
            run_empty();
            if (timing) timing->batch_elements = 0;
            return;
        }

        std::vector<RuntimeInfo> infos;
        infos.reserve(inputs_.size());
        for (const PreparedInput& in : inputs_) infos.push_back(in.info);
        batch_ = compute_batch_size(infos, cfg_);

        prepare_calls();
        auto ranges = partition(total, cfg_.workers);

        std::vector<std::vector<WorkerPartial>> partials(
            static_cast<std::size_t>(cfg_.workers));
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg_.workers));

        auto work = [&](const WorkerRange& range) {
            try {
                partials[static_cast<std::size_t>(range.worker_id)] = run_worker(range);
            } catch (...) {
                failures[static_cast<std::size_t>(range.worker_id)] = std::current_exception();
            }
        };

        if (cfg_.workers == 1) {
            work(ranges[0]);
        } else {
            std::vector<std::thread> threads;
            threads.reserve(ranges.size());
            for (const WorkerRange& range : ranges) {
                if (range.size() == 0) continue;
                threads.emplace_back(work, range);
            }
            for (std::thread& t : threads) t.join();
        }
        for (const std::exception_ptr& failure : failures)
            if (failure) std::rethrow_exception(failure);

        global_merge(partials);

        stage_.piece_count = pieces_.load();
        if (timing) {
            timing->split_ns = split_ns_.load();
            timing->exec_ns = exec_ns_.load();
            timing->merge_ns = merge_ns_.load();
            timing->piece_count = pieces_.load();
            timing->batch_elements = batch_;
        }
    }

  private:
    struct PreparedInput {
        int slot = -1;
        ValueId id = 0;
        Value value;
        SplitType type;
        const SplitKind* kind = nullptr;
        RuntimeInfo info;
    };

    struct PreparedCall {
        const AnnotatedFunction* fn = nullptr;
        std::vector<int> arg_slots;
        int ret_slot = -1;
        int merge_index = -1;  // >= 0 when the return feeds a merge list
    };

    struct PreparedMerge {
        ValueId id = 0;
        const MergeSpec* spec = nullptr;
        const SplitKind* kind = nullptr;  // resolved for kind merges
    };

    // Broadcast uses get their own slot: one value may be split for one call
    // and passed whole to another.
    int slot_for(ValueId id, bool broadcast) {
        auto [it, inserted] =
            slot_of_.emplace(std::make_pair(id, broadcast), static_cast<int>(slot_of_.size()));
        return it->second;
    }

    void resolve_inputs() {
        for (const StageInput& in : stage_.input_splits) {
            auto it = env_.find(in.id);
            if (it == env_.end())
                raise(Errc::internal, "stage input v" + std::to_string(in.id) +
                                          " missing from environment");
            const Value& value = it->second;
            if (value.empty())
                raise(Errc::null_data, "stage input v" + std::to_string(in.id) + " holds no data");

            SplitType st;
            switch (in.spec.mode) {
            case SplitSpec::Mode::concrete:
                st = in.spec.type;
                break;
            case SplitSpec::Mode::default_of: {
                const SplitKind* kind = registry_.default_for(value.type_name());
                if (!kind || !kind->default_constructor)
                    raise(Errc::unknown_kind, "data type '" + std::string(value.type_name()) +
                                                  "' has no default split kind");
                st = kind->default_constructor(value);
                break;
            }
            case SplitSpec::Mode::construct: {
                std::vector<Value> ctor_values;
                ctor_values.reserve(in.spec.ctor_args.size());
                for (ValueId vid : in.spec.ctor_args) {
                    auto cit = env_.find(vid);
                    if (cit == env_.end())
                        raise(Errc::internal, "constructor argument v" + std::to_string(vid) +
                                                  " missing from environment");
                    ctor_values.push_back(cit->second);
                }
                st = registry_.construct(in.spec.ctor_kind, ctor_values);
                break;
            }
            }

            PreparedInput prepared;
            prepared.slot = slot_for(in.id, false);
            prepared.id = in.id;
            prepared.value = value;
            prepared.kind = &registry_.at(st.name);
            if (!prepared.kind->splitter || !prepared.kind->info)
                raise(Errc::split_failure,
                      "split kind '" + st.name + "' cannot split stage inputs");
            prepared.info = prepared.kind->info(value, st);
            prepared.type = std::move(st);
            inputs_.push_back(std::move(prepared));
        }
        if (inputs_.empty())
            raise(Errc::no_splittable_inputs,
                  "stage has no splittable inputs (every argument is '_')");
    }

    std::int64_t check_element_counts() const {
        std::int64_t total = inputs_.front().info.total_elements;
        for (const PreparedInput& in : inputs_) {
            if (in.info.total_elements != total)
                raise(Errc::element_count_mismatch,
                      "stage inputs disagree on element count: v" +
                          std::to_string(inputs_.front().id) + " has " + std::to_string(total) +
                          ", v" + std::to_string(in.id) + " has " +
                          std::to_string(in.info.total_elements));
        }
        if (cfg_.pedantic && total == 0)
            raise(Errc::empty_split, "stage inputs produce no elements");
        return total;
    }

    void prepare_calls() {
        for (const MergeSpec& m : stage_.output_merges) {
            if (m.mode == MergeSpec::Mode::in_place) continue;
            PreparedMerge merge;
            merge.id = m.id;
            merge.spec = &m;
            if (m.mode == MergeSpec::Mode::kind_merge) merge.kind = &registry_.at(m.type.name);
            merge_index_.emplace(m.id, static_cast<int>(merges_.size()));
            merges_.push_back(merge);
        }

        for (const StageCall& call : stage_.calls) {
            PreparedCall prepared;
            prepared.fn = call.fn;
            prepared.arg_slots.reserve(call.args.size());
            for (const StageArg& arg : call.args) {
                bool broadcast = arg.src == StageArg::Src::broadcast;
                int slot = slot_for(arg.id, broadcast);
                prepared.arg_slots.push_back(slot);
                if (broadcast && loaded_broadcasts_.insert(slot).second) {
                    auto it = env_.find(arg.id);
                    if (it == env_.end())
                        raise(Errc::internal,
                              "broadcast value v" + std::to_string(arg.id) + " not materialized");
                    if (cfg_.pedantic && it->second.empty())
                        raise(Errc::null_data,
                              "broadcast value v" + std::to_string(arg.id) + " holds no data");
                    broadcasts_.emplace_back(slot, it->second);
                }
            }
            if (call.ret) {
                prepared.ret_slot = slot_for(*call.ret, false);
                auto it = merge_index_.find(*call.ret);
                if (it != merge_index_.end()) prepared.merge_index = it->second;
            }
            calls_.push_back(std::move(prepared));
        }
        slot_count_ = static_cast<int>(slot_of_.size());
    }

    std::optional<SplitPiece> split_one(const PreparedInput& in, std::int64_t start,
                                        std::int64_t end, const WorkerContext& ctx) const {
        auto piece = in.kind->splitter(in.value, start, end, in.type, ctx);
        if (cfg_.pedantic && piece) {
            if (piece->value.empty())
                raise(Errc::null_data, "splitter for " + in.type.to_string() + " returned no data");
            if (piece->size() <= 0)
                raise(Errc::empty_split,
                      "splitter for " + in.type.to_string() + " returned an empty piece");
        }
        return piece;
    }

    void check_piece_sizes(const std::vector<SplitPiece>& slots) const {
        if (!cfg_.pedantic || inputs_.size() < 2) return;
        std::int64_t size = -1;
        for (const PreparedInput& in : inputs_) {
            const SplitPiece& piece = slots[static_cast<std::size_t>(in.slot)];
            if (piece.value.empty()) continue;  // not split yet in this batch
            if (size < 0)
                size = piece.size();
            else if (piece.size() != size)
                raise(Errc::element_count_mismatch,
                      "splits produced differing piece sizes within one batch");
        }
    }

    // One worker's batches, pipelined or call-at-a-time.
    std::vector<WorkerPartial> run_worker(const WorkerRange& range) const {
        std::int64_t split_ns = 0;
        std::int64_t exec_ns = 0;
        std::int64_t merge_ns = 0;
        std::int64_t batches = 0;
        std::vector<std::vector<SplitPiece>> out_pieces(merges_.size());

        std::vector<SplitPiece> slots(static_cast<std::size_t>(slot_count_));
        for (const auto& [slot, value] : broadcasts_)
            slots[static_cast<std::size_t>(slot)] = SplitPiece{value, 0, 0};
        std::vector<Value> scratch;

        auto run_batch_calls = [&](std::vector<SplitPiece>& batch_slots, std::int64_t s,
                                   std::int64_t e, const PreparedCall& call) {
            scratch.clear();
            for (int slot : call.arg_slots) {
                const SplitPiece& piece = batch_slots[static_cast<std::size_t>(slot)];
                if (cfg_.pedantic && piece.value.empty())
                    raise(Errc::null_data, "call '" + call.fn->name +
                                               "' received empty data in a batch");
                scratch.push_back(piece.value);
            }
            auto started = Clock::now();
            std::optional<Value> result = call.fn->fn(scratch);
            exec_ns += elapsed_ns(started);
            if (call.ret_slot >= 0) {
                if (!result)
                    raise(Errc::internal, "call '" + call.fn->name + "' returned no value");
                SplitPiece piece{std::move(*result), s, e};
                if (call.merge_index >= 0)
                    out_pieces[static_cast<std::size_t>(call.merge_index)].push_back(piece);
                batch_slots[static_cast<std::size_t>(call.ret_slot)] = std::move(piece);
            }
        };

        if (cfg_.pipelining_enabled) {
            std::int64_t batch_index = 0;
            for (std::int64_t s = range.start; s < range.end; s += batch_, ++batch_index) {
                std::int64_t e = std::min(s + batch_, range.end);
                WorkerContext ctx{range.worker_id, cfg_.workers, batch_index, cfg_.pedantic};

                auto split_started = Clock::now();
                bool exhausted = false;
                for (const PreparedInput& in : inputs_) {
                    auto piece = split_one(in, s, e, ctx);
                    if (!piece) {
                        exhausted = true;
                        break;
                    }
                    slots[static_cast<std::size_t>(in.slot)] = std::move(*piece);
                }
                split_ns += elapsed_ns(split_started);
                if (exhausted) break;
                check_piece_sizes(slots);

                for (const PreparedCall& call : calls_) run_batch_calls(slots, s, e, call);
                ++batches;
            }
        } else {
            // Ablation mode: each call runs over every batch before the next
            // call begins, so intermediates are retained per batch instead of
            // staying cache-resident.
            std::int64_t batch_count =
                range.size() > 0 ? (range.size() + batch_ - 1) / batch_ : 0;
            std::vector<std::vector<SplitPiece>> stored(
                static_cast<std::size_t>(batch_count), slots);
            std::vector<bool> split_done(static_cast<std::size_t>(slot_count_), false);

            for (const PreparedCall& call : calls_) {
                std::vector<bool> splits_needed(static_cast<std::size_t>(slot_count_), false);
                for (int slot : call.arg_slots)
                    if (!split_done[static_cast<std::size_t>(slot)])
                        for (const PreparedInput& in : inputs_)
                            if (in.slot == slot) splits_needed[static_cast<std::size_t>(slot)] = true;

                std::int64_t batch_index = 0;
                bool exhausted = false;
                for (std::int64_t s = range.start; s < range.end && !exhausted;
                     s += batch_, ++batch_index) {
                    std::int64_t e = std::min(s + batch_, range.end);
                    WorkerContext ctx{range.worker_id, cfg_.workers, batch_index, cfg_.pedantic};
                    auto& batch_slots = stored[static_cast<std::size_t>(batch_index)];

                    auto split_started = Clock::now();
                    for (const PreparedInput& in : inputs_) {
                        if (!splits_needed[static_cast<std::size_t>(in.slot)]) continue;
                        auto piece = split_one(in, s, e, ctx);
                        if (!piece) {
                            exhausted = true;
                            break;
                        }
                        batch_slots[static_cast<std::size_t>(in.slot)] = std::move(*piece);
                    }
                    split_ns += elapsed_ns(split_started);
                    if (exhausted) break;
                    check_piece_sizes(batch_slots);

                    run_batch_calls(batch_slots, s, e, call);
                }
                for (std::size_t slot = 0; slot < splits_needed.size(); ++slot)
                    if (splits_needed[slot]) split_done[slot] = true;
            }
            batches = batch_count;
        }

        // Worker-level merge of every output piece list.
        std::vector<WorkerPartial> result(merges_.size());
        auto merge_started = Clock::now();
        for (std::size_t m = 0; m < merges_.size(); ++m) {
            auto& pieces = out_pieces[m];
            if (pieces.empty()) continue;
            WorkerPartial partial;
            partial.start = pieces.front().start;
            partial.end = pieces.back().end;
            partial.value = merge_pieces(merges_[m], std::move(pieces));
            result[m] = std::move(partial);
        }
        merge_ns += elapsed_ns(merge_started);

        split_ns_ += split_ns;
        exec_ns_ += exec_ns;
        merge_ns_ += merge_ns;
        pieces_ += batches;
        return result;
    }

    Value merge_pieces(const PreparedMerge& merge, std::vector<SplitPiece> pieces) const {
        if (merge.spec->mode == MergeSpec::Mode::kind_merge) {
            if (!merge.kind->merger)
                raise(Errc::merge_failure,
                      "split kind '" + merge.kind->name + "' has no merger");
            return merge.kind->merger(std::move(pieces), merge.spec->type);
        }
        // Default merge: the value's data type decides the kind.
        std::string_view data_type = pieces.empty()
                                         ? std::string_view(merge.spec->data_type)
                                         : pieces.front().value.type_name();
        const SplitKind* kind = registry_.default_for(data_type);
        if (!kind || !kind->default_constructor)
            raise(Errc::unknown_kind,
                  "data type '" + std::string(data_type) + "' has no default split kind");
        SplitType st = pieces.empty() ? SplitType::make(kind->name, {})
                                      : kind->default_constructor(pieces.front().value);
        return registry_.merge(std::move(pieces), st);
    }

    void global_merge(std::vector<std::vector<WorkerPartial>>& partials) {
        auto merge_started = Clock::now();
        for (std::size_t m = 0; m < merges_.size(); ++m) {
            std::vector<SplitPiece> pieces;
            for (const auto& worker : partials) {
                if (m >= worker.size() || worker[m].value.empty()) continue;
                pieces.push_back(SplitPiece{worker[m].value, worker[m].start, worker[m].end});
            }
            env_[merges_[m].id] = merge_pieces(merges_[m], std::move(pieces));
        }
        merge_ns_ += elapsed_ns(merge_started);
    }

    void run_empty() {
        std::map<ValueId, Value> produced;
        for (const StageCall& call : stage_.calls) {
            std::vector<Value> args;
            args.reserve(call.args.size());
            for (const StageArg& arg : call.args) {
                auto it = produced.find(arg.id);
                if (it != produced.end()) {
                    args.push_back(it->second);
                    continue;
                }
                auto env_it = env_.find(arg.id);
                if (env_it == env_.end())
                    raise(Errc::internal,
                          "value v" + std::to_string(arg.id) + " not materialized");
                args.push_back(env_it->second);
            }
            std::optional<Value> result = call.fn->fn(args);
            if (call.ret) {
                if (!result)
                    raise(Errc::internal, "call '" + call.fn->name + "' returned no value");
                produced[*call.ret] = *result;
                env_[*call.ret] = std::move(*result);
            }
        }
    }

    const SplitKindRegistry& registry_;
    Stage& stage_;
    const ExecConfig& cfg_;
    ValueEnv& env_;

    std::vector<PreparedInput> inputs_;
    std::vector<PreparedCall> calls_;
    std::vector<PreparedMerge> merges_;
    std::map<std::pair<ValueId, bool>, int> slot_of_;
    std::map<ValueId, int> merge_index_;
    std::set<int> loaded_broadcasts_;
    std::vector<std::pair<int, Value>> broadcasts_;
    int slot_count_ = 0;
    std::int64_t batch_ = 1;

    mutable std::atomic<std::int64_t> split_ns_{0};
    mutable std::atomic<std::int64_t> exec_ns_{0};
    mutable std::atomic<std::int64_t> merge_ns_{0};
    mutable std::atomic<std::int64_t> pieces_{0};
};

}  // namespace

void Executor::run_stage(Stage& stage, const ExecConfig& cfg, ValueEnv& env,
                         StageTiming* timing) const {
    cfg.validate();
    StageRunner runner(*registry_, stage, cfg, env);
    runner.run(timing);
}

ValueEnv Executor::run_plan(ExecutionPlan& plan, const ExecConfig& cfg, ValueEnv env,
                            std::vector<StageTiming>* timings) const {
    cfg.validate();
    for (std::size_t s = 0; s < plan.stages.size(); ++s) {
        StageTiming timing;
        timing.stage_index = static_cast<int>(s);
        run_stage(plan.stages[s], cfg, env, timings ? &timing : nullptr);
        if (timings) timings->push_back(timing);
    }
    ValueEnv outputs;
    for (ValueId id : plan.outputs) {
        auto it = env.find(id);
        if (it == env.end())
            raise(Errc::internal, "plan output v" + std::to_string(id) + " was never produced");
        outputs.emplace(id, it->second);
    }
    return outputs;
}

}  // namespace splitpipe
