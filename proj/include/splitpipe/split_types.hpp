#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitpipe/value.hpp"

namespace splitpipe {

// A split type: a kind name plus concrete parameter values. Equality of two
// split types is what licenses pipelining pieces between calls, so it is a
// named function rather than operator== — unknown instances are never equal
// to anything, including themselves.
struct SplitType {
    std::string name;
    std::vector<std::int64_t> params;
    std::uint64_t unknown_id = 0;  // nonzero marks a unique unknown instance

    static SplitType make(std::string name, std::vector<std::int64_t> params) {
        return SplitType{std::move(name), std::move(params), 0};
    }
    static SplitType make_unknown();

    bool is_unknown() const { return unknown_id != 0; }
    std::string to_string() const;
};

bool split_type_eq(const SplitType& a, const SplitType& b);

// Reported by a kind's Info function; drives batch sizing and the
// element-count consistency check.
struct RuntimeInfo {
    std::int64_t total_elements = 0;
    std::int64_t element_size_bytes = 0;
};

// One split piece covering element range [start, end) of its source value.
struct SplitPiece {
    Value value;
    std::int64_t start = 0;
    std::int64_t end = 0;

    std::int64_t size() const { return end - start; }
};

// Passed to splitters so annotators may implement splits that are not purely
// range-based (worker-id-aware splits, etc.).
struct WorkerContext {
    int worker_id = 0;
    int worker_count = 1;
    std::int64_t batch_index = 0;
    bool pedantic = false;
};

using ConstructorFn = std::function<std::vector<std::int64_t>(std::span<const Value>)>;
// Returns std::nullopt once start lies at or beyond the total element count.
using SplitFn = std::function<std::optional<SplitPiece>(
    const Value&, std::int64_t start, std::int64_t end, const SplitType&, const WorkerContext&)>;
// Mergers consume their pieces and are associative.
using MergeFn = std::function<Value(std::vector<SplitPiece>, const SplitType&)>;
using InfoFn = std::function<RuntimeInfo(const Value&, const SplitType&)>;
using DefaultConstructorFn = std::function<SplitType(const Value&)>;

// The behavior an annotator implements behind one split-type name.
// Reduction-style kinds may supply only a merger; kinds for in-place
// libraries may omit the merger entirely.
struct SplitKind {
    std::string name;
    std::string concrete_type;  // data type this kind splits
    ConstructorFn constructor;
    SplitFn splitter;
    MergeFn merger;
    InfoFn info;
    // Optional: used when inference falls back to a per-data-type default and
    // when unknown-typed values are re-split between stages.
    DefaultConstructorFn default_constructor;
};

class SplitKindRegistry {
  public:
    void register_kind(SplitKind kind);

    bool contains(std::string_view name) const { return kinds_.count(name) != 0; }
    const SplitKind* find(std::string_view name) const;
    const SplitKind& at(std::string_view name) const;

    // Default kind for a data type, registered implicitly by kinds that carry
    // a default constructor. Null when the type has none.
    const SplitKind* default_for(std::string_view data_type) const;

    // Checked entry points wrapping the per-kind callables.
    SplitType construct(std::string_view kind_name, std::span<const Value> args) const;
    std::optional<SplitPiece> split(const Value& value, std::int64_t start, std::int64_t end,
                                    const SplitType& st, const WorkerContext& ctx) const;
    Value merge(std::vector<SplitPiece> pieces, const SplitType& st) const;
    RuntimeInfo runtime_info(const Value& value, const SplitType& st) const;

  private:
    std::map<std::string, SplitKind, std::less<>> kinds_;
    std::map<std::string, std::string, std::less<>> default_by_type_;
};

}  // namespace splitpipe
