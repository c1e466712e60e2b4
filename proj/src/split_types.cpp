#include "splitpipe/split_types.hpp"

#include <atomic>
#include <sstream>

namespace splitpipe {

namespace {
std::atomic<std::uint64_t> g_unknown_counter{0};
}

SplitType SplitType::make_unknown() {
    SplitType st;
    st.name = "unknown";
    st.unknown_id = ++g_unknown_counter;
    return st;
}

std::string SplitType::to_string() const {
    if (is_unknown()) {
        return "unknown#" + std::to_string(unknown_id);
    }
    std::ostringstream out;
    out << name << "<";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out << ",";
        out << params[i];
    }
    out << ">";
    return out.str();
}

bool split_type_eq(const SplitType& a, const SplitType& b) {
    if (a.is_unknown() || b.is_unknown()) return false;
    return a.name == b.name && a.params == b.params;
}

void SplitKindRegistry::register_kind(SplitKind kind) {
    if (kind.name.empty())
        raise(Errc::invalid_kind, "split kind must be named");
    if (kind.name == "unknown" || kind.name == "_")
        raise(Errc::invalid_kind, "'" + kind.name + "' is reserved");
    if (contains(kind.name))
        raise(Errc::duplicate_kind, "split kind '" + kind.name + "' already registered");
    if (kind.splitter && !kind.info)
        raise(Errc::invalid_kind,
              "split kind '" + kind.name + "' has a splitter but no info function");
    if (kind.concrete_type.empty())
        raise(Errc::invalid_kind, "split kind '" + kind.name + "' names no concrete type");
    if (kind.default_constructor) {
        auto [it, inserted] = default_by_type_.emplace(kind.concrete_type, kind.name);
        if (!inserted)
            raise(Errc::invalid_kind, "data type '" + kind.concrete_type +
                                          "' already has default split kind '" + it->second + "'");
    }
    kinds_.emplace(kind.name, std::move(kind));
}

const SplitKind* SplitKindRegistry::find(std::string_view name) const {
    auto it = kinds_.find(name);
    return it == kinds_.end() ? nullptr : &it->second;
}

const SplitKind& SplitKindRegistry::at(std::string_view name) const {
    const SplitKind* kind = find(name);
    if (!kind)
        raise(Errc::unknown_kind, "no split kind named '" + std::string(name) + "'");
    return *kind;
}

const SplitKind* SplitKindRegistry::default_for(std::string_view data_type) const {
    auto it = default_by_type_.find(data_type);
    return it == default_by_type_.end() ? nullptr : find(it->second);
}

SplitType SplitKindRegistry::construct(std::string_view kind_name,
                                       std::span<const Value> args) const {
    const SplitKind& kind = at(kind_name);
    if (!kind.constructor)
        raise(Errc::constructor_failure, "split kind '" + kind.name + "' has no constructor");
    return SplitType::make(kind.name, kind.constructor(args));
}

std::optional<SplitPiece> SplitKindRegistry::split(const Value& value, std::int64_t start,
                                                   std::int64_t end, const SplitType& st,
                                                   const WorkerContext& ctx) const {
    const SplitKind& kind = at(st.name);
    if (!kind.splitter)
        raise(Errc::split_failure, "split kind '" + kind.name + "' has no splitter");
    if (start > end)
        raise(Errc::split_failure, "inverted split range");
    return kind.splitter(value, start, end, st, ctx);
}

Value SplitKindRegistry::merge(std::vector<SplitPiece> pieces, const SplitType& st) const {
    const SplitKind& kind = at(st.name);
    if (!kind.merger)
        raise(Errc::merge_failure, "split kind '" + kind.name + "' has no merger");
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        if (pieces[i].start < pieces[i - 1].start)
            raise(Errc::merge_failure, "pieces not ordered by ascending range");
    }
    return kind.merger(std::move(pieces), st);
}

RuntimeInfo SplitKindRegistry::runtime_info(const Value& value, const SplitType& st) const {
    const SplitKind& kind = at(st.name);
    if (!kind.info)
        raise(Errc::invalid_kind, "split kind '" + kind.name + "' has no info function");
    return kind.info(value, st);
}

}  // namespace splitpipe
