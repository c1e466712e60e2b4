#include "splitpipe/library.hpp"

namespace splitpipe {

const AnnotatedFunction& FunctionLibrary::add(std::string name, LibraryFn fn,
                                              FunctionSignature sig,
                                              std::string_view annotation_text) {
    if (functions_.count(name))
        raise(Errc::invalid_argument, "function '" + name + "' already registered");
    if (sig.writable.size() != sig.arg_types.size())
        raise(Errc::invalid_argument, "signature writable mask must cover every argument");

    SplitAnnotation sa = parse_annotation(annotation_text);
    auto violations = validate_annotation(sa, sig, *registry_);
    if (!violations.empty()) {
        std::string msg = "annotation rejected for '" + name + "':";
        for (const auto& v : violations) msg += "\n  " + v;
        raise(Errc::invalid_argument, msg);
    }
    sa = normalize_annotation(std::move(sa), sig);

    AnnotatedFunction entry{name, std::move(fn), std::move(sig), std::move(sa)};
    auto [it, _] = functions_.emplace(std::move(name), std::move(entry));
    return it->second;
}

const AnnotatedFunction& FunctionLibrary::at(std::string_view name) const {
    auto it = functions_.find(name);
    if (it == functions_.end())
        raise(Errc::invalid_argument, "no registered function named '" + std::string(name) + "'");
    return it->second;
}

}  // namespace splitpipe
