#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "splitpipe/annotation.hpp"
#include "splitpipe/value.hpp"

namespace splitpipe {

// Annotated library functions take a span of runtime values (whole values in
// eager use, split pieces under the runtime) and return a value iff the
// signature declares a return type. Mutable arguments are written through
// their shared payloads.
using LibraryFn = std::function<std::optional<Value>(std::span<const Value>)>;

struct AnnotatedFunction {
    std::string name;
    LibraryFn fn;
    FunctionSignature signature;
    SplitAnnotation sa;  // normalized: arity equals the signature's
};

// Registration-time-only catalog of annotated functions. Annotations are
// parsed and validated against the signature when a function is added.
class FunctionLibrary {
  public:
    explicit FunctionLibrary(const SplitKindRegistry& registry) : registry_(&registry) {}

    const AnnotatedFunction& add(std::string name, LibraryFn fn, FunctionSignature sig,
                                 std::string_view annotation_text);

    bool contains(std::string_view name) const { return functions_.count(name) != 0; }
    const AnnotatedFunction& at(std::string_view name) const;
    const SplitKindRegistry& registry() const { return *registry_; }

  private:
    const SplitKindRegistry* registry_;
    std::map<std::string, AnnotatedFunction, std::less<>> functions_;
};

}  // namespace splitpipe
