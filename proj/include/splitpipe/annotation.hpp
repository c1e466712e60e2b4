#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splitpipe/split_types.hpp"

namespace splitpipe {

// One split-type expression inside an annotation: a kind constructor with
// named arguments, a generic type variable, the broadcast marker "_", or
// "unknown" for shape-changing functions.
struct SplitTypeExpr {
    enum class Kind { constructor, generic, missing, unknown };

    Kind kind = Kind::missing;
    std::string name;                // constructor kind name or generic name
    std::vector<std::string> args;   // constructor arguments (parameter names)

    static SplitTypeExpr missing_expr() { return SplitTypeExpr{Kind::missing, "", {}}; }

    bool operator==(const SplitTypeExpr&) const = default;
};

struct AnnotationParam {
    std::string name;
    bool is_mut = false;
    SplitTypeExpr expr;

    bool operator==(const AnnotationParam&) const = default;
};

struct SplitAnnotation {
    std::vector<AnnotationParam> params;
    std::optional<SplitTypeExpr> return_expr;

    int index_of(std::string_view param_name) const;
    std::string to_string() const;  // canonical printed form; parses back to *this

    bool operator==(const SplitAnnotation&) const = default;
};

// Parses one annotation of the form
//   @splittable([mut] name: expr, ...) [-> expr]
// Whitespace-insensitive. Throws ParseError (with byte offset) on malformed
// input and Error(unknown_reference) when a constructor argument names a
// parameter the annotation does not declare.
SplitAnnotation parse_annotation(std::string_view text);

// Signature descriptor for an annotated function: concrete data-type names
// per argument, which arguments the function may write, and the return type
// ("" for void).
struct FunctionSignature {
    std::vector<std::string> arg_types;
    std::vector<bool> writable;
    std::string return_type;
};

// Returns the list of violations; empty means valid. Checks annotation arity
// against the signature, constructor kinds against the registry (including
// that each kind splits the argument's concrete type), and mut flags against
// writability. Annotations shorter than the signature are valid: omitted
// trailing entries default to "_".
std::vector<std::string> validate_annotation(const SplitAnnotation& sa,
                                             const FunctionSignature& sig,
                                             const SplitKindRegistry& registry);

// Pads omitted trailing parameters with "_" entries so the annotation's arity
// equals the signature's.
SplitAnnotation normalize_annotation(SplitAnnotation sa, const FunctionSignature& sig);

}  // namespace splitpipe
