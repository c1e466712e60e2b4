#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splitpipe {

enum class Errc {
    duplicate_kind,
    invalid_kind,
    unknown_kind,
    constructor_failure,
    split_failure,
    merge_failure,
    parse_error,
    unknown_reference,
    graph_sealed,
    inference_conflict,
    cycle_detected,
    no_splittable_inputs,
    element_count_mismatch,
    empty_split,
    null_data,
    dimension_mismatch,
    invalid_argument,
    internal,
};

inline const char* errc_name(Errc code) {
    switch (code) {
    case Errc::duplicate_kind: return "DuplicateKind";
    case Errc::invalid_kind: return "InvalidKind";
    case Errc::unknown_kind: return "UnknownKind";
    case Errc::constructor_failure: return "ConstructorFailure";
    case Errc::split_failure: return "SplitFailure";
    case Errc::merge_failure: return "MergeFailure";
    case Errc::parse_error: return "ParseError";
    case Errc::unknown_reference: return "UnknownReference";
    case Errc::graph_sealed: return "GraphSealed";
    case Errc::inference_conflict: return "InferenceConflict";
    case Errc::cycle_detected: return "CycleDetected";
    case Errc::no_splittable_inputs: return "NoSplittableInputs";
    case Errc::element_count_mismatch: return "ElementCountMismatch";
    case Errc::empty_split: return "EmptySplit";
    case Errc::null_data: return "NullData";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::internal: return "InternalError";
    }
    return "Error";
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

// Parse failures carry the byte offset of the offending token.
class ParseError : public Error {
  public:
    ParseError(std::size_t offset, const std::string& message)
        : Error(Errc::parse_error, "at byte " + std::to_string(offset) + ": " + message),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace splitpipe
