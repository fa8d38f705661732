#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netsurv {

/// Machine-readable classification of a failure. The CLI maps every code in
/// the validation family to exit status 2 and the computation family to 3.
enum class ErrorCode {
    // validation
    Io,
    Parse,
    Syntax,
    MissingColumn,
    UnmatchedAxis,
    UnknownValue,
    Arity,
    Domain,
    InvalidArgument,
    // computation
    DivergentExpectation,
    EmptyGroup,
    NoAtRisk,
    GridMismatch,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::MissingColumn: return "missing-column";
    case ErrorCode::UnmatchedAxis: return "unmatched-axis";
    case ErrorCode::UnknownValue: return "unknown-value";
    case ErrorCode::Arity: return "arity";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DivergentExpectation: return "divergent-expectation";
    case ErrorCode::EmptyGroup: return "empty-group";
    case ErrorCode::NoAtRisk: return "no-at-risk";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    }
    return "unknown";
}

inline bool is_validation(ErrorCode code) {
    return code <= ErrorCode::InvalidArgument;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace netsurv
