#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nanotwin {

/// Stable, machine-readable error classes. The CLI maps these onto exit codes
/// and the service onto HTTP status codes.
enum class ErrorCode {
    usage,
    domain,
    precondition,
    calibration,
    no_signal,
    indeterminate,
    rank,
    never_reaches,
    empty_record,
    not_found,
    parse,
    validation,
    io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class TwinError : public std::runtime_error {
public:
    TwinError(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw TwinError(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace nanotwin
