#include "nanotwin/error.hpp"

namespace nanotwin {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::usage: return "usage";
        case ErrorCode::domain: return "domain";
        case ErrorCode::precondition: return "precondition";
        case ErrorCode::calibration: return "calibration";
        case ErrorCode::no_signal: return "no_signal";
        case ErrorCode::indeterminate: return "indeterminate";
        case ErrorCode::rank: return "rank";
        case ErrorCode::never_reaches: return "never_reaches";
        case ErrorCode::empty_record: return "empty_record";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::parse: return "parse";
        case ErrorCode::validation: return "validation";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace nanotwin
