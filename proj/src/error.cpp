#include "audexplain/error.hpp"

namespace audexplain {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::unreadable_file: return "unreadable file";
        case ErrorCode::malformed_wav: return "malformed WAV";
        case ErrorCode::unsupported_encoding: return "unsupported encoding";
        case ErrorCode::zero_length_audio: return "zero-length audio";
        case ErrorCode::non_finite_sample: return "non-finite sample";
        case ErrorCode::unwritable_path: return "unwritable path";
        case ErrorCode::empty_after_trim: return "empty after trim";
        case ErrorCode::dimension_mismatch: return "dimension mismatch";
        case ErrorCode::singular_system: return "singular system";
        case ErrorCode::no_positive_coefficients: return "no positive coefficients";
        case ErrorCode::degenerate_dataset: return "degenerate dataset";
        case ErrorCode::unknown_label: return "unknown label";
        case ErrorCode::subprocess_failed: return "subprocess failed";
        case ErrorCode::protocol_violation: return "protocol violation";
        case ErrorCode::subprocess_timeout: return "subprocess timeout";
        case ErrorCode::io_error: return "I/O error";
    }
    return "unknown error";
}

} // namespace audexplain
