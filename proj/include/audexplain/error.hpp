#pragma once

#include <stdexcept>
#include <string>

namespace audexplain {

enum class ErrorCode {
    invalid_argument,
    unreadable_file,
    malformed_wav,
    unsupported_encoding,
    zero_length_audio,
    non_finite_sample,
    unwritable_path,
    empty_after_trim,
    dimension_mismatch,
    singular_system,
    no_positive_coefficients,
    degenerate_dataset,
    unknown_label,
    subprocess_failed,
    protocol_violation,
    subprocess_timeout,
    io_error,
};

const char* error_code_name(ErrorCode code);

/// All library failures throw this; `code` distinguishes the error classes
/// the operations document.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Re-throws `err` with a pipeline stage name prepended, so multi-stage
// operations report which stage failed.
[[noreturn]] inline void rethrow_with_stage(const Error& err, const std::string& stage) {
    throw Error(err.code(), stage + ": " + err.what());
}

} // namespace audexplain
