#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace avsl {

// Every failure the library can signal. Kinds map onto the CLI exit-code
// contract: usage=1, io=2, validation=3, numeric=4.
enum class ErrorKind {
    // usage
    usage,
    // io
    io,
    bad_magic,
    bad_version,
    truncated_file,
    size_mismatch,
    // validation
    dimension_mismatch,
    shape_mismatch,
    empty_input,
    empty_map,
    empty_gallery,
    too_few_samples,
    bad_area,
    bad_k,
    batch_too_small,
    length_mismatch,
    bad_transform,
    unknown_class,
    too_short,
    placement_failure,
    config_error,
    // numeric
    zero_norm,
    nan_input,
};

std::string_view error_kind_name(ErrorKind k);
int exit_code_for(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return exit_code_for(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace avsl
