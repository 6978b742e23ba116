#pragma once

#include <stdexcept>
#include <string>

namespace odim {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures: missing files, unwritable destinations.
class io_error : public error {
public:
    using error::error;
};

// Malformed or inconsistent input. `field()` names the offending field
// (e.g. "magic", "n", "labels[3]", "planted[0].noise_std").
class format_error : public error {
public:
    format_error(std::string field, const std::string & what)
        : error(field + ": " + what), field_(std::move(field)) {}

    const std::string & field() const noexcept { return field_; }

private:
    std::string field_;
};

// Well-formed input that cannot be analysed (single-class training data,
// mismatched widths, mixed models).
class analysis_error : public error {
public:
    using error::error;
};

}  // namespace odim
