#pragma once

#include <stdexcept>
#include <string>

namespace lc {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorKind {
    usage = 1,    // bad arguments, bad configuration, contract violations
    data = 2,     // missing/malformed files, undecodable images, bad annotations
    numeric = 3,  // non-finite values where finite ones are required
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise_usage(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void raise_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void raise_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }

}  // namespace lc
