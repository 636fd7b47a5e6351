#pragma once

#include <stdexcept>
#include <string>

namespace crl {

enum class ErrorKind { Domain, Config, Numeric, Unsupported, Mismatch };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace crl
