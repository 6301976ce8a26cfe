#pragma once

#include <stdexcept>
#include <string>

namespace lorehm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised for invalid RunConfig values; `field` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Transport or protocol failure while talking to an LMM backend.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& message, int status = 0)
        : Error(message), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

} // namespace lorehm
