#pragma once

#include <stdexcept>
#include <string>

namespace racg {

/// Broad failure category; the CLI maps each one to an exit code.
enum class ErrorKind { config, data, remote, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Raised once a remote call has exhausted its retries (or failed non-retryably).
struct RemoteError : Error {
    explicit RemoteError(const std::string& what) : Error(ErrorKind::remote, what) {}
};

}  // namespace racg
