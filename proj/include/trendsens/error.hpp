#pragma once

#include <stdexcept>
#include <string>

namespace trendsens {

// Broad failure class; the CLI maps these onto exit codes 2, 3 and 4.
enum class ErrorKind { config, data, numerical };

// Every library failure carries a stable machine-readable code such as
// "insufficient-points" or "hash-mismatch" in addition to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), kind_(kind), code_(std::move(code)), detail_(detail) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same error with `context` prepended to the detail.
    Error within(const std::string& context) const { return Error(kind_, code_, context + ": " + detail_); }

private:
    ErrorKind kind_;
    std::string code_;
    std::string detail_;
};

inline Error config_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::config, std::move(code), detail);
}
inline Error data_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::data, std::move(code), detail);
}
inline Error numerical_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::numerical, std::move(code), detail);
}

int exit_code(ErrorKind kind) noexcept;

}  // namespace trendsens
