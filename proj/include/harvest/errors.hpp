#pragma once

#include <stdexcept>
#include <string>

namespace harvest {

enum class ErrorKind {
    InvalidDomain,
    NonFiniteValue,
    DimensionMismatch,
    NotConverged,
    NonPositiveEigenvector,
    NoPositiveState,
    StepsExhausted,
    StepFailed,
    InvalidEps,
    ConfigError,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-status mapping) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NonPositiveEigenvector: return "NonPositiveEigenvector";
    case ErrorKind::NoPositiveState: return "NoPositiveState";
    case ErrorKind::StepsExhausted: return "StepsExhausted";
    case ErrorKind::StepFailed: return "StepFailed";
    case ErrorKind::InvalidEps: return "InvalidEps";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace harvest
