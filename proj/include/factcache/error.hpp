#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace factcache {

enum class ErrorCode {
    InvalidArgument,
    UnresolvableProbe,
    SlowUnreachable,
    HttpError,
    MalformedResponse,
    RateLimited,
    BadTemplate,
    DistractorCollision,
    BrokenChain,
    ParseError,
    SchemaViolation,
    NotFound,
    UnknownTask,
    ModelError,
    EmptyCompletion,
    HopFailed,
    EmptySet,
    SupportMismatch,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::UnresolvableProbe: return "UNRESOLVABLE_PROBE";
        case ErrorCode::SlowUnreachable: return "SLOW_UNREACHABLE";
        case ErrorCode::HttpError: return "HTTP_ERROR";
        case ErrorCode::MalformedResponse: return "MALFORMED_RESPONSE";
        case ErrorCode::RateLimited: return "RATE_LIMITED";
        case ErrorCode::BadTemplate: return "BAD_TEMPLATE";
        case ErrorCode::DistractorCollision: return "DISTRACTOR_COLLISION";
        case ErrorCode::BrokenChain: return "BROKEN_CHAIN";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::SchemaViolation: return "SCHEMA_VIOLATION";
        case ErrorCode::NotFound: return "NOT_FOUND";
        case ErrorCode::UnknownTask: return "UNKNOWN_TASK";
        case ErrorCode::ModelError: return "MODEL_ERROR";
        case ErrorCode::EmptyCompletion: return "EMPTY_COMPLETION";
        case ErrorCode::HopFailed: return "HOP_FAILED";
        case ErrorCode::EmptySet: return "EMPTY_SET";
        case ErrorCode::SupportMismatch: return "SUPPORT_MISMATCH";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

// All library failures surface as this type; `code()` identifies the kind.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by multi-hop answering; carries the 1-based hop that found no evidence.
class HopFailed : public Error {
public:
    explicit HopFailed(std::size_t hop)
        : Error(ErrorCode::HopFailed, "no applicable triple at hop " + std::to_string(hop)),
          hop_(hop) {}

    std::size_t hop() const noexcept { return hop_; }

private:
    std::size_t hop_;
};

// SPARQL endpoints may answer 429 with a Retry-After hint (seconds).
class RateLimited : public Error {
public:
    RateLimited(const std::string& message, std::optional<int> retry_after_seconds)
        : Error(ErrorCode::RateLimited, message), retry_after_(retry_after_seconds) {}

    std::optional<int> retry_after() const noexcept { return retry_after_; }

private:
    std::optional<int> retry_after_;
};

}  // namespace factcache
