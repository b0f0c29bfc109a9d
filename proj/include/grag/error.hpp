#pragma once

#include <stdexcept>
#include <string>

namespace grag {

// Base for every error the engine raises. `error_class()` is the stable,
// machine-readable classification surfaced by the service and the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string error_class, const std::string& message)
        : std::runtime_error(message), class_(std::move(error_class)) {}

    const std::string& error_class() const noexcept { return class_; }

private:
    std::string class_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse_error", message) {}
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& message) : Error("integrity_error", message) {}
};

class DuplicateError : public Error {
public:
    explicit DuplicateError(const std::string& message) : Error("duplicate_error", message) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation_error", message) {}
};

class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& message) : Error("contract_violation", message) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

class SizeBoundError : public Error {
public:
    explicit SizeBoundError(const std::string& message) : Error("size_bound", message) {}
};

class CrawlError : public Error {
public:
    explicit CrawlError(const std::string& message) : Error("crawl_error", message) {}
};

class PromptTooLargeError : public Error {
public:
    PromptTooLargeError(int estimate, int budget)
        : Error("prompt_too_large", "prompt estimate of " + std::to_string(estimate) +
                                        " tokens exceeds budget of " + std::to_string(budget)),
          estimate_(estimate),
          budget_(budget) {}

    int estimate() const noexcept { return estimate_; }
    int budget() const noexcept { return budget_; }

private:
    int estimate_;
    int budget_;
};

// Transport failures that may succeed on a later attempt (timeouts, 5xx).
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message, std::string error_class = "transport_error")
        : Error(std::move(error_class), message) {}
};

class RateLimitError : public TransportError {
public:
    explicit RateLimitError(const std::string& message, int retry_after_ms = 0)
        : TransportError(message, "rate_limited"), retry_after_ms_(retry_after_ms) {}

    int retry_after_ms() const noexcept { return retry_after_ms_; }

private:
    int retry_after_ms_;
};

// Credentials or configuration problems; never retried.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

}  // namespace grag
