#pragma once

#include <stdexcept>
#include <string>

namespace evimacs {

// Invalid configuration or input data (bad BPA file, unknown problem id, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Requested work exceeds a configured resource cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A physical model reached an invalid state (negative radius, ...).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A response/objective evaluation failed; what() carries the context.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace evimacs
