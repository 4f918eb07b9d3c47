#pragma once

#include <stdexcept>
#include <string>

namespace fradelay {

// Error taxonomy shared across modules. Everything derives from Error so
// callers can catch the library as a whole; the CLI maps leaf types to
// exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A magnitude left the representable range. For the evaluator and the
// steppers this usually signals genuine solution growth, not a bug.
struct OverflowError : Error {
    explicit OverflowError(const std::string& msg) : Error(msg) {}
};

struct RegionError : Error {
    explicit RegionError(const std::string& msg) : Error(msg) {}
};

struct ContourTooCloseError : Error {
    explicit ContourTooCloseError(const std::string& msg) : Error(msg) {}
};

struct NearDefectiveError : Error {
    explicit NearDefectiveError(const std::string& msg) : Error(msg) {}
};

struct QuadratureError : Error {
    explicit QuadratureError(const std::string& msg) : Error(msg) {}
};

struct NoConvergenceError : Error {
    NoConvergenceError(const std::string& msg, double delta)
        : Error(msg), last_delta(delta) {}
    double last_delta;
};

struct InnerIterationError : Error {
    explicit InnerIterationError(const std::string& msg) : Error(msg) {}
};

struct NoContractionError : Error {
    explicit NoContractionError(const std::string& msg) : Error(msg) {}
};

}  // namespace fradelay
