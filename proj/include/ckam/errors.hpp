#pragma once

#include <stdexcept>
#include <string>

namespace ckam {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& what = "grid mismatch") : Error(what) {}
};

struct DualRangeExceeded : Error {
    explicit DualRangeExceeded(const std::string& what) : Error(what) {}
};

struct CflViolation : Error {
    explicit CflViolation(const std::string& what) : Error(what) {}
};

struct ContractionViolation : Error {
    explicit ContractionViolation(const std::string& what) : Error(what) {}
};

/// Sup-norm of an evolving grid function crossed the divergence threshold.
/// Unbounded evolution is a legitimate outcome for some models; callers that
/// expect it catch this and flag the result instead of failing.
struct DivergedError : Error {
    explicit DivergedError(const std::string& what) : Error(what) {}
};

struct NotConverged : Error {
    explicit NotConverged(const std::string& what) : Error(what) {}
};

struct WindowTooShort : Error {
    explicit WindowTooShort(const std::string& what) : Error(what) {}
};

struct StrideTooCoarse : Error {
    explicit StrideTooCoarse(const std::string& what) : Error(what) {}
};

struct EmptyResult : Error {
    explicit EmptyResult(const std::string& what) : Error(what) {}
};

struct PlanarReductionFailed : Error {
    explicit PlanarReductionFailed(const std::string& what) : Error(what) {}
};

struct NotASaddle : Error {
    explicit NotASaddle(const std::string& what) : Error(what) {}
};

struct NoIntersection : Error {
    explicit NoIntersection(const std::string& what) : Error(what) {}
};

struct TooLarge : Error {
    explicit TooLarge(const std::string& what) : Error(what) {}
};

struct Unsupported : Error {
    explicit Unsupported(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace ckam
