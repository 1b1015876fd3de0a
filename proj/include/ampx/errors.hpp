#pragma once

#include <stdexcept>
#include <string>

namespace ampx {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DelayMismatch : Error {
    explicit DelayMismatch(const std::string& msg) : Error(msg) {}
};

struct DegenerateLoop : Error {
    explicit DegenerateLoop(const std::string& msg) : Error(msg) {}
};

struct DelayedFeedbackUnsupported : Error {
    explicit DelayedFeedbackUnsupported(const std::string& msg) : Error(msg) {}
};

struct PoleOnAxis : Error {
    explicit PoleOnAxis(const std::string& msg) : Error(msg) {}
};

struct DelayedSystem : Error {
    explicit DelayedSystem(const std::string& msg) : Error(msg) {}
};

struct ImproperSystem : Error {
    explicit ImproperSystem(const std::string& msg) : Error(msg) {}
};

struct NonPositiveRatio : Error {
    explicit NonPositiveRatio(const std::string& msg) : Error(msg) {}
};

struct ZeroStiffness : Error {
    explicit ZeroStiffness(const std::string& msg) : Error(msg) {}
};

struct ConfigInconsistent : Error {
    explicit ConfigInconsistent(const std::string& msg) : Error(msg) {}
};

struct NumericalBlowup : Error {
    explicit NumericalBlowup(const std::string& msg) : Error(msg) {}
};

struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

struct NoFlatRegion : Error {
    explicit NoFlatRegion(const std::string& msg) : Error(msg) {}
};

struct RankDeficient : Error {
    explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

struct TooShort : Error {
    explicit TooShort(const std::string& msg) : Error(msg) {}
};

struct BandTooNoisy : Error {
    explicit BandTooNoisy(const std::string& msg) : Error(msg) {}
};

struct NoInertialAsymptote : Error {
    explicit NoInertialAsymptote(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace ampx
