#pragma once

#include <stdexcept>
#include <string>

namespace mixtau {

// Error categories map onto CLI exit codes: Config -> 2, Data -> 3, Numeric -> 4.
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define MIXTAU_DEFINE_ERROR(NAME, KIND)                                               \
    class NAME : public Error {                                                       \
    public:                                                                           \
        explicit NAME(const std::string& msg) : Error(ErrorKind::KIND, #NAME ": " + msg) {} \
    }

// model fitting
MIXTAU_DEFINE_ERROR(NonConvergence, Numeric);
MIXTAU_DEFINE_ERROR(SeparationDetected, Numeric);
MIXTAU_DEFINE_ERROR(RankDeficientDesign, Data);
MIXTAU_DEFINE_ERROR(EmptyCategory, Data);
MIXTAU_DEFINE_ERROR(TooFewObservations, Data);
MIXTAU_DEFINE_ERROR(OutOfSupport, Data);
MIXTAU_DEFINE_ERROR(NonFiniteLikelihood, Numeric);

// surrogate / association
MIXTAU_DEFINE_ERROR(DomainError, Numeric);
MIXTAU_DEFINE_ERROR(EmptyData, Data);
MIXTAU_DEFINE_ERROR(LengthMismatch, Data);
MIXTAU_DEFINE_ERROR(ShapeMismatch, Data);

// inference
MIXTAU_DEFINE_ERROR(TooManyFailures, Numeric);
MIXTAU_DEFINE_ERROR(InvalidAlpha, Config);
MIXTAU_DEFINE_ERROR(UndefinedModeration, Numeric);

// io / smoothing
MIXTAU_DEFINE_ERROR(MissingColumn, Data);
MIXTAU_DEFINE_ERROR(NonNumericCell, Data);
MIXTAU_DEFINE_ERROR(EmptyAfterFiltering, Data);
MIXTAU_DEFINE_ERROR(ConfigError, Config);
MIXTAU_DEFINE_ERROR(DegenerateWindow, Numeric);

#undef MIXTAU_DEFINE_ERROR

}  // namespace mixtau
