#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demandforge {

enum class ErrorKind {
    MissingColumn,
    ParseError,
    FrequencyViolation,
    GapError,
    NegativeTarget,
    SeriesTooShort,
    InvalidArgument,
    DuplicateKey,
    SchemaCollision,
    EmptyMatrix,
    InsufficientData,
    SingularSystem,
    UnknownSeries,
    VersionMismatch,
    CorruptPayload,
    TooFewSeries,
    OutOfRange,
    EmptyInput,
    ZeroDenominator,
    ZeroDemand,
    HashCollision,
    IoError,
    ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::FrequencyViolation: return "FrequencyViolation";
        case ErrorKind::GapError: return "GapError";
        case ErrorKind::NegativeTarget: return "NegativeTarget";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DuplicateKey: return "DuplicateKey";
        case ErrorKind::SchemaCollision: return "SchemaCollision";
        case ErrorKind::EmptyMatrix: return "EmptyMatrix";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::UnknownSeries: return "UnknownSeries";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptPayload: return "CorruptPayload";
        case ErrorKind::TooFewSeries: return "TooFewSeries";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::ZeroDenominator: return "ZeroDenominator";
        case ErrorKind::ZeroDemand: return "ZeroDemand";
        case ErrorKind::HashCollision: return "HashCollision";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind; the
/// message is prefixed with the kind name so it reads well on stderr.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace demandforge
