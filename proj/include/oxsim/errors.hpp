#pragma once

#include <stdexcept>
#include <string>

namespace oxsim {

/// Error categories surfaced by the library. The CLI maps these onto its
/// machine-parsable exit codes (E_PARSE, E_CONFIG, E_FORMING, E_DATA).
enum class Errc {
    DuplicateId,
    SegmentOutOfBounds,
    KindIdMismatch,
    MalformedRow,
    SweepOutOfBounds,
    Unformed,
    FormingFailed,
    SubThreshold,
    EmptySample,
    InsufficientData,
    ZeroVariance,
    DegenerateFit,
    ConfigError,
    DataError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const { return code_; }

private:
    Errc code_;
};

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::SegmentOutOfBounds: return "SegmentOutOfBounds";
        case Errc::KindIdMismatch: return "KindIdMismatch";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::SweepOutOfBounds: return "SweepOutOfBounds";
        case Errc::Unformed: return "Unformed";
        case Errc::FormingFailed: return "FormingFailed";
        case Errc::SubThreshold: return "SubThreshold";
        case Errc::EmptySample: return "EmptySample";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::ZeroVariance: return "ZeroVariance";
        case Errc::DegenerateFit: return "DegenerateFit";
        case Errc::ConfigError: return "ConfigError";
        case Errc::DataError: return "DataError";
    }
    return "UnknownError";
}

}  // namespace oxsim
