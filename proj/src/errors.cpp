#include "mamo/errors.hpp"

namespace mamo {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UndefinedDiagonal: return "UndefinedDiagonal";
    case ErrorCode::IncompatibleModeSet: return "IncompatibleModeSet";
    case ErrorCode::InvalidText: return "InvalidText";
    case ErrorCode::InvalidAlphabet: return "InvalidAlphabet";
    case ErrorCode::TamperDetected: return "TamperDetected";
    case ErrorCode::WrongKey: return "WrongKey";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::EditRejected: return "EditRejected";
    case ErrorCode::NoCoveringSchedule: return "NoCoveringSchedule";
    case ErrorCode::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::InsufficientBalance: return "InsufficientBalance";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

MamoError::MamoError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw MamoError(code, message); }

}  // namespace mamo
