#pragma once

#include <stdexcept>
#include <string>

namespace mamo {

enum class ErrorCode {
    UndefinedDiagonal,
    IncompatibleModeSet,
    InvalidText,
    InvalidAlphabet,
    TamperDetected,
    WrongKey,
    MalformedFrame,
    EditRejected,
    NoCoveringSchedule,
    ScheduleMismatch,
    UnknownField,
    InsufficientBalance,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

// Single exception type for all contract violations; the code tells the
// caller which contract was broken.
class MamoError : public std::runtime_error {
public:
    MamoError(ErrorCode code, const std::string& message);

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace mamo
