#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmdcal {

enum class ErrorCode {
    OffPlane,
    GrazingRay,
    WrongSide,
    BackwardDirection,
    Miss,
    TotalInternalReflection,
    RayLost,
    OutOfImage,
    NoConvergence,
    Underdetermined,
    IllConditioned,
    LiftDiverged,
    DegenerateDirection,
    InvalidArgument,
    TooManyDropped,
    UnmatchedDots,
    Parse,
    Integrity,
    Io,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() is stable and used
// for the CLI's machine-readable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace hmdcal
