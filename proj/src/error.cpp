#include "hmdcal/error.hpp"

namespace hmdcal {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::OffPlane: return "OffPlane";
    case ErrorCode::GrazingRay: return "GrazingRay";
    case ErrorCode::WrongSide: return "WrongSide";
    case ErrorCode::BackwardDirection: return "BackwardDirection";
    case ErrorCode::Miss: return "Miss";
    case ErrorCode::TotalInternalReflection: return "TotalInternalReflection";
    case ErrorCode::RayLost: return "RayLost";
    case ErrorCode::OutOfImage: return "OutOfImage";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::LiftDiverged: return "LiftDiverged";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooManyDropped: return "TooManyDropped";
    case ErrorCode::UnmatchedDots: return "UnmatchedDots";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Integrity: return "Integrity";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace hmdcal
