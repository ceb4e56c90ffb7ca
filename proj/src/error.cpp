#include "itolevy/error.hpp"

namespace itolevy {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorCode::NonOrthogonalBasis: return "NonOrthogonalBasis";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MultisetMismatch: return "MultisetMismatch";
    case ErrorCode::BlockShapeMismatch: return "BlockShapeMismatch";
    case ErrorCode::NonOrthogonalRotation: return "NonOrthogonalRotation";
    case ErrorCode::NonNormalizable: return "NonNormalizable";
    case ErrorCode::ZeroJumpSize: return "ZeroJumpSize";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ConfigNotFound: return "ConfigNotFound";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::UnknownCheck: return "UnknownCheck";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message)
    , code_(code)
{
}

void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace itolevy
