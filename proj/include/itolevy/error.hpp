#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace itolevy {

enum class ErrorCode {
    NonPositiveEigenvalue,
    NonOrthogonalBasis,
    DimensionMismatch,
    MultisetMismatch,
    BlockShapeMismatch,
    NonOrthogonalRotation,
    NonNormalizable,
    ZeroJumpSize,
    InvalidArgument,
    IndexOutOfRange,
    SpecMismatch,
    GridMismatch,
    ConfigNotFound,
    ConfigInvalid,
    UnknownCheck,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition) {
        fail(code, message);
    }
}

} // namespace itolevy
