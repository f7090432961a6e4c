#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ndlab {

enum class ErrorCode {
    InvalidArgument,
    // lattice
    InvalidDimension,
    ResolutionTooSmall,
    EllipticityViolated,
    // weights
    NonPositiveWeight,
    EmptyBallFamily,
    NonPositiveExponentGap,
    BallWrapsTorus,
    DegenerateBall,
    // adjoint_solution
    NullspaceNotSimple,
    SignIndefinite,
    // semigroup
    EigendecompositionFailed,
    NoFiniteConstant,
    EmptyAnnulus,
    // calculus
    SpectrumInLeftHalfPlane,
    QuadratureNotConverged,
    ZeroGradient,
    // czd
    AlphaTooSmall,
    NoDyadicStructure,
    InvalidExponent,
    // lab
    EmptyTimeGrid,
    ZeroSquareFunction,
    NotMeanZero,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a code and the module it came from.
class LabError : public std::runtime_error {
public:
    LabError(ErrorCode code, std::string module, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + " [" + module + "]: " + what),
          code_(code),
          module_(std::move(module)),
          detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }
    /// The message without the code and module prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string module_;
    std::string detail_;
};

}  // namespace ndlab
