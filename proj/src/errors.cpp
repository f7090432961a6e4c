#include "ndlab/errors.hpp"

namespace ndlab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidDimension: return "InvalidDimension";
        case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
        case ErrorCode::EllipticityViolated: return "EllipticityViolated";
        case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
        case ErrorCode::EmptyBallFamily: return "EmptyBallFamily";
        case ErrorCode::NonPositiveExponentGap: return "NonPositiveExponentGap";
        case ErrorCode::BallWrapsTorus: return "BallWrapsTorus";
        case ErrorCode::DegenerateBall: return "DegenerateBall";
        case ErrorCode::NullspaceNotSimple: return "NullspaceNotSimple";
        case ErrorCode::SignIndefinite: return "SignIndefinite";
        case ErrorCode::EigendecompositionFailed: return "EigendecompositionFailed";
        case ErrorCode::NoFiniteConstant: return "NoFiniteConstant";
        case ErrorCode::EmptyAnnulus: return "EmptyAnnulus";
        case ErrorCode::SpectrumInLeftHalfPlane: return "SpectrumInLeftHalfPlane";
        case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorCode::ZeroGradient: return "ZeroGradient";
        case ErrorCode::AlphaTooSmall: return "AlphaTooSmall";
        case ErrorCode::NoDyadicStructure: return "NoDyadicStructure";
        case ErrorCode::InvalidExponent: return "InvalidExponent";
        case ErrorCode::EmptyTimeGrid: return "EmptyTimeGrid";
        case ErrorCode::ZeroSquareFunction: return "ZeroSquareFunction";
        case ErrorCode::NotMeanZero: return "NotMeanZero";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace ndlab
