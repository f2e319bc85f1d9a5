#include "growthlab/error.hpp"

namespace growthlab {

const char* error_code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::PartitionCoarserThanPath: return "PartitionCoarserThanPath";
    case ErrorCode::KernelProducedInvalidPoint: return "KernelProducedInvalidPoint";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::NonPositiveReturn: return "NonPositiveReturn";
    case ErrorCode::MissingQV: return "MissingQV";
    case ErrorCode::MissingSpec: return "MissingSpec";
    case ErrorCode::CertificationFailed: return "CertificationFailed";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::NonFiniteLambda: return "NonFiniteLambda";
    case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorCode::NoAtomInBall: return "NoAtomInBall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::TooFewAssets: return "TooFewAssets";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code)
{
}

}  // namespace growthlab
