#pragma once

#include <stdexcept>
#include <string>

namespace growthlab {

enum class ErrorCode {
    InvalidArgument,
    NonPositiveEntry,
    DimensionTooSmall,
    PartitionCoarserThanPath,
    KernelProducedInvalidPoint,
    NonFiniteState,
    DimensionMismatch,
    NegativeWeight,
    RejectionBudgetExceeded,
    NonPositiveReturn,
    MissingQV,
    MissingSpec,
    CertificationFailed,
    DegenerateSamples,
    NonFiniteLambda,
    NonFiniteIntegrand,
    NoAtomInBall,
    ParseError,
    NonPositivePrice,
    TooFewAssets,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace growthlab
