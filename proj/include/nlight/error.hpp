#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlight {

enum class ErrorCode {
    // input / validation
    MalformedHeader,
    CountMismatch,
    NonNumeric,
    NegativeInput,
    InvalidDimension,
    InvalidArgument,
    InvalidSpec,
    MissingColumn,
    DuplicateKey,
    IoError,
    NotNested,
    MismatchedSamples,
    NotEnoughLocations,
    TooFewObservations,
    // numerical
    DegenerateVariance,
    RankDeficient,
    InsufficientEffectiveObservations,
    ZeroBandwidth,
    AllCandidatesFailed,
    NonPositiveRSS,
    ZeroLight,
    ZeroColumnTotal,
};

std::string_view to_string(ErrorCode code) noexcept;

// True for failures of the numerical machinery rather than of the inputs.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace nlight
