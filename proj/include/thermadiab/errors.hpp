#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace thermadiab {

// Every failure carries a stable tag; the CLI prints it as the first token of
// the diagnostic line so callers can grep for it.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& message)
        : std::runtime_error(tag + " " + message), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

#define THERMADIAB_DEFINE_ERROR(Name)                                        \
    struct Name : Error {                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

THERMADIAB_DEFINE_ERROR(NonHermitianInput);
THERMADIAB_DEFINE_ERROR(DimensionMismatch);
THERMADIAB_DEFINE_ERROR(NegativeEigenvalue);
THERMADIAB_DEFINE_ERROR(InvalidDensityMatrix);
THERMADIAB_DEFINE_ERROR(DegenerateGap);
THERMADIAB_DEFINE_ERROR(ContinuityLoss);
THERMADIAB_DEFINE_ERROR(GridTooCoarse);
THERMADIAB_DEFINE_ERROR(EvaluationFailure);
THERMADIAB_DEFINE_ERROR(NonFiniteBeta);
THERMADIAB_DEFINE_ERROR(StepTooLarge);
THERMADIAB_DEFINE_ERROR(BoundViolation);
THERMADIAB_DEFINE_ERROR(UnorderedSpectrum);
THERMADIAB_DEFINE_ERROR(EpsilonOutOfRange);
THERMADIAB_DEFINE_ERROR(NonPositiveBeta);
THERMADIAB_DEFINE_ERROR(UndefinedLimit);
THERMADIAB_DEFINE_ERROR(InsufficientSpan);
THERMADIAB_DEFINE_ERROR(InvalidSchedule);
THERMADIAB_DEFINE_ERROR(ConfigParse);
THERMADIAB_DEFINE_ERROR(FileIO);

#undef THERMADIAB_DEFINE_ERROR

}  // namespace thermadiab
