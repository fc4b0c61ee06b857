#pragma once

#include <stdexcept>
#include <string>

namespace posi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define POSI_DEFINE_ERROR(Name)                        \
    struct Name : Error {                              \
        using Error::Error;                            \
        Name() : Error(#Name) {}                       \
    }

POSI_DEFINE_ERROR(DomainError);
POSI_DEFINE_ERROR(BadLevel);
POSI_DEFINE_ERROR(NonPsd);
POSI_DEFINE_ERROR(NoConvergence);
POSI_DEFINE_ERROR(IndexOutOfRange);
POSI_DEFINE_ERROR(RankDeficient);
POSI_DEFINE_ERROR(TooLarge);
POSI_DEFINE_ERROR(DegenerateDof);
POSI_DEFINE_ERROR(ModelNotInCandidateSet);
POSI_DEFINE_ERROR(MissingForcedIndex);
POSI_DEFINE_ERROR(NonBinaryResponse);
POSI_DEFINE_ERROR(ProbOutOfRange);
POSI_DEFINE_ERROR(SingularHessian);
POSI_DEFINE_ERROR(MleNonexistent);
POSI_DEFINE_ERROR(KTooLarge);
POSI_DEFINE_ERROR(SelectionFailed);
POSI_DEFINE_ERROR(AllModelsFailed);
POSI_DEFINE_ERROR(DimensionMismatch);
POSI_DEFINE_ERROR(ConfigError);

#undef POSI_DEFINE_ERROR

} // namespace posi
