#pragma once

#include <stdexcept>
#include <string>

namespace wharm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define WHARM_DEFINE_ERROR(Name)                                   \
    struct Name : Error {                                          \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

WHARM_DEFINE_ERROR(DomainError);
WHARM_DEFINE_ERROR(GridAlignmentError);
WHARM_DEFINE_ERROR(WeightError);
WHARM_DEFINE_ERROR(ParameterError);
WHARM_DEFINE_ERROR(RangeError);
WHARM_DEFINE_ERROR(SingularityError);
WHARM_DEFINE_ERROR(BackendError);
WHARM_DEFINE_ERROR(SizeError);
WHARM_DEFINE_ERROR(SparsityError);
WHARM_DEFINE_ERROR(DecompositionError);

#undef WHARM_DEFINE_ERROR

}  // namespace wharm
