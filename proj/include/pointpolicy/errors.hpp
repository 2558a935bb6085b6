#pragma once

#include <stdexcept>
#include <string>

namespace pointpolicy {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define POINTPOLICY_DEFINE_ERROR(Name)                     \
    class Name : public Error {                            \
    public:                                                \
        explicit Name(const std::string& what)             \
            : Error(std::string(#Name ": ") + what) {}     \
    };

// geometry
POINTPOLICY_DEFINE_ERROR(DepthNonPositive)
POINTPOLICY_DEFINE_ERROR(DegenerateGeometry)
POINTPOLICY_DEFINE_ERROR(DegenerateConfiguration)
POINTPOLICY_DEFINE_ERROR(NonUnitInput)
// retarget
POINTPOLICY_DEFINE_ERROR(MissingKeypoint)
// policy
POINTPOLICY_DEFINE_ERROR(ShapeMismatch)
POINTPOLICY_DEFINE_ERROR(SchemaMismatch)
POINTPOLICY_DEFINE_ERROR(EmptyDataset)
// control
POINTPOLICY_DEFINE_ERROR(NoCoverage)
// simenv
POINTPOLICY_DEFINE_ERROR(InvalidSpec)
POINTPOLICY_DEFINE_ERROR(PlanningFailed)
// dataio
POINTPOLICY_DEFINE_ERROR(CorruptFile)
POINTPOLICY_DEFINE_ERROR(SchemaViolation)
POINTPOLICY_DEFINE_ERROR(FormatVersionMismatch)
POINTPOLICY_DEFINE_ERROR(SchemaMismatchAcrossDemos)
POINTPOLICY_DEFINE_ERROR(ConfigError)

#undef POINTPOLICY_DEFINE_ERROR

}  // namespace pointpolicy
