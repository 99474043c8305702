#pragma once

#include <stdexcept>
#include <string>

namespace harcap {

/// Base class for every error the harness raises. `kind()` is a stable
/// machine-readable tag used in per-sample failure records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define HARCAP_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what) : Error(#Name, what) {}     \
    }

HARCAP_DEFINE_ERROR(ParseError);
HARCAP_DEFINE_ERROR(DuplicateId);
HARCAP_DEFINE_ERROR(DuplicateKeyword);
HARCAP_DEFINE_ERROR(EmptyEntry);
HARCAP_DEFINE_ERROR(IoError);
HARCAP_DEFINE_ERROR(DimensionMismatch);
HARCAP_DEFINE_ERROR(KTooLarge);
HARCAP_DEFINE_ERROR(PreconditionViolation);
HARCAP_DEFINE_ERROR(TransportError);
HARCAP_DEFINE_ERROR(BackendError);
HARCAP_DEFINE_ERROR(EmptyResponse);
HARCAP_DEFINE_ERROR(DimensionDrift);
HARCAP_DEFINE_ERROR(TooManyImages);
HARCAP_DEFINE_ERROR(MissingLexiconEntry);
HARCAP_DEFINE_ERROR(ZeroVector);
HARCAP_DEFINE_ERROR(EmptyTokenization);
HARCAP_DEFINE_ERROR(AmbiguousJudgeOutput);
HARCAP_DEFINE_ERROR(ConfigError);
HARCAP_DEFINE_ERROR(MissingArtifacts);

#undef HARCAP_DEFINE_ERROR

}  // namespace harcap
