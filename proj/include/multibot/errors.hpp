#pragma once

#include <stdexcept>
#include <string>

namespace multibot {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MULTIBOT_DEFINE_ERROR(Name)                                                                 \
    class Name : public Error {                                                                    \
    public:                                                                                        \
        using Error::Error;                                                                        \
    }

// world
MULTIBOT_DEFINE_ERROR(SyntaxError);
MULTIBOT_DEFINE_ERROR(ValidationError);
MULTIBOT_DEFINE_ERROR(UnknownLocation);
MULTIBOT_DEFINE_ERROR(NoPath);
MULTIBOT_DEFINE_ERROR(OffNetwork);

// sim
MULTIBOT_DEFINE_ERROR(NotAirborne);

// behavior
MULTIBOT_DEFINE_ERROR(UnsupportedCapability);
MULTIBOT_DEFINE_ERROR(UnknownEntity);
MULTIBOT_DEFINE_ERROR(AlreadyTerminal);

// tbs
MULTIBOT_DEFINE_ERROR(IllegalPhaseTransition);

// dialogue
MULTIBOT_DEFINE_ERROR(UnknownRobotName);

// orchestrator
MULTIBOT_DEFINE_ERROR(ConfigError);
MULTIBOT_DEFINE_ERROR(BindError);
MULTIBOT_DEFINE_ERROR(NoWizardConnected);
MULTIBOT_DEFINE_ERROR(NotInWizardMode);
MULTIBOT_DEFINE_ERROR(MalformedLog);
MULTIBOT_DEFINE_ERROR(VersionMismatch);

#undef MULTIBOT_DEFINE_ERROR

/// Wire decoding failure; `field` names the offending key or "line" for framing errors.
class DecodeError : public Error {
public:
    DecodeError(std::string field, const std::string& what)
        : Error("decode error at '" + field + "': " + what), field_(std::move(field))
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace multibot
