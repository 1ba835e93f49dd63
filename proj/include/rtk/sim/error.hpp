#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtk {

enum class ErrorCode {
    Usage,
    Validation,
    Conflict,
    NotFound,
    Consistency,
    Protocol,
    StateMachine,
    SchedulerEmpty,
    Underflow,
    ObjectState,
    Device,
    Configuration,
    DataIntegrity,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Raised for misuse of the simulation API and for malformed inputs.
class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw SimError(code, what); }

}  // namespace rtk
