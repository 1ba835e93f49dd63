#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rtk::sim {

using ThreadId = std::uint32_t;
using Tick = std::uint64_t;
using Priority = int;

// Smaller value = higher priority. User tasks live in [kHighestPriority, kLowestPriority];
// the initialization task sits above them and the idle task below.
inline constexpr Priority kInitPriority = 0;
inline constexpr Priority kHighestPriority = 1;
inline constexpr Priority kLowestPriority = 140;
inline constexpr Priority kIdlePriority = kLowestPriority + 1;

inline constexpr std::uint32_t kDefaultTickUs = 1000;

/// Notification delivered to a T-THREAD when it regains the processor.
enum class EventKind : std::uint8_t {
    Startup,               // first dispatch after activation (source transition)
    ContinueRun,           // normal continuation
    ReturnFromPreemption,  // resumed after a higher-priority thread ran
    ReturnFromInterrupt,   // resumed after a handler returned
    SleepArrival,          // the awaited event arrived
};

enum class ThreadKind : std::uint8_t { Task, CyclicHandler, AlarmHandler, InterruptHandler };

enum class ThreadState : std::uint8_t {
    NonExistent,
    Dormant,
    Ready,
    Running,
    Waiting,
    Suspended,
    WaitingSuspended,
};

/// Execution context of a trace segment.
enum class ContextKind : std::uint8_t { Startup, Task, Svc, CycHandler, AlmHandler, Isr, Bfm, Idle };

/// Places of the per-thread Petri net.
enum class Place : std::uint8_t { PreDispatch, Running, Blocked, Done };

inline constexpr bool is_handler(ThreadKind k) noexcept { return k != ThreadKind::Task; }

std::string_view to_string(EventKind k) noexcept;
std::string_view to_string(ThreadKind k) noexcept;
std::string_view to_string(ThreadState s) noexcept;
std::string_view to_string(ContextKind c) noexcept;
std::string_view to_string(Place p) noexcept;

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;
std::optional<ContextKind> parse_context_kind(std::string_view s) noexcept;

/// Three-letter state code used by the debug listing (RUN, RDY, WAI, ...).
std::string_view state_code(ThreadState s) noexcept;
std::optional<ThreadState> parse_state_code(std::string_view s) noexcept;

}  // namespace rtk::sim
