#pragma once

#include "rtk/sim/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rtk::kernel {

using sim::Tick;

enum class TimerKind : std::uint8_t { CyclicFire, AlarmFire, DelayExpiry, TimeoutExpiry };

std::string_view to_string(TimerKind k) noexcept;

struct TimerEvent {
    Tick due = 0;
    TimerKind kind = TimerKind::AlarmFire;
    std::uint32_t target = 0;  // handler thread for cyclic/alarm, task otherwise
    Tick period = 0;           // cyclic only
    std::uint64_t seq = 0;

    friend bool operator==(const TimerEvent&, const TimerEvent&) = default;
};

struct TimerStats {
    std::uint64_t inserted = 0;
    std::uint64_t processed = 0;
    std::uint64_t cancelled = 0;
};

/// Future events keyed by (due tick, insertion order).
class TimerQueue {
public:
    using Handle = std::uint64_t;

    Handle insert(Tick due, TimerKind kind, std::uint32_t target, Tick period = 0);
    bool cancel(Handle h);
    /// Removes and returns the earliest event with due <= now.
    std::optional<TimerEvent> pop_due(Tick now);
    std::optional<Tick> next_due() const;
    std::size_t pending() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }
    const TimerStats& stats() const noexcept { return stats_; }
    std::vector<TimerEvent> snapshot() const;

private:
    using Key = std::pair<Tick, std::uint64_t>;
    std::map<Key, TimerEvent> events_;
    std::unordered_map<Handle, Key> index_;
    std::uint64_t next_seq_ = 1;
    TimerStats stats_;
};

}  // namespace rtk::kernel
