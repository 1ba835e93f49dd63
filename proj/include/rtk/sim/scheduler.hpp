#pragma once

#include "rtk/sim/types.hpp"

#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace rtk::sim {

struct ReadyEntry {
    ThreadId id = 0;
    Priority priority = 0;
    Tick ready_tick = 0;
};

/// Ready-queue policy the engine consults when choosing the next task.
class Scheduler {
public:
    virtual ~Scheduler() = default;

    virtual void enqueue(const ReadyEntry& entry) = 0;
    virtual void remove(ThreadId id) = 0;
    virtual bool contains(ThreadId id) const = 0;
    virtual std::optional<ReadyEntry> peek() const = 0;
    /// True when `candidate` must displace `running`.
    virtual bool outranks(const ReadyEntry& candidate, const ReadyEntry& running) const = 0;
    /// Queue contents in dispatch order.
    virtual std::vector<ReadyEntry> snapshot() const = 0;
};

/// Fixed-priority preemptive policy: lowest priority value first, then earliest
/// ready tick, then ascending id. Equal priorities never preempt each other.
class PriorityScheduler final : public Scheduler {
public:
    void enqueue(const ReadyEntry& entry) override;
    void remove(ThreadId id) override;
    bool contains(ThreadId id) const override { return index_.contains(id); }
    std::optional<ReadyEntry> peek() const override;
    bool outranks(const ReadyEntry& candidate, const ReadyEntry& running) const override {
        return candidate.priority < running.priority;
    }
    std::vector<ReadyEntry> snapshot() const override;

private:
    using Key = std::tuple<Priority, Tick, ThreadId>;
    std::set<Key> queue_;
    std::unordered_map<ThreadId, Key> index_;
};

}  // namespace rtk::sim
