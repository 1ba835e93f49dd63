#include "rtk/sim/scheduler.hpp"

namespace rtk::sim {

void PriorityScheduler::enqueue(const ReadyEntry& entry) {
    remove(entry.id);
    Key key{entry.priority, entry.ready_tick, entry.id};
    queue_.insert(key);
    index_.emplace(entry.id, key);
}

void PriorityScheduler::remove(ThreadId id) {
    auto it = index_.find(id);
    if (it == index_.end()) return;
    queue_.erase(it->second);
    index_.erase(it);
}

std::optional<ReadyEntry> PriorityScheduler::peek() const {
    if (queue_.empty()) return std::nullopt;
    const auto& [prio, tick, id] = *queue_.begin();
    return ReadyEntry{id, prio, tick};
}

std::vector<ReadyEntry> PriorityScheduler::snapshot() const {
    std::vector<ReadyEntry> out;
    out.reserve(queue_.size());
    for (const auto& [prio, tick, id] : queue_) out.push_back({id, prio, tick});
    return out;
}

}  // namespace rtk::sim
