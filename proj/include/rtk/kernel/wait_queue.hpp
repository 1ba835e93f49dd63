#pragma once

#include "rtk/sim/types.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace rtk::kernel {

using sim::ThreadId;

/// Tasks blocked on one object. Ordered by (current priority, enqueue order);
/// priorities are looked up at query time so inheritance changes reorder it.
class WaitQueue {
public:
    void push(ThreadId id) { entries_.push_back({id, next_seq_++}); }

    bool remove(ThreadId id) {
        auto it = std::find_if(entries_.begin(), entries_.end(), [id](const Entry& e) { return e.id == id; });
        if (it == entries_.end()) return false;
        entries_.erase(it);
        return true;
    }

    bool contains(ThreadId id) const {
        return std::any_of(entries_.begin(), entries_.end(), [id](const Entry& e) { return e.id == id; });
    }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    template <typename PrioFn>
    std::vector<ThreadId> ordered(PrioFn&& prio) const {
        std::vector<std::pair<std::pair<sim::Priority, std::uint64_t>, ThreadId>> keyed;
        keyed.reserve(entries_.size());
        for (const auto& e : entries_) keyed.push_back({{prio(e.id), e.seq}, e.id});
        std::sort(keyed.begin(), keyed.end());
        std::vector<ThreadId> out;
        out.reserve(keyed.size());
        for (const auto& k : keyed) out.push_back(k.second);
        return out;
    }

    template <typename PrioFn>
    std::optional<ThreadId> head(PrioFn&& prio) const {
        std::optional<ThreadId> best;
        std::pair<sim::Priority, std::uint64_t> best_key{};
        for (const auto& e : entries_) {
            const std::pair<sim::Priority, std::uint64_t> key{prio(e.id), e.seq};
            if (!best || key < best_key) {
                best = e.id;
                best_key = key;
            }
        }
        return best;
    }

private:
    struct Entry {
        ThreadId id;
        std::uint64_t seq;
    };
    std::vector<Entry> entries_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace rtk::kernel
