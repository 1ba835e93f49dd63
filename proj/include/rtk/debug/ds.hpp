#pragma once

#include "rtk/kernel/kernel.hpp"

#include <string>
#include <variant>
#include <vector>

namespace rtk::debug {

using kernel::ID;
using sim::Priority;
using sim::ThreadId;
using sim::ThreadState;
using sim::Tick;

struct TaskRecord {
    ThreadId id = 0;
    std::uint32_t exinf = 0;
    Priority current_priority = 0;
    Priority base_priority = 0;
    ThreadState state = ThreadState::Dormant;
    int wakeup_count = 0;
    int suspend_count = 0;
    Tick max_continuous_run = 0;  // ticks
    Tick sys_run_time = 0;        // ticks
    Tick user_run_time = 0;       // ticks
    friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

struct SemaphoreRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    int count = 0;
    int max_count = 0;
    std::vector<ThreadId> waiters;
    friend bool operator==(const SemaphoreRecord&, const SemaphoreRecord&) = default;
};

struct EventFlagRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::uint32_t pattern = 0;
    std::vector<ThreadId> waiters;
    friend bool operator==(const EventFlagRecord&, const EventFlagRecord&) = default;
};

struct MutexRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::optional<ThreadId> owner;
    std::vector<ThreadId> waiters;
    friend bool operator==(const MutexRecord&, const MutexRecord&) = default;
};

struct MailboxRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t queued = 0;
    std::vector<ThreadId> waiters;
    friend bool operator==(const MailboxRecord&, const MailboxRecord&) = default;
};

struct MessageBufferRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t capacity = 0;
    std::size_t max_message = 0;
    std::size_t used = 0;
    std::size_t queued = 0;
    std::vector<ThreadId> senders;
    std::vector<ThreadId> receivers;
    friend bool operator==(const MessageBufferRecord&, const MessageBufferRecord&) = default;
};

struct FixedPoolRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t block_size = 0;
    std::size_t block_count = 0;
    std::size_t in_use = 0;
    std::size_t high_water = 0;
    std::vector<ThreadId> waiters;
    friend bool operator==(const FixedPoolRecord&, const FixedPoolRecord&) = default;
};

struct VariablePoolRecord {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t total = 0;
    std::size_t used = 0;
    std::size_t high_water = 0;
    std::size_t free_segments = 0;
    std::vector<ThreadId> waiters;
    friend bool operator==(const VariablePoolRecord&, const VariablePoolRecord&) = default;
};

using ObjectRecord = std::variant<SemaphoreRecord, EventFlagRecord, MutexRecord, MailboxRecord, MessageBufferRecord,
                                  FixedPoolRecord, VariablePoolRecord>;

struct DsSnapshot {
    Tick tick = 0;
    std::uint32_t tick_us = sim::kDefaultTickUs;
    std::vector<TaskRecord> tasks;
    std::vector<SemaphoreRecord> semaphores;
    std::vector<EventFlagRecord> event_flags;
    std::vector<MutexRecord> mutexes;
    std::vector<MailboxRecord> mailboxes;
    std::vector<MessageBufferRecord> message_buffers;
    std::vector<FixedPoolRecord> fixed_pools;
    std::vector<VariablePoolRecord> variable_pools;
    friend bool operator==(const DsSnapshot&, const DsSnapshot&) = default;
};

/// Copies of kernel state; none of these touch the engine.
TaskRecord ref_task(const kernel::Kernel& k, ThreadId id);
ObjectRecord ref_object(const kernel::Kernel& k, kernel::ObjectClass cls, ID id);
DsSnapshot take_snapshot(const kernel::Kernel& k);

/// Text listing. Run times are in ms when the tick is a whole number of
/// milliseconds, otherwise in ticks (the header says which).
std::string dump_listing(const DsSnapshot& s);
/// Inverse of dump_listing; throws SimError(DataIntegrity) on malformed text.
DsSnapshot parse_listing(std::string_view text);

}  // namespace rtk::debug
