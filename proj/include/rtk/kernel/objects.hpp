#pragma once

#include "rtk/kernel/er.hpp"
#include "rtk/kernel/timer_queue.hpp"
#include "rtk/kernel/wait_queue.hpp"

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rtk::kernel {

enum class ObjectClass : std::uint8_t { Semaphore, EventFlag, Mutex, Mailbox, MessageBuffer, FixedPool, VariablePool };

std::string_view to_string(ObjectClass c) noexcept;
std::optional<ObjectClass> parse_object_class(std::string_view s) noexcept;

enum class FlagMode : std::uint8_t { And, Or };

struct Semaphore {
    ID id = 0;
    std::uint32_t exinf = 0;
    int count = 0;
    int max_count = 0;
    WaitQueue waiters;
};

struct EventFlag {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::uint32_t pattern = 0;
    WaitQueue waiters;
};

struct Message {
    int priority = 1;
    std::string text;

    friend bool operator==(const Message&, const Message&) = default;
};

struct Mailbox {
    ID id = 0;
    std::uint32_t exinf = 0;
    // Kept sorted by (priority, arrival).
    std::vector<std::pair<std::uint64_t, Message>> queue;
    std::uint64_t next_seq = 0;
    WaitQueue waiters;
};

struct MessageBuffer {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t capacity = 0;
    std::size_t max_message = 0;
    std::deque<std::string> messages;
    std::size_t used = 0;
    WaitQueue senders;
    WaitQueue receivers;
};

struct Mutex {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::optional<ThreadId> owner;
    WaitQueue waiters;
};

struct FixedPool {
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t block_size = 0;
    std::vector<std::optional<ThreadId>> owners;  // one slot per block
    std::size_t in_use = 0;
    std::size_t high_water = 0;
    WaitQueue waiters;
};

struct VariablePool {
    struct Allocation {
        std::size_t size = 0;
        ThreadId owner = 0;
    };
    ID id = 0;
    std::uint32_t exinf = 0;
    std::size_t total = 0;
    std::map<std::size_t, std::size_t> free_list;  // offset -> size, coalesced
    std::map<std::size_t, Allocation> allocated;   // offset -> allocation
    std::size_t used = 0;
    std::size_t high_water = 0;
    WaitQueue waiters;
};

enum class WaitKind : std::uint8_t {
    None,
    Sleep,
    Delay,
    Semaphore,
    EventFlag,
    MailboxReceive,
    BufferSend,
    BufferReceive,
    Mutex,
    FixedPool,
    VariablePool,
};

std::string_view to_string(WaitKind k) noexcept;

/// What a blocked task is waiting for, plus its request parameters.
struct WaitInfo {
    WaitKind kind = WaitKind::None;
    ID object = 0;
    int count = 0;
    std::uint32_t pattern = 0;
    FlagMode mode = FlagMode::And;
    bool clear = false;
    std::string payload;
    std::size_t size = 0;
    std::optional<TimerQueue::Handle> timer;
};

struct TaskControlBlock {
    ThreadId id = 0;
    std::uint32_t exinf = 0;
    int wakeup_count = 0;
    int suspend_count = 0;
    std::uint64_t wakeups_issued = 0;
    std::uint64_t sleeps_satisfied = 0;
    WaitInfo wait;
    std::vector<ID> owned_mutexes;

    // Delivered on release.
    ER result = E_OK;
    std::uint32_t flag_result = 0;
    Message message_result;
    std::string bytes_result;
    std::size_t block_result = 0;
};

struct HandlerControl {
    ThreadId thread = 0;
    sim::ThreadKind kind = sim::ThreadKind::CyclicHandler;
    Tick period = 0;
    Tick phase = 0;
    Tick offset = 0;
    std::optional<std::uint32_t> line;
    std::uint64_t activations = 0;
    std::optional<TimerQueue::Handle> timer;
};

}  // namespace rtk::kernel
