#pragma once

#include "rtk/sim/activity.hpp"
#include "rtk/sim/energy.hpp"
#include "rtk/sim/error.hpp"
#include "rtk/sim/scheduler.hpp"
#include "rtk/sim/trace.hpp"
#include "rtk/sim/types.hpp"

#include <array>
#include <coroutine>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rtk::sim {

/// Execution time / energy charged by one firing.
struct Annotation {
    std::string label;
    Tick etm = 0;
    Energy eem;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// The single token of a T-THREAD: current marking plus CET/CEE accumulators.
struct Token {
    Place place = Place::PreDispatch;
    ContextKind context = ContextKind::Task;
    std::map<std::string, std::uint64_t> firing_counts;  // characteristic vector
    Tick cet = 0;
    Energy cee;
    std::uint64_t cycle_count = 0;
};

using BodyFactory = std::function<Activity(ThreadId self)>;

struct ThreadSpec {
    ThreadId id = 0;
    std::string name;
    ThreadKind kind = ThreadKind::Task;
    Priority priority = kLowestPriority;
    BodyFactory body;
};

struct ThreadStats {
    std::array<Tick, 8> ticks_by_context{};
    Tick max_continuous_run = 0;
    std::uint64_t activations = 0;

    Tick ticks_in(ContextKind c) const noexcept { return ticks_by_context[static_cast<std::size_t>(c)]; }
};

/// Hash-table entry for one registered T-THREAD.
struct ThreadInfo {
    ThreadId id = 0;
    std::string name;
    ThreadKind kind = ThreadKind::Task;
    Priority base_priority = 0;
    Priority current_priority = 0;
    ThreadState state = ThreadState::NonExistent;
    Tick state_tick = 0;
    Token token;
    std::optional<EventKind> pending_event;
    bool preempt_requested = false;
    bool interrupt_requested = false;
    ThreadStats stats;
};

struct StackFrame {
    std::optional<ThreadId> interrupted;
    ThreadId handler = 0;
    EventKind resume_event = EventKind::ReturnFromInterrupt;
    std::size_t saved_critical_depth = 0;
};

/// State reported through set_state (SIM_Running / SIM_Sleeping / SIM_Deffering).
enum class ReportedState : std::uint8_t { Running, Sleeping, Deferring };

class Engine;

class WaitAwaiter {
public:
    bool await_ready();
    void await_suspend(std::coroutine_handle<> h);
    EventKind await_resume();

private:
    friend class Engine;
    WaitAwaiter(Engine& e, ThreadId self) : engine_(&e), self_(self) {}
    Engine* engine_;
    ThreadId self_;
};

class BlockAwaiter {
public:
    bool await_ready();
    void await_suspend(std::coroutine_handle<> h);
    EventKind await_resume();

private:
    friend class Engine;
    BlockAwaiter(Engine& e, ThreadId self, EventKind expected) : engine_(&e), self_(self), expected_(expected) {}
    Engine* engine_;
    ThreadId self_;
    EventKind expected_;
};

class RunGate {
public:
    bool await_ready() const noexcept { return true; }
    void await_suspend(std::coroutine_handle<>) const noexcept {}
    EventKind await_resume();

private:
    friend class Engine;
    RunGate(Engine& e, ThreadId self) : engine_(&e), self_(self) {}
    Engine* engine_;
    ThreadId self_;
};

class CheckpointAwaiter {
public:
    bool await_ready();
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}

private:
    friend class Engine;
    CheckpointAwaiter(Engine& e, ThreadId self) : engine_(&e), self_(self) {}
    Engine* engine_;
    ThreadId self_;
};

class ExitAwaiter {
public:
    bool await_ready();
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}

private:
    friend class Engine;
    ExitAwaiter(Engine& e, ThreadId self) : engine_(&e), self_(self) {}
    Engine* engine_;
    ThreadId self_;
};

/// Deterministic single-threaded engine executing T-THREADs as cooperative
/// activities over a tick-granular clock.
///
/// Each call to execute_tick() resolves the current instant (interrupt entry,
/// dispatch, zero-time activity code) and then gives exactly one tick to the
/// selected thread. Every awaiter is a preemption point; multi-tick waits are
/// re-checked at each tick boundary, so a preemption raised at tick t splits
/// the running segment at t.
class Engine {
public:
    Engine();
    explicit Engine(std::size_t expected_count, std::uint32_t tick_us = kDefaultTickUs);
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // --- initialization and registry -------------------------------------
    void init(std::size_t expected_count, std::uint32_t tick_us = kDefaultTickUs);
    bool initialized() const noexcept { return initialized_; }

    ThreadId register_thread(ThreadSpec spec);
    void unregister_thread(ThreadId id);
    void all_created();
    bool check_all_created() const noexcept;
    std::size_t expected_count() const noexcept { return expected_count_; }
    std::size_t created_count() const noexcept { return created_count_; }

    bool contains(ThreadId id) const noexcept;
    const ThreadInfo& thread(ThreadId id) const;
    std::vector<ThreadId> thread_ids() const;

    /// Marks the thread that absorbs unattributed time; its consecutive
    /// segments are coalesced in the trace.
    void set_idle_thread(ThreadId id);
    std::optional<ThreadId> idle_thread() const noexcept { return idle_; }

    /// Replace the ready-queue policy. Only legal before any thread is readied.
    void set_scheduler(std::unique_ptr<Scheduler> scheduler);
    const Scheduler& scheduler() const noexcept { return *scheduler_; }

    // --- awaiters used inside activities ---------------------------------
    /// Consume `a.etm` ticks and `a.eem` energy. Returns ContinueRun, or the
    /// interruption kind if the wait was split by preemption or interrupt.
    WaitAwaiter wait(ThreadId self, Annotation a, std::optional<ContextKind> context = std::nullopt);
    /// Block until released; returns the delivered event kind.
    BlockAwaiter wait_event(ThreadId self, EventKind expected = EventKind::SleepArrival);
    /// Entry gate: yields Startup on the first pass after activation.
    RunGate wait_run(ThreadId self);
    /// Zero-time preemption point.
    CheckpointAwaiter checkpoint(ThreadId self);
    /// Terminate the calling thread (return from handler for handlers).
    ExitAwaiter exit(ThreadId self);
    /// Close one T-THREAD cycle (the token returns to its initial marking).
    void end_cycle(ThreadId self);

    // --- control ---------------------------------------------------------
    void start(ThreadId id);
    void stop(ThreadId id);
    /// Id the scheduler would run next, without committing.
    ThreadId schedule() const;
    /// Commit a task-level switch to the scheduler's choice.
    ThreadId context_switch();
    void preempt(ThreadId id);
    /// Raise an interrupt that activates `handler` at the next preemption point.
    void interrupt(ThreadId handler);
    /// Return from the handler on top of the interrupt stack.
    void ret_int();
    /// Waiting -> Ready with the given resume event.
    void release(ThreadId id, EventKind event = EventKind::SleepArrival);
    void set_priority(ThreadId id, Priority priority);
    void set_state(ThreadId id, ReportedState state);

    // --- critical sections ------------------------------------------------
    void begin_critical(ThreadId self);
    void end_critical(ThreadId self);
    bool in_critical() const noexcept { return critical_depth_ > 0; }
    std::size_t critical_depth() const noexcept { return critical_depth_; }
    std::optional<ThreadId> critical_owner() const noexcept { return critical_owner_; }

    // --- sinks and observers ---------------------------------------------
    void attach_sinks(TraceSink* trace, EventSink* events);
    void on_tick(std::function<void(Tick, std::optional<ThreadId>)> fn) { tick_observer_ = std::move(fn); }
    void on_exit(std::function<void(ThreadId)> fn) { exit_hook_ = std::move(fn); }
    void on_stop(std::function<void(ThreadId)> fn) { stop_hook_ = std::move(fn); }

    // --- time ------------------------------------------------------------
    Tick now() const noexcept { return now_; }
    std::uint32_t tick_us() const noexcept { return tick_us_; }
    /// Resolve the current instant and consume one tick.
    void execute_tick();
    /// Run a freshly started thread at the current instant until it exits.
    /// The thread may not consume time (used for the boot sequence).
    void run_to_completion(ThreadId id);
    /// Close the open trace segment (end of run).
    void finish();

    std::optional<ThreadId> executing() const noexcept;
    std::optional<ThreadId> current_task() const noexcept { return current_; }
    const std::vector<StackFrame>& stack() const noexcept { return stack_; }
    std::vector<ThreadId> pending_interrupts() const { return {pending_.begin(), pending_.end()}; }
    Tick unattributed_ticks() const noexcept { return unattributed_; }

private:
    friend class WaitAwaiter;
    friend class BlockAwaiter;
    friend class RunGate;
    friend class CheckpointAwaiter;
    friend class ExitAwaiter;

    struct Segment {
        Annotation annotation;
        ContextKind context = ContextKind::Task;
        Tick done = 0;
        Tick remaining = 0;
        std::uint64_t serial = 0;
    };

    struct Record {
        ThreadInfo info;
        BodyFactory body;
        Activity activity;
        std::coroutine_handle<> resume_point;
        std::optional<Segment> segment;
        // Annotation handed to wait(), consumed when the awaiter suspends.
        Annotation staged;
        std::optional<ContextKind> staged_context;
        bool in_wait = false;
        bool startup_delivered = false;
        bool forced_preempt = false;
        bool fired_since_cycle = false;
        Tick ready_tick = 0;
        EventKind entry_event = EventKind::Startup;
        EventKind resume_value = EventKind::Startup;
    };

    struct Portion {
        TraceRecord record;
        std::uint64_t serial = 0;
    };

    enum class Posted : std::uint8_t { None, Wait, Block, Checkpoint, Exit };

    Record& rec(ThreadId id);
    const Record& rec(ThreadId id) const;
    void require_init() const;
    void check_caller(ThreadId self) const;
    ContextKind default_context(const Record& r) const noexcept;
    ReadyEntry entry_of(const Record& r) const noexcept;

    void post_wait(ThreadId self, std::coroutine_handle<> h);
    void post_block(ThreadId self, std::coroutine_handle<> h, EventKind expected);
    void post_simple(ThreadId self, std::coroutine_handle<> h, Posted what);

    Record* select_executor();
    void dispatch_if_needed();
    void dispatch(ThreadId id);
    void preempt_current();
    void enter_interrupt(ThreadId handler);
    std::optional<ThreadId> next_enterable_interrupt();
    void pop_interrupt();
    void resume(Record& r);
    void complete(Record& r);
    void consume_tick(Record& r);
    void transition(Record& r, ThreadState to);
    void make_ready(Record& r, EventKind entry);

    void emit_zero_length(Record& r, const Annotation& a, ContextKind ctx);
    void flush_portion();
    void emit(KernelEventType type, const Record& r, ThreadId other = 0, int value = 0);

    bool initialized_ = false;
    std::size_t expected_count_ = 0;
    std::size_t created_count_ = 0;
    bool all_created_ = false;
    std::uint32_t tick_us_ = kDefaultTickUs;
    Tick now_ = 0;
    Tick unattributed_ = 0;

    std::map<ThreadId, std::unique_ptr<Record>> threads_;
    std::unique_ptr<Scheduler> scheduler_;
    std::optional<ThreadId> current_;
    std::optional<ThreadId> idle_;
    std::vector<StackFrame> stack_;
    std::vector<ThreadId> pending_;
    std::size_t critical_depth_ = 0;
    std::optional<ThreadId> critical_owner_;

    std::optional<ThreadId> resuming_;
    Posted posted_ = Posted::None;
    std::uint64_t segment_serial_ = 0;

    std::optional<Portion> open_;
    std::optional<ThreadId> streak_thread_;
    Tick streak_len_ = 0;
    Tick streak_last_ = 0;

    bool sinks_attached_ = false;
    TraceSink* trace_sink_ = nullptr;
    EventSink* event_sink_ = nullptr;
    std::function<void(Tick, std::optional<ThreadId>)> tick_observer_;
    std::function<void(ThreadId)> exit_hook_;
    std::function<void(ThreadId)> stop_hook_;
};

}  // namespace rtk::sim
