#include "rtk/sim/engine.hpp"

#include <algorithm>
#include <string>

namespace rtk::sim {

namespace {

// Upper bound on zero-time resumptions within one instant before the engine
// declares a livelock (an activity that never consumes time nor blocks).
constexpr std::size_t kZeroTimeStepLimit = 1'000'000;

std::string name_of(ThreadId id) { return "thread " + std::to_string(id); }

bool legal_transition(ThreadKind kind, ThreadState from, ThreadState to) noexcept {
    using S = ThreadState;
    switch (from) {
        case S::Dormant: return to == S::Ready || (to == S::Running && is_handler(kind));
        case S::Ready: return to == S::Running || to == S::Dormant;
        case S::Running: return to == S::Ready || to == S::Waiting || to == S::Dormant;
        case S::Waiting: return to == S::Ready || to == S::Dormant;
        default: return false;
    }
}

}  // namespace

// --- awaiters ----------------------------------------------------------------

bool WaitAwaiter::await_ready() {
    engine_->check_caller(self_);
    return false;
}

void WaitAwaiter::await_suspend(std::coroutine_handle<> h) {
    engine_->post_wait(self_, h);
}

EventKind WaitAwaiter::await_resume() {
    auto& r = engine_->rec(self_);
    r.in_wait = false;
    return r.resume_value;
}

bool BlockAwaiter::await_ready() {
    engine_->check_caller(self_);
    const auto& r = engine_->rec(self_);
    if (is_handler(r.info.kind)) {
        fail(ErrorCode::Protocol, "handler " + r.info.name + " may not block");
    }
    if (engine_->critical_owner_ == self_) {
        fail(ErrorCode::Protocol, r.info.name + " cannot wait while holding a critical section");
    }
    return false;
}

void BlockAwaiter::await_suspend(std::coroutine_handle<> h) { engine_->post_block(self_, h, expected_); }

EventKind BlockAwaiter::await_resume() { return engine_->rec(self_).resume_value; }

EventKind RunGate::await_resume() {
    engine_->check_caller(self_);
    auto& r = engine_->rec(self_);
    if (!r.startup_delivered) {
        r.startup_delivered = true;
        return EventKind::Startup;
    }
    return EventKind::ContinueRun;
}

bool CheckpointAwaiter::await_ready() {
    engine_->check_caller(self_);
    return false;
}

void CheckpointAwaiter::await_suspend(std::coroutine_handle<> h) {
    engine_->post_simple(self_, h, Engine::Posted::Checkpoint);
}

bool ExitAwaiter::await_ready() {
    engine_->check_caller(self_);
    if (engine_->critical_owner_ == self_) {
        fail(ErrorCode::Protocol, engine_->rec(self_).info.name + " cannot exit inside a critical section");
    }
    return false;
}

void ExitAwaiter::await_suspend(std::coroutine_handle<> h) { engine_->post_simple(self_, h, Engine::Posted::Exit); }

// --- setup ---------------------------------------------------------------------

Engine::Engine() : scheduler_(std::make_unique<PriorityScheduler>()) {}

Engine::Engine(std::size_t expected_count, std::uint32_t tick_us) : Engine() { init(expected_count, tick_us); }

Engine::~Engine() = default;

void Engine::init(std::size_t expected_count, std::uint32_t tick_us) {
    if (initialized_) fail(ErrorCode::Usage, "engine is already initialized");
    if (expected_count == 0) fail(ErrorCode::Validation, "expected thread count must be at least 1");
    if (tick_us == 0) fail(ErrorCode::Validation, "tick resolution must be positive");
    initialized_ = true;
    expected_count_ = expected_count;
    tick_us_ = tick_us;
}

void Engine::require_init() const {
    if (!initialized_) fail(ErrorCode::Usage, "engine is not initialized");
}

ThreadId Engine::register_thread(ThreadSpec spec) {
    require_init();
    if (spec.id == 0) fail(ErrorCode::Validation, "thread ids must be positive");
    if (all_created_) fail(ErrorCode::Usage, "registration after all threads were declared created");
    if (threads_.contains(spec.id)) fail(ErrorCode::Conflict, name_of(spec.id) + " is already registered");
    if (created_count_ >= expected_count_) {
        fail(ErrorCode::Consistency, "more threads registered than the " + std::to_string(expected_count_) + " declared");
    }
    if (!spec.body) fail(ErrorCode::Validation, name_of(spec.id) + " has no body");
    if (spec.kind == ThreadKind::Task && (spec.priority < kInitPriority || spec.priority > kIdlePriority)) {
        fail(ErrorCode::Validation, name_of(spec.id) + " priority out of range");
    }

    auto r = std::make_unique<Record>();
    r->info.id = spec.id;
    r->info.name = spec.name.empty() ? name_of(spec.id) : std::move(spec.name);
    r->info.kind = spec.kind;
    r->info.base_priority = spec.priority;
    r->info.current_priority = spec.priority;
    r->info.state = ThreadState::Dormant;
    r->info.state_tick = now_;
    r->body = std::move(spec.body);
    threads_.emplace(spec.id, std::move(r));
    ++created_count_;
    return spec.id;
}

void Engine::unregister_thread(ThreadId id) {
    require_init();
    auto& r = rec(id);
    if (r.info.state != ThreadState::Dormant) {
        fail(ErrorCode::ObjectState, r.info.name + " must be dormant to be unregistered");
    }
    std::erase(pending_, id);
    if (idle_ == id) idle_.reset();
    threads_.erase(id);
}

void Engine::all_created() {
    require_init();
    if (created_count_ != expected_count_) {
        fail(ErrorCode::Consistency, std::to_string(created_count_) + " of " + std::to_string(expected_count_) +
                                         " threads created");
    }
    all_created_ = true;
}

bool Engine::check_all_created() const noexcept { return all_created_ && created_count_ == expected_count_; }

bool Engine::contains(ThreadId id) const noexcept { return threads_.contains(id); }

const ThreadInfo& Engine::thread(ThreadId id) const { return rec(id).info; }

std::vector<ThreadId> Engine::thread_ids() const {
    std::vector<ThreadId> ids;
    ids.reserve(threads_.size());
    for (const auto& [id, _] : threads_) ids.push_back(id);
    return ids;
}

void Engine::set_idle_thread(ThreadId id) {
    rec(id);
    idle_ = id;
}

void Engine::set_scheduler(std::unique_ptr<Scheduler> scheduler) {
    if (!scheduler) fail(ErrorCode::Validation, "scheduler must not be null");
    if (current_ || !scheduler_->snapshot().empty()) {
        fail(ErrorCode::Usage, "scheduler can only be replaced before any thread is readied");
    }
    scheduler_ = std::move(scheduler);
}

Engine::Record& Engine::rec(ThreadId id) {
    auto it = threads_.find(id);
    if (it == threads_.end()) fail(ErrorCode::NotFound, name_of(id) + " does not exist");
    return *it->second;
}

const Engine::Record& Engine::rec(ThreadId id) const {
    auto it = threads_.find(id);
    if (it == threads_.end()) fail(ErrorCode::NotFound, name_of(id) + " does not exist");
    return *it->second;
}

void Engine::check_caller(ThreadId self) const {
    if (!resuming_) fail(ErrorCode::Usage, "simulation call made outside of a running activity");
    if (*resuming_ != self) {
        fail(ErrorCode::Protocol, name_of(self) + " is not the running thread (" + name_of(*resuming_) + " is)");
    }
}

ContextKind Engine::default_context(const Record& r) const noexcept {
    if (idle_ == r.info.id) return ContextKind::Idle;
    switch (r.info.kind) {
        case ThreadKind::Task:
            return r.info.base_priority == kInitPriority ? ContextKind::Startup : ContextKind::Task;
        case ThreadKind::CyclicHandler: return ContextKind::CycHandler;
        case ThreadKind::AlarmHandler: return ContextKind::AlmHandler;
        case ThreadKind::InterruptHandler: return ContextKind::Isr;
    }
    return ContextKind::Task;
}

ReadyEntry Engine::entry_of(const Record& r) const noexcept {
    return ReadyEntry{r.info.id, r.info.current_priority, r.ready_tick};
}

// --- awaiter entry points ------------------------------------------------------

WaitAwaiter Engine::wait(ThreadId self, Annotation a, std::optional<ContextKind> context) {
    auto& r = rec(self);
    r.staged = std::move(a);
    r.staged_context = context;
    return WaitAwaiter{*this, self};
}

BlockAwaiter Engine::wait_event(ThreadId self, EventKind expected) { return BlockAwaiter{*this, self, expected}; }

RunGate Engine::wait_run(ThreadId self) { return RunGate{*this, self}; }

CheckpointAwaiter Engine::checkpoint(ThreadId self) { return CheckpointAwaiter{*this, self}; }

ExitAwaiter Engine::exit(ThreadId self) { return ExitAwaiter{*this, self}; }

void Engine::end_cycle(ThreadId self) {
    auto& r = rec(self);
    ++r.info.token.cycle_count;
    r.fired_since_cycle = false;
}

void Engine::post_wait(ThreadId self, std::coroutine_handle<> h) {
    auto& r = rec(self);
    Annotation a = std::move(r.staged);
    const auto ctx = r.staged_context;
    r.resume_point = h;
    r.in_wait = true;
    r.resume_value = EventKind::ContinueRun;
    const ContextKind context = ctx.value_or(default_context(r));
    r.info.token.place = Place::Running;
    r.info.token.context = context;
    if (a.etm == 0) {
        emit_zero_length(r, a, context);
        ++r.info.token.firing_counts[a.label];
        r.fired_since_cycle = true;
    } else {
        const Tick etm = a.etm;
        r.segment = Segment{std::move(a), context, 0, etm, ++segment_serial_};
    }
    posted_ = Posted::Wait;
}

void Engine::post_block(ThreadId self, std::coroutine_handle<> h, EventKind expected) {
    auto& r = rec(self);
    r.resume_point = h;
    r.info.pending_event = expected;
    transition(r, ThreadState::Waiting);
    r.info.token.place = Place::Blocked;
    if (current_ == self) current_.reset();
    emit(KernelEventType::Block, r, 0, static_cast<int>(expected));
    posted_ = Posted::Block;
}

void Engine::post_simple(ThreadId self, std::coroutine_handle<> h, Posted what) {
    rec(self).resume_point = h;
    posted_ = what;
}

// --- control -------------------------------------------------------------------

void Engine::start(ThreadId id) {
    require_init();
    auto& r = rec(id);
    if (is_handler(r.info.kind)) {
        fail(ErrorCode::Protocol, r.info.name + " is a handler; handlers are activated by interrupt()");
    }
    if (r.info.state != ThreadState::Dormant) {
        fail(ErrorCode::ObjectState, r.info.name + " is not dormant");
    }
    r.activity = r.body(id);
    r.resume_point = r.activity.handle();
    r.segment.reset();
    r.in_wait = false;
    r.startup_delivered = false;
    r.forced_preempt = false;
    r.fired_since_cycle = false;
    r.resume_value = EventKind::Startup;
    r.info.current_priority = r.info.base_priority;
    ++r.info.stats.activations;
    make_ready(r, EventKind::Startup);
    emit(KernelEventType::Start, r);
}

void Engine::stop(ThreadId id) {
    require_init();
    auto& r = rec(id);
    if (r.info.state == ThreadState::Dormant) return;
    if (resuming_ == id) fail(ErrorCode::Protocol, r.info.name + " cannot stop itself; use exit");
    for (const auto& f : stack_) {
        if (f.handler == id) fail(ErrorCode::Protocol, "cannot stop active handler " + r.info.name);
    }
    if (critical_owner_ == id) fail(ErrorCode::Protocol, r.info.name + " holds a critical section");

    if (open_ && open_->record.thread_id == id) flush_portion();
    if (stop_hook_) stop_hook_(id);
    if (current_ == id) current_.reset();
    scheduler_->remove(id);
    std::erase(pending_, id);
    r.activity.reset();
    r.resume_point = {};
    r.segment.reset();
    r.in_wait = false;
    r.forced_preempt = false;
    r.info.pending_event.reset();
    r.info.preempt_requested = false;
    r.info.interrupt_requested = false;
    r.info.current_priority = r.info.base_priority;
    transition(r, ThreadState::Dormant);
    r.info.token.place = Place::Done;
    emit(KernelEventType::Stop, r);
}

ThreadId Engine::schedule() const {
    require_init();
    const auto best = scheduler_->peek();
    if (current_) {
        const auto cur = entry_of(rec(*current_));
        if (!best || !scheduler_->outranks(*best, cur)) return cur.id;
    }
    if (best) return best->id;
    fail(ErrorCode::SchedulerEmpty, "no ready thread and no idle thread");
}

ThreadId Engine::context_switch() {
    require_init();
    if (in_critical() || !stack_.empty()) {
        fail(ErrorCode::Protocol, "context switch requested inside a critical section or handler");
    }
    const ThreadId next = schedule();
    if (current_ != next) {
        if (current_) preempt_current();
        dispatch(next);
    }
    return next;
}

void Engine::preempt(ThreadId id) {
    require_init();
    auto& r = rec(id);
    if (r.info.state == ThreadState::Running && current_ == id) {
        r.forced_preempt = true;
        r.info.preempt_requested = true;
    } else if (r.info.state == ThreadState::Ready) {
        r.entry_event = EventKind::ReturnFromPreemption;
    } else {
        fail(ErrorCode::StateMachine, r.info.name + " is neither running nor ready");
    }
}

void Engine::interrupt(ThreadId handler) {
    require_init();
    auto& h = rec(handler);
    if (!is_handler(h.info.kind)) fail(ErrorCode::Protocol, h.info.name + " is not a handler");
    pending_.push_back(handler);
    if (auto e = executing()) rec(*e).info.interrupt_requested = true;
}

void Engine::ret_int() {
    require_init();
    if (resuming_) fail(ErrorCode::Protocol, "a running handler returns by exiting its activity");
    pop_interrupt();
}

void Engine::release(ThreadId id, EventKind event) {
    require_init();
    auto& r = rec(id);
    if (r.info.state != ThreadState::Waiting) fail(ErrorCode::StateMachine, r.info.name + " is not waiting");
    r.info.pending_event.reset();
    r.resume_value = event;
    make_ready(r, event);
    emit(KernelEventType::Release, r, 0, static_cast<int>(event));
}

void Engine::set_priority(ThreadId id, Priority priority) {
    require_init();
    if (priority < kInitPriority || priority > kIdlePriority) fail(ErrorCode::Validation, "priority out of range");
    auto& r = rec(id);
    r.info.current_priority = priority;
    if (scheduler_->contains(id)) {
        scheduler_->enqueue(entry_of(r));
    } else if (current_ == id) {
        if (auto best = scheduler_->peek(); best && scheduler_->outranks(*best, entry_of(r))) {
            r.info.preempt_requested = true;
        }
    }
}

void Engine::set_state(ThreadId id, ReportedState state) {
    require_init();
    auto& r = rec(id);
    const ThreadState from = r.info.state;
    ThreadState to = ThreadState::Running;
    bool ok = false;
    switch (state) {
        case ReportedState::Running:
            to = ThreadState::Running;
            ok = from == ThreadState::Ready || from == ThreadState::Running;
            break;
        case ReportedState::Sleeping:
            to = ThreadState::Waiting;
            ok = from == ThreadState::Running || from == ThreadState::Waiting;
            break;
        case ReportedState::Deferring:
            to = ThreadState::Ready;
            ok = from == ThreadState::Running || from == ThreadState::Waiting || from == ThreadState::Ready;
            break;
    }
    if (!ok) {
        fail(ErrorCode::StateMachine, r.info.name + ": illegal transition " + std::string(to_string(from)) + " -> " +
                                          std::string(to_string(to)));
    }
    r.info.state = to;
    r.info.state_tick = now_;
}

void Engine::begin_critical(ThreadId self) {
    require_init();
    check_caller(self);
    if (critical_depth_ > 0 && critical_owner_ != self) {
        fail(ErrorCode::Protocol, "critical section owned by another thread");
    }
    ++critical_depth_;
    critical_owner_ = self;
    emit(KernelEventType::CriticalBegin, rec(self), 0, static_cast<int>(critical_depth_));
}

void Engine::end_critical(ThreadId self) {
    require_init();
    if (critical_depth_ == 0) fail(ErrorCode::Underflow, "critical section end without matching start");
    if (critical_owner_ != self) fail(ErrorCode::Protocol, name_of(self) + " does not own the critical section");
    --critical_depth_;
    emit(KernelEventType::CriticalEnd, rec(self), 0, static_cast<int>(critical_depth_));
    if (critical_depth_ == 0) critical_owner_.reset();
}

void Engine::attach_sinks(TraceSink* trace, EventSink* events) {
    require_init();
    if (sinks_attached_) fail(ErrorCode::Usage, "sinks are already attached");
    sinks_attached_ = true;
    trace_sink_ = trace;
    event_sink_ = events;
}

std::optional<ThreadId> Engine::executing() const noexcept {
    if (!stack_.empty()) return stack_.back().handler;
    return current_;
}

// --- state machine -----------------------------------------------------------

void Engine::transition(Record& r, ThreadState to) {
    if (r.info.state == to) return;
    if (!legal_transition(r.info.kind, r.info.state, to)) {
        fail(ErrorCode::StateMachine, r.info.name + ": illegal transition " + std::string(to_string(r.info.state)) +
                                          " -> " + std::string(to_string(to)));
    }
    r.info.state = to;
    r.info.state_tick = now_;
}

void Engine::make_ready(Record& r, EventKind entry) {
    transition(r, ThreadState::Ready);
    r.ready_tick = now_;
    r.entry_event = entry;
    r.info.token.place = Place::PreDispatch;
    scheduler_->enqueue(entry_of(r));
    if (current_ && *current_ != r.info.id) {
        auto& c = rec(*current_);
        if (scheduler_->outranks(entry_of(r), entry_of(c))) c.info.preempt_requested = true;
    }
}

// --- execution -----------------------------------------------------------------

Engine::Record* Engine::select_executor() {
    Record* x = nullptr;
    if (critical_depth_ > 0) {
        x = &rec(*critical_owner_);
    } else {
        while (auto h = next_enterable_interrupt()) enter_interrupt(*h);
        if (!stack_.empty()) {
            x = &rec(stack_.back().handler);
        } else {
            dispatch_if_needed();
            if (current_) x = &rec(*current_);
        }
    }
    if (open_ && (!x || open_->record.thread_id != x->info.id)) flush_portion();
    return x;
}

std::optional<ThreadId> Engine::next_enterable_interrupt() {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        if (rec(*it).info.state == ThreadState::Dormant) {
            const ThreadId h = *it;
            pending_.erase(it);
            return h;
        }
    }
    return std::nullopt;
}

void Engine::enter_interrupt(ThreadId handler) {
    flush_portion();
    StackFrame frame;
    frame.handler = handler;
    frame.interrupted = executing();
    frame.saved_critical_depth = critical_depth_;
    if (frame.interrupted) {
        auto& t = rec(*frame.interrupted);
        t.info.interrupt_requested = false;
        t.entry_event = EventKind::ReturnFromInterrupt;
        if (t.in_wait) t.resume_value = EventKind::ReturnFromInterrupt;
        transition(t, ThreadState::Ready);
    }
    stack_.push_back(frame);

    auto& h = rec(handler);
    h.activity = h.body(handler);
    h.resume_point = h.activity.handle();
    h.segment.reset();
    h.in_wait = false;
    h.startup_delivered = false;
    h.fired_since_cycle = false;
    h.entry_event = EventKind::Startup;
    h.resume_value = EventKind::Startup;
    transition(h, ThreadState::Running);
    h.info.token.place = Place::PreDispatch;
    ++h.info.stats.activations;
    emit(KernelEventType::InterruptEnter, h, frame.interrupted.value_or(0));
}

void Engine::pop_interrupt() {
    if (stack_.empty()) fail(ErrorCode::Protocol, "return from interrupt with an empty interrupt stack");
    const StackFrame frame = stack_.back();
    stack_.pop_back();
    auto& h = rec(frame.handler);
    if (open_ && open_->record.thread_id == frame.handler) flush_portion();
    h.activity.reset();
    h.resume_point = {};
    h.segment.reset();
    h.in_wait = false;
    transition(h, ThreadState::Dormant);
    h.info.token.place = Place::Done;
    ++h.info.token.cycle_count;
    emit(KernelEventType::InterruptReturn, h, frame.interrupted.value_or(0));
    if (frame.interrupted && contains(*frame.interrupted)) {
        auto& t = rec(*frame.interrupted);
        const bool resumable = is_handler(t.info.kind) || current_ == t.info.id;
        if (t.info.state == ThreadState::Ready && resumable) transition(t, ThreadState::Running);
    }
}

void Engine::dispatch_if_needed() {
    const auto best = scheduler_->peek();
    if (!current_) {
        if (best) dispatch(best->id);
        return;
    }
    auto& c = rec(*current_);
    const bool outranked = best && scheduler_->outranks(*best, entry_of(c));
    if (!outranked && !c.forced_preempt) return;
    if (!best) {
        c.forced_preempt = false;
        c.info.preempt_requested = false;
        return;
    }
    preempt_current();
    dispatch(scheduler_->peek()->id);
}

void Engine::preempt_current() {
    auto& c = rec(*current_);
    if (open_ && open_->record.thread_id == c.info.id) flush_portion();
    c.forced_preempt = false;
    c.info.preempt_requested = false;
    c.entry_event = EventKind::ReturnFromPreemption;
    if (c.in_wait) c.resume_value = EventKind::ReturnFromPreemption;
    transition(c, ThreadState::Ready);
    scheduler_->enqueue(entry_of(c));
    emit(KernelEventType::Preempt, c);
    current_.reset();
}

void Engine::dispatch(ThreadId id) {
    auto& r = rec(id);
    scheduler_->remove(id);
    transition(r, ThreadState::Running);
    current_ = id;
    r.info.preempt_requested = false;
    emit(KernelEventType::Dispatch, r);
}

void Engine::resume(Record& r) {
    if (!r.resume_point) fail(ErrorCode::Protocol, r.info.name + " has nothing to resume");
    auto h = std::exchange(r.resume_point, {});
    resuming_ = r.info.id;
    posted_ = Posted::None;
    h.resume();
    resuming_.reset();
    const Posted posted = std::exchange(posted_, Posted::None);
    if (r.activity.done()) {
        r.activity.rethrow_if_failed();
        complete(r);
        return;
    }
    if (posted == Posted::None) {
        fail(ErrorCode::Protocol, r.info.name + " suspended on something other than a simulation call");
    }
    if (posted == Posted::Exit) complete(r);
}

void Engine::complete(Record& r) {
    if (critical_owner_ == r.info.id) fail(ErrorCode::Protocol, r.info.name + " finished inside a critical section");
    r.segment.reset();
    r.in_wait = false;
    r.resume_point = {};
    if (is_handler(r.info.kind)) {
        if (stack_.empty() || stack_.back().handler != r.info.id) {
            fail(ErrorCode::Protocol, "handler " + r.info.name + " is not on top of the interrupt stack");
        }
        pop_interrupt();
        return;
    }
    if (open_ && open_->record.thread_id == r.info.id) flush_portion();
    r.activity.reset();
    if (r.fired_since_cycle) ++r.info.token.cycle_count;
    r.fired_since_cycle = false;
    if (current_ == r.info.id) current_.reset();
    transition(r, ThreadState::Dormant);
    r.info.token.place = Place::Done;
    emit(KernelEventType::Exit, r);
    if (exit_hook_) exit_hook_(r.info.id);
}

void Engine::consume_tick(Record& r) {
    auto& s = *r.segment;
    const Energy before = prorated(s.annotation.eem, s.done, s.annotation.etm);
    ++s.done;
    --s.remaining;
    const Energy delta = prorated(s.annotation.eem, s.done, s.annotation.etm) - before;

    auto& tok = r.info.token;
    const ThreadId id = r.info.id;
    tok.cet += 1;
    tok.cee += delta;
    tok.place = Place::Running;
    tok.context = s.context;
    ++r.info.stats.ticks_by_context[static_cast<std::size_t>(s.context)];

    if (streak_thread_ == id && streak_last_ + 1 == now_) {
        ++streak_len_;
    } else {
        streak_thread_ = id;
        streak_len_ = 1;
    }
    streak_last_ = now_;
    r.info.stats.max_continuous_run = std::max(r.info.stats.max_continuous_run, streak_len_);

    const bool idle = idle_ == id;
    if (open_ && open_->record.thread_id == id && open_->record.tick_end == now_ &&
        (open_->serial == s.serial || idle)) {
        open_->record.tick_end += 1;
        open_->record.etm_ticks += 1;
        open_->record.eem += delta;
        open_->serial = s.serial;
    } else {
        flush_portion();
        open_ = Portion{TraceRecord{now_, now_ + 1, id, r.info.name, s.context, s.annotation.label, 1, delta,
                                    r.entry_event},
                        s.serial};
        r.entry_event = EventKind::ContinueRun;
    }
    if (tick_observer_) tick_observer_(now_, id);

    if (s.remaining == 0) {
        ++tok.firing_counts[s.annotation.label];
        r.fired_since_cycle = true;
        r.segment.reset();
        if (!idle) flush_portion();
    }
}

void Engine::execute_tick() {
    require_init();
    for (std::size_t steps = 0;; ++steps) {
        if (steps > kZeroTimeStepLimit) {
            fail(ErrorCode::Protocol, "no thread consumed time at tick " + std::to_string(now_) + " (livelock)");
        }
        Record* x = select_executor();
        if (!x) {
            flush_portion();
            ++unattributed_;
            streak_thread_.reset();
            if (tick_observer_) tick_observer_(now_, std::nullopt);
            break;
        }
        if (x->segment) {
            consume_tick(*x);
            break;
        }
        resume(*x);
    }
    ++now_;
}

void Engine::run_to_completion(ThreadId id) {
    require_init();
    if (rec(id).info.state == ThreadState::Dormant) start(id);
    for (std::size_t steps = 0;; ++steps) {
        if (rec(id).info.state == ThreadState::Dormant) return;
        if (steps > kZeroTimeStepLimit) fail(ErrorCode::Protocol, "boot thread did not finish");
        Record* x = select_executor();
        if (!x || x->info.id != id) {
            fail(ErrorCode::Usage, rec(id).info.name + " lost the processor before finishing");
        }
        if (x->segment) fail(ErrorCode::Usage, x->info.name + " may not consume time while booting");
        resume(*x);
    }
}

void Engine::finish() { flush_portion(); }

// --- trace output --------------------------------------------------------------

void Engine::emit_zero_length(Record& r, const Annotation& a, ContextKind ctx) {
    flush_portion();
    r.info.token.cee += a.eem;
    if (trace_sink_) {
        trace_sink_->on_segment(
            TraceRecord{now_, now_, r.info.id, r.info.name, ctx, a.label, 0, a.eem, r.entry_event});
    }
    r.entry_event = EventKind::ContinueRun;
}

void Engine::flush_portion() {
    if (!open_) return;
    if (trace_sink_) trace_sink_->on_segment(open_->record);
    open_.reset();
}

void Engine::emit(KernelEventType type, const Record& r, ThreadId other, int value) {
    if (event_sink_) event_sink_->on_event(KernelEvent{now_, type, r.info.id, r.info.name, other, value});
}

}  // namespace rtk::sim
