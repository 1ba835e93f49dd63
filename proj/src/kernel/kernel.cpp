#include "rtk/kernel/kernel.hpp"

#include <algorithm>

namespace rtk::kernel {

using sim::ContextKind;
using sim::EventKind;
using sim::ThreadKind;
using sim::ThreadState;

namespace {

Activity idle_body(sim::Engine& e, ThreadId self, Energy per_tick) {
    co_await e.wait_run(self);
    const sim::Annotation idle{"idle", 1, per_tick};
    for (;;) co_await e.wait(self, idle);
}

Activity init_body(Kernel& k, ThreadId self, std::function<void(Kernel&)> user_main) {
    co_await k.engine().wait_run(self);
    user_main(k);
    const sim::Annotation boot{"boot", 0, {}};
    co_await k.engine().wait(self, boot, ContextKind::Startup);
}

}  // namespace

const std::vector<std::string>& service_names() {
    static const std::vector<std::string> names{
        "sta_tsk", "ext_tsk", "ter_tsk", "slp_tsk", "wup_tsk", "dly_tsk", "sig_sem", "wai_sem",
        "set_flg", "clr_flg", "wai_flg", "snd_mbx", "rcv_mbx", "snd_mbf", "rcv_mbf", "loc_mtx",
        "unl_mtx", "get_mpf", "rel_mpf", "get_mpl", "rel_mpl", "del_obj",
    };
    return names;
}

Kernel::Kernel(sim::Engine& engine, KernelConfig config) : engine_(engine), config_(std::move(config)) {}

sim::Annotation Kernel::svc_annotation(std::string_view service) const {
    if (auto it = config_.svc_overrides.find(service); it != config_.svc_overrides.end()) {
        return {std::string(service), it->second.etm, it->second.eem};
    }
    return {std::string(service), config_.svc_etm, config_.svc_eem};
}

// --- boot and creation ----------------------------------------------------------

void Kernel::boot(const std::function<void(Kernel&)>& user_main) {
    if (booted_) fail(ErrorCode::Usage, "kernel is already booted");
    booted_ = true;
    engine_.on_exit([this](ThreadId id) { on_task_exit(id); });
    engine_.on_stop([this](ThreadId id) { on_task_stop(id); });

    if (config_.idle_id != 0) {
        const ThreadId id = config_.idle_id;
        engine_.register_thread({id, config_.idle_name, ThreadKind::Task, sim::kIdlePriority,
                                 [this](ThreadId self) { return idle_body(engine_, self, config_.idle_energy_per_tick); }});
        engine_.set_idle_thread(id);
        tcbs_[id].id = id;
        engine_.start(id);
    }

    std::function<void(Kernel&)> main = user_main ? user_main : [](Kernel&) {};
    engine_.register_thread({config_.init_id, "INIT", ThreadKind::Task, sim::kInitPriority,
                             [this, main](ThreadId self) { return init_body(*this, self, main); }});
    engine_.start(config_.init_id);
    engine_.run_to_completion(config_.init_id);
    engine_.all_created();
    engine_.unregister_thread(config_.init_id);
}

void Kernel::cre_tsk(TaskSpec spec) {
    if (spec.priority < sim::kHighestPriority || spec.priority > sim::kLowestPriority) {
        fail(ErrorCode::Validation, "task " + std::to_string(spec.id) + " priority " + std::to_string(spec.priority) +
                                        " outside [1, 140]");
    }
    const ThreadId id = spec.id;
    engine_.register_thread({id, std::move(spec.name), ThreadKind::Task, spec.priority, std::move(spec.body)});
    auto& t = tcbs_[id];
    t.id = id;
    t.exinf = spec.exinf;
}

void Kernel::register_handler(HandlerSpec spec, ThreadKind kind) {
    engine_.register_thread({spec.id, std::move(spec.name), kind, 0, std::move(spec.body)});
}

void Kernel::cre_cyc(HandlerSpec spec, Tick period, std::optional<Tick> phase) {
    if (period == 0) fail(ErrorCode::Validation, "cyclic handler period must be at least 1 tick");
    const ThreadId id = spec.id;
    register_handler(std::move(spec), ThreadKind::CyclicHandler);
    auto& h = handlers_[id];
    h.thread = id;
    h.kind = ThreadKind::CyclicHandler;
    h.period = period;
    h.phase = phase.value_or(period);
    h.timer = timers_.insert(engine_.now() + h.phase, TimerKind::CyclicFire, id, period);
}

void Kernel::cre_alm(HandlerSpec spec, Tick offset) {
    const ThreadId id = spec.id;
    register_handler(std::move(spec), ThreadKind::AlarmHandler);
    auto& h = handlers_[id];
    h.thread = id;
    h.kind = ThreadKind::AlarmHandler;
    h.offset = offset;
    h.timer = timers_.insert(engine_.now() + offset, TimerKind::AlarmFire, id);
}

void Kernel::def_int(HandlerSpec spec, std::uint32_t line) {
    if (line >= config_.irq_lines) {
        fail(ErrorCode::Validation, "irq line " + std::to_string(line) + " outside the " +
                                        std::to_string(config_.irq_lines) + " configured lines");
    }
    if (irq_bindings_.contains(line)) fail(ErrorCode::Conflict, "irq line " + std::to_string(line) + " already bound");
    const ThreadId id = spec.id;
    register_handler(std::move(spec), ThreadKind::InterruptHandler);
    auto& h = handlers_[id];
    h.thread = id;
    h.kind = ThreadKind::InterruptHandler;
    h.line = line;
    irq_bindings_[line] = id;
}

void Kernel::check_new_object(bool exists, ObjectClass cls, ID id) const {
    if (id <= 0) fail(ErrorCode::Validation, std::string(to_string(cls)) + " id must be positive");
    if (exists) fail(ErrorCode::Conflict, std::string(to_string(cls)) + " " + std::to_string(id) + " already exists");
}

void Kernel::cre_sem(ID id, int initial, int max_count, std::uint32_t exinf) {
    check_new_object(sems_.contains(id), ObjectClass::Semaphore, id);
    if (max_count < 1 || initial < 0 || initial > max_count) {
        fail(ErrorCode::Validation, "semaphore " + std::to_string(id) + " needs 0 <= initial <= max, max >= 1");
    }
    auto& s = sems_[id];
    s.id = id;
    s.exinf = exinf;
    s.count = initial;
    s.max_count = max_count;
}

void Kernel::cre_flg(ID id, std::uint32_t initial, std::uint32_t exinf) {
    check_new_object(flags_.contains(id), ObjectClass::EventFlag, id);
    auto& f = flags_[id];
    f.id = id;
    f.exinf = exinf;
    f.pattern = initial;
}

void Kernel::cre_mbx(ID id, std::uint32_t exinf) {
    check_new_object(mbxs_.contains(id), ObjectClass::Mailbox, id);
    auto& m = mbxs_[id];
    m.id = id;
    m.exinf = exinf;
}

void Kernel::cre_mbf(ID id, std::size_t capacity, std::size_t max_message, std::uint32_t exinf) {
    check_new_object(mbfs_.contains(id), ObjectClass::MessageBuffer, id);
    if (capacity == 0 || max_message == 0 || max_message > capacity) {
        fail(ErrorCode::Validation, "message buffer " + std::to_string(id) + " needs 0 < max_message <= capacity");
    }
    auto& b = mbfs_[id];
    b.id = id;
    b.exinf = exinf;
    b.capacity = capacity;
    b.max_message = max_message;
}

void Kernel::cre_mtx(ID id, std::uint32_t exinf) {
    check_new_object(mtxs_.contains(id), ObjectClass::Mutex, id);
    auto& m = mtxs_[id];
    m.id = id;
    m.exinf = exinf;
}

void Kernel::cre_mpf(ID id, std::size_t block_size, std::size_t block_count, std::uint32_t exinf) {
    check_new_object(mpfs_.contains(id), ObjectClass::FixedPool, id);
    if (block_size == 0 || block_count == 0) {
        fail(ErrorCode::Validation, "fixed pool " + std::to_string(id) + " needs positive block size and count");
    }
    auto& p = mpfs_[id];
    p.id = id;
    p.exinf = exinf;
    p.block_size = block_size;
    p.owners.assign(block_count, std::nullopt);
}

void Kernel::cre_mpl(ID id, std::size_t total, std::uint32_t exinf) {
    check_new_object(mpls_.contains(id), ObjectClass::VariablePool, id);
    if (total == 0) fail(ErrorCode::Validation, "variable pool " + std::to_string(id) + " needs a positive size");
    auto& p = mpls_[id];
    p.id = id;
    p.exinf = exinf;
    p.total = total;
    p.free_list[0] = total;
}

void Kernel::start_task(ThreadId id) {
    auto& t = tcb_mut(id);
    t.wakeup_count = 0;
    t.wait = {};
    t.result = E_OK;
    engine_.start(id);
}

// --- time and interrupts ---------------------------------------------------------

std::vector<TimerEvent> Kernel::timer_tick() {
    std::vector<TimerEvent> fired;
    const Tick now = engine_.now();
    while (auto ev = timers_.pop_due(now)) {
        switch (ev->kind) {
            case TimerKind::CyclicFire: {
                auto& h = handlers_.at(ev->target);
                h.timer = timers_.insert(ev->due + ev->period, TimerKind::CyclicFire, ev->target, ev->period);
                ++h.activations;
                engine_.interrupt(ev->target);
                break;
            }
            case TimerKind::AlarmFire: {
                auto& h = handlers_.at(ev->target);
                h.timer.reset();
                ++h.activations;
                engine_.interrupt(ev->target);
                break;
            }
            case TimerKind::DelayExpiry: {
                auto& t = tcb_mut(ev->target);
                t.wait.timer.reset();
                release(t, E_OK);
                break;
            }
            case TimerKind::TimeoutExpiry: {
                auto& t = tcb_mut(ev->target);
                t.wait.timer.reset();
                detach_from_object(t);
                release(t, E_TMOUT);
                break;
            }
        }
        fired.push_back(*ev);
    }
    return fired;
}

void Kernel::raise_irq(std::uint32_t line) {
    auto it = irq_bindings_.find(line);
    if (it == irq_bindings_.end()) fail(ErrorCode::Configuration, "irq line " + std::to_string(line) + " is not bound");
    ++handlers_.at(it->second).activations;
    engine_.interrupt(it->second);
}

std::optional<ThreadId> Kernel::irq_handler(std::uint32_t line) const {
    auto it = irq_bindings_.find(line);
    if (it == irq_bindings_.end()) return std::nullopt;
    return it->second;
}

// --- inspection -----------------------------------------------------------------

const TaskControlBlock& Kernel::tcb(ThreadId id) const {
    auto it = tcbs_.find(id);
    if (it == tcbs_.end()) fail(ErrorCode::NotFound, "task " + std::to_string(id) + " does not exist");
    return it->second;
}

TaskControlBlock& Kernel::tcb_mut(ThreadId id) {
    auto it = tcbs_.find(id);
    if (it == tcbs_.end()) fail(ErrorCode::NotFound, "task " + std::to_string(id) + " does not exist");
    return it->second;
}

bool Kernel::caller_is_handler(ThreadId self) const { return sim::is_handler(engine_.thread(self).kind); }

Tick Kernel::sys_run_time(ThreadId id) const { return engine_.thread(id).stats.ticks_in(ContextKind::Svc); }

Tick Kernel::user_run_time(ThreadId id) const { return engine_.thread(id).token.cet - sys_run_time(id); }

std::vector<ThreadId> Kernel::waiters(ObjectClass cls, ID id) const {
    const auto order = [this](const WaitQueue& q) { return q.ordered(prio_fn()); };
    switch (cls) {
        case ObjectClass::Semaphore:
            if (auto it = sems_.find(id); it != sems_.end()) return order(it->second.waiters);
            break;
        case ObjectClass::EventFlag:
            if (auto it = flags_.find(id); it != flags_.end()) return order(it->second.waiters);
            break;
        case ObjectClass::Mutex:
            if (auto it = mtxs_.find(id); it != mtxs_.end()) return order(it->second.waiters);
            break;
        case ObjectClass::Mailbox:
            if (auto it = mbxs_.find(id); it != mbxs_.end()) return order(it->second.waiters);
            break;
        case ObjectClass::MessageBuffer:
            if (auto it = mbfs_.find(id); it != mbfs_.end()) {
                auto out = order(it->second.senders);
                auto recv = order(it->second.receivers);
                out.insert(out.end(), recv.begin(), recv.end());
                return out;
            }
            break;
        case ObjectClass::FixedPool:
            if (auto it = mpfs_.find(id); it != mpfs_.end()) return order(it->second.waiters);
            break;
        case ObjectClass::VariablePool:
            if (auto it = mpls_.find(id); it != mpls_.end()) return order(it->second.waiters);
            break;
    }
    fail(ErrorCode::NotFound, std::string(to_string(cls)) + " " + std::to_string(id) + " does not exist");
}

// --- blocking machinery -----------------------------------------------------------

Kernel::Outcome Kernel::block(ThreadId self, WaitInfo info, Timeout tmout) {
    auto& t = tcb_mut(self);
    t.wait = std::move(info);
    t.result = E_OK;
    if (tmout) {
        const auto kind = t.wait.kind == WaitKind::Delay ? TimerKind::DelayExpiry : TimerKind::TimeoutExpiry;
        t.wait.timer = timers_.insert(engine_.now() + *tmout, kind, self);
    }
    return {E_OK, true};
}

void Kernel::release(TaskControlBlock& t, ER er) {
    if (t.wait.timer) timers_.cancel(*t.wait.timer);
    t.wait = {};
    t.result = er;
    engine_.release(t.id, EventKind::SleepArrival);
}

void Kernel::on_task_exit(ThreadId id) {
    auto it = tcbs_.find(id);
    if (it == tcbs_.end()) return;
    auto owned = std::exchange(it->second.owned_mutexes, {});
    for (ID m : owned) transfer_mutex(mtxs_.at(m));
}

void Kernel::on_task_stop(ThreadId id) {
    auto it = tcbs_.find(id);
    if (it == tcbs_.end()) return;
    auto& t = it->second;
    if (t.wait.timer) timers_.cancel(*t.wait.timer);
    t.wait.timer.reset();
    detach_from_object(t);
    t.wait = {};
    auto owned = std::exchange(t.owned_mutexes, {});
    for (ID m : owned) transfer_mutex(mtxs_.at(m));
}

template <typename Effect>
Co<ER> Kernel::service(ThreadId self, std::string_view name, Effect effect) {
    co_await engine_.checkpoint(self);
    engine_.begin_critical(self);
    const sim::Annotation charge = svc_annotation(name);
    co_await engine_.wait(self, charge, ContextKind::Svc);
    Outcome o;
    try {
        o = effect();
    } catch (...) {
        engine_.end_critical(self);
        throw;
    }
    engine_.end_critical(self);
    if (!o.block) co_return o.er;
    co_await engine_.wait_event(self);
    co_return tcb_mut(self).result;
}

// --- task services ------------------------------------------------------------------

Co<ER> Kernel::sta_tsk(ThreadId self, ThreadId target) {
    return service(self, "sta_tsk", [=, this] { return do_sta_tsk(self, target); });
}

Co<ER> Kernel::ext_tsk(ThreadId self) {
    const bool handler = caller_is_handler(self);
    auto call = service(self, "ext_tsk", [handler] { return Outcome{handler ? E_CTX : E_OK, false}; });
    const ER er = co_await call;
    if (er != E_OK) co_return er;
    co_await engine_.exit(self);
    co_return E_OK;
}

Co<ER> Kernel::ter_tsk(ThreadId self, ThreadId target) {
    return service(self, "ter_tsk", [=, this] { return do_ter_tsk(self, target); });
}

Co<ER> Kernel::slp_tsk(ThreadId self, Timeout tmout) {
    return service(self, "slp_tsk", [=, this] { return do_slp_tsk(self, tmout); });
}

Co<ER> Kernel::wup_tsk(ThreadId self, ThreadId target) {
    return service(self, "wup_tsk", [=, this] { return do_wup_tsk(self, target); });
}

Co<ER> Kernel::dly_tsk(ThreadId self, Tick ticks) {
    return service(self, "dly_tsk", [=, this] { return do_dly_tsk(self, ticks); });
}

Kernel::Outcome Kernel::do_sta_tsk(ThreadId, ThreadId target) {
    if (!is_task(target) || target == config_.idle_id) return {E_NOEXS};
    if (engine_.thread(target).state != ThreadState::Dormant) return {E_OBJ};
    start_task(target);
    return {E_OK};
}

Kernel::Outcome Kernel::do_ter_tsk(ThreadId self, ThreadId target) {
    if (!is_task(target) || target == config_.idle_id) return {E_NOEXS};
    if (target == self) return {E_ILUSE};
    if (engine_.thread(target).state == ThreadState::Dormant) return {E_OBJ};
    engine_.stop(target);
    return {E_OK};
}

Kernel::Outcome Kernel::do_slp_tsk(ThreadId self, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    if (tmout && *tmout == 0) return {E_PAR};
    auto& t = tcb_mut(self);
    if (t.wakeup_count > 0) {
        --t.wakeup_count;
        ++t.sleeps_satisfied;
        return {E_OK};
    }
    return block(self, {.kind = WaitKind::Sleep}, tmout);
}

Kernel::Outcome Kernel::do_wup_tsk(ThreadId self, ThreadId target) {
    if (!is_task(target) || target == config_.idle_id) return {E_NOEXS};
    if (target == self || engine_.thread(target).state == ThreadState::Dormant) return {E_OBJ};
    auto& t = tcb_mut(target);
    ++t.wakeups_issued;
    if (t.wait.kind == WaitKind::Sleep) {
        ++t.sleeps_satisfied;
        release(t, E_OK);
    } else {
        ++t.wakeup_count;
    }
    return {E_OK};
}

Kernel::Outcome Kernel::do_dly_tsk(ThreadId self, Tick ticks) {
    if (caller_is_handler(self)) return {E_CTX};
    if (ticks == 0) return {E_OK};
    return block(self, {.kind = WaitKind::Delay}, ticks);
}

// --- object services ------------------------------------------------------------------

Co<ER> Kernel::sig_sem(ThreadId self, ID id, int count) {
    return service(self, "sig_sem", [=, this] { return do_sig_sem(self, id, count); });
}

Co<ER> Kernel::wai_sem(ThreadId self, ID id, int count, Timeout tmout) {
    return service(self, "wai_sem", [=, this] { return do_wai_sem(self, id, count, tmout); });
}

Co<ER> Kernel::set_flg(ThreadId self, ID id, std::uint32_t pattern) {
    return service(self, "set_flg", [=, this] { return do_set_flg(id, pattern); });
}

Co<ER> Kernel::clr_flg(ThreadId self, ID id, std::uint32_t pattern) {
    return service(self, "clr_flg", [=, this] { return do_clr_flg(id, pattern); });
}

Co<ER> Kernel::wai_flg(ThreadId self, ID id, std::uint32_t pattern, FlagMode mode, bool clear, Timeout tmout,
                       std::uint32_t* out) {
    auto call = service(self, "wai_flg",
                                   [=, this] { return do_wai_flg(self, id, pattern, mode, clear, tmout); });
    const ER er = co_await call;
    if (er == E_OK && out) *out = tcb(self).flag_result;
    co_return er;
}

Co<ER> Kernel::snd_mbx(ThreadId self, ID id, Message message) {
    return service(self, "snd_mbx", [=, this] { return do_snd_mbx(id, message); });
}

Co<ER> Kernel::rcv_mbx(ThreadId self, ID id, Timeout tmout, Message* out) {
    auto call = service(self, "rcv_mbx", [=, this] { return do_rcv_mbx(self, id, tmout); });
    const ER er = co_await call;
    if (er == E_OK && out) *out = tcb(self).message_result;
    co_return er;
}

Co<ER> Kernel::snd_mbf(ThreadId self, ID id, std::string bytes, Timeout tmout) {
    return service(self, "snd_mbf", [=, this] { return do_snd_mbf(self, id, bytes, tmout); });
}

Co<ER> Kernel::rcv_mbf(ThreadId self, ID id, Timeout tmout, std::string* out) {
    auto call = service(self, "rcv_mbf", [=, this] { return do_rcv_mbf(self, id, tmout); });
    const ER er = co_await call;
    if (er == E_OK && out) *out = tcb(self).bytes_result;
    co_return er;
}

Co<ER> Kernel::loc_mtx(ThreadId self, ID id, Timeout tmout) {
    return service(self, "loc_mtx", [=, this] { return do_loc_mtx(self, id, tmout); });
}

Co<ER> Kernel::unl_mtx(ThreadId self, ID id) {
    return service(self, "unl_mtx", [=, this] { return do_unl_mtx(self, id); });
}

Co<ER> Kernel::get_mpf(ThreadId self, ID id, Timeout tmout, std::size_t* block) {
    auto call = service(self, "get_mpf", [=, this] { return do_get_mpf(self, id, tmout); });
    const ER er = co_await call;
    if (er == E_OK && block) *block = tcb(self).block_result;
    co_return er;
}

Co<ER> Kernel::rel_mpf(ThreadId self, ID id, std::size_t block) {
    return service(self, "rel_mpf", [=, this] { return do_rel_mpf(self, id, block); });
}

Co<ER> Kernel::get_mpl(ThreadId self, ID id, std::size_t size, Timeout tmout, std::size_t* offset) {
    auto call = service(self, "get_mpl", [=, this] { return do_get_mpl(self, id, size, tmout); });
    const ER er = co_await call;
    if (er == E_OK && offset) *offset = tcb(self).block_result;
    co_return er;
}

Co<ER> Kernel::rel_mpl(ThreadId self, ID id, std::size_t offset) {
    return service(self, "rel_mpl", [=, this] { return do_rel_mpl(self, id, offset); });
}

Co<ER> Kernel::del_obj(ThreadId self, ObjectClass cls, ID id) {
    return service(self, "del_obj", [=, this] { return do_del_obj(cls, id); });
}

}  // namespace rtk::kernel
