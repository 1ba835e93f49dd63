#include "rtk/scenario/runner.hpp"

#include <chrono>

namespace rtk::scenario {

using kernel::E_ILUSE;
using kernel::E_OK;
using kernel::ER;
using sim::ThreadState;

namespace {

// Iterations of a forever loop allowed at one instant before giving up.
constexpr std::uint64_t kStallLimit = 100000;

std::string waiting_on(const kernel::TaskControlBlock& t) {
    using kernel::WaitKind;
    const auto obj = [&](std::string_view what) { return std::string(what) + " " + std::to_string(t.wait.object); };
    switch (t.wait.kind) {
        case WaitKind::None: return "nothing";
        case WaitKind::Sleep: return "wakeup";
        case WaitKind::Delay: return "delay";
        case WaitKind::Semaphore: return obj("semaphore");
        case WaitKind::EventFlag: return obj("eventflag");
        case WaitKind::MailboxReceive: return obj("mailbox");
        case WaitKind::BufferSend: return obj("msgbuf (send)");
        case WaitKind::BufferReceive: return obj("msgbuf (receive)");
        case WaitKind::Mutex: return obj("mutex");
        case WaitKind::FixedPool: return obj("fixed_pool");
        case WaitKind::VariablePool: return obj("variable_pool");
    }
    return "?";
}

}  // namespace

std::string describe_deadlock(Tick at, const std::vector<BlockedThread>& blocked) {
    std::string out = "deadlock at tick " + std::to_string(at) + ":";
    for (const auto& b : blocked) {
        out += "\n  " + b.name + " (id " + std::to_string(b.id) + ") waits on " + b.waiting_on;
    }
    return out;
}

Simulation::Simulation(Scenario s) : scenario_(std::move(s)) {
    const auto problems = validate(scenario_);
    if (!problems.empty()) throw ScenarioError(scenario_.name, problems);
    engine_ = std::make_unique<sim::Engine>(scenario_.tasks.size() + scenario_.handlers.size() + 2, scenario_.tick_us);
    kernel::KernelConfig cfg;
    cfg.idle_id = scenario_.resolved_idle_id();
    cfg.idle_name = scenario_.idle_name;
    cfg.idle_energy_per_tick = scenario_.idle_energy_per_tick;
    cfg.svc_etm = scenario_.svc.etm;
    cfg.svc_eem = scenario_.svc.eem;
    for (const auto& [name, a] : scenario_.svc_overrides) cfg.svc_overrides[name] = {name, a.etm, a.eem};
    kernel_ = std::make_unique<kernel::Kernel>(*engine_, std::move(cfg));
    bfm_ = std::make_unique<bfm::Bfm>(*kernel_, scenario_.cycles_per_tick);
    trace_tee_.add(trace_);
    event_tee_.add(events_);
    engine_->attach_sinks(&trace_tee_, &event_tee_);
}

Simulation::~Simulation() = default;

void Simulation::add_trace_sink(sim::TraceSink& sink) {
    if (booted_) fail(ErrorCode::Usage, "sinks must be attached before boot");
    trace_tee_.add(sink);
}

void Simulation::add_event_sink(sim::EventSink& sink) {
    if (booted_) fail(ErrorCode::Usage, "sinks must be attached before boot");
    event_tee_.add(sink);
}

void Simulation::boot() {
    if (booted_) fail(ErrorCode::Usage, "scenario already booted");
    for (const auto& d : scenario_.devices) bfm_->add_device(d);
    for (const auto& st : scenario_.stimuli) bfm_->schedule(st);
    kernel_->boot([this](kernel::Kernel& k) {
        const auto& o = scenario_.objects;
        for (const auto& d : o.semaphores) k.cre_sem(d.id, d.initial, d.max, d.exinf);
        for (const auto& d : o.event_flags) k.cre_flg(d.id, d.initial, d.exinf);
        for (const auto& d : o.mailboxes) k.cre_mbx(d.id, d.exinf);
        for (const auto& d : o.message_buffers) k.cre_mbf(d.id, d.capacity, d.max_message, d.exinf);
        for (const auto& d : o.mutexes) k.cre_mtx(d.id, d.exinf);
        for (const auto& d : o.fixed_pools) k.cre_mpf(d.id, d.block_size, d.blocks, d.exinf);
        for (const auto& d : o.variable_pools) k.cre_mpl(d.id, d.size, d.exinf);
        for (const auto& t : scenario_.tasks) {
            const Program* p = &t.program;
            k.cre_tsk({t.id, t.name, t.priority, t.exinf, [this, p](ThreadId self) { return body(self, p); }});
        }
        for (const auto& h : scenario_.handlers) {
            const Program* p = &h.program;
            kernel::HandlerSpec spec{h.id, h.name, [this, p](ThreadId self) { return body(self, p); }};
            switch (h.kind) {
                case HandlerKind::Cyclic: k.cre_cyc(std::move(spec), h.period, h.phase); break;
                case HandlerKind::Alarm: k.cre_alm(std::move(spec), h.offset); break;
                case HandlerKind::Isr: k.def_int(std::move(spec), h.line); break;
            }
        }
        for (const auto& t : scenario_.tasks) {
            if (t.autostart) k.start_task(t.id);
        }
    });
    bfm_->validate_stimuli();
    booted_ = true;
}

bool Simulation::done() const noexcept { return deadlocked() || engine_->now() >= scenario_.run_ticks; }

bool Simulation::step() {
    if (!booted_) fail(ErrorCode::Usage, "boot the scenario before stepping");
    if (done()) return false;
    bfm_->rtc_step();
    check_deadlock();
    return !done();
}

RunSummary Simulation::run() {
    if (!booted_) boot();
    const Tick start = engine_->now();
    const auto t0 = std::chrono::steady_clock::now();
    while (step()) {
    }
    const auto t1 = std::chrono::steady_clock::now();
    finish();
    RunSummary r;
    r.ticks = engine_->now() - start;
    r.deadlock = deadlocked();
    r.blocked = blocked_;
    r.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    r.ticks_per_second = r.wall_seconds > 0 ? static_cast<double>(r.ticks) / r.wall_seconds : 0;
    return r;
}

void Simulation::finish() {
    if (finished_) return;
    engine_->finish();
    finished_ = true;
}

Tick Simulation::now() const { return engine_->now(); }

void Simulation::check_deadlock() {
    if (!kernel_->timers().empty()) return;
    if (!engine_->stack().empty() || !engine_->pending_interrupts().empty()) return;
    const Tick now = engine_->now();
    for (const auto& st : bfm_->stimuli()) {
        if (st.at >= now) return;
    }
    const ThreadId idle = scenario_.resolved_idle_id();
    std::vector<BlockedThread> blocked;
    for (ThreadId id : engine_->thread_ids()) {
        if (id == idle) continue;
        const auto& info = engine_->thread(id);
        if (info.state == ThreadState::Ready || info.state == ThreadState::Running) return;
        if ((info.state == ThreadState::Waiting || info.state == ThreadState::WaitingSuspended) && kernel_->is_task(id)) {
            blocked.push_back({id, info.name, waiting_on(kernel_->tcb(id))});
        }
    }
    blocked_ = std::move(blocked);
}

sim::Activity Simulation::body(ThreadId self, const Program* program) {
    co_await engine_->wait_run(self);
    auto block = exec(self, program);
    co_await block;
}

sim::Co<> Simulation::exec(ThreadId self, const Program* program) {
    for (const auto& st : *program) {
        switch (st.kind) {
            case Statement::Kind::Compute: {
                const sim::Annotation a = scenario_.annotations.at(st.label);
                co_await engine_->wait(self, a);
                break;
            }
            case Statement::Kind::Call: {
                ER er = E_OK;
                auto call = invoke(self, &st.call);
                er = co_await call;
                calls_.push_back({engine_->now(), self, st.call.service, er});
                break;
            }
            case Statement::Kind::Bfm: {
                bfm::BfmRequest req;
                req.address = st.address;
                req.data = bfm::parse_hex(st.data);
                req.length = st.length;
                auto call = bfm_->call(self, st.device, st.access, std::move(req));
                co_await call;
                break;
            }
            case Statement::Kind::Loop: {
                Tick last = engine_->now();
                std::uint64_t stalled = 0;
                for (std::uint64_t i = 0; !st.count || i < *st.count; ++i) {
                    auto inner = exec(self, &st.body);
                    co_await inner;
                    if (engine_->now() != last) {
                        last = engine_->now();
                        stalled = 0;
                    } else if (!st.count && ++stalled > kStallLimit) {
                        fail(ErrorCode::Consistency, engine_->thread(self).name + " loops forever without consuming time");
                    }
                }
                break;
            }
        }
    }
}

sim::Co<ER> Simulation::invoke(ThreadId self, const Call* c) {
    auto& k = *kernel_;
    const std::string& s = c->service;
    const auto target = static_cast<ThreadId>(c->id);
    ER er = E_OK;
    if (s == "sta_tsk") {
        auto x = k.sta_tsk(self, target);
        er = co_await x;
    } else if (s == "ter_tsk") {
        auto x = k.ter_tsk(self, target);
        er = co_await x;
    } else if (s == "wup_tsk") {
        auto x = k.wup_tsk(self, target);
        er = co_await x;
    } else if (s == "ext_tsk") {
        auto x = k.ext_tsk(self);
        er = co_await x;
    } else if (s == "slp_tsk") {
        auto x = k.slp_tsk(self, c->tmout);
        er = co_await x;
    } else if (s == "dly_tsk") {
        auto x = k.dly_tsk(self, c->ticks);
        er = co_await x;
    } else if (s == "sig_sem") {
        auto x = k.sig_sem(self, c->id, c->count);
        er = co_await x;
    } else if (s == "wai_sem") {
        auto x = k.wai_sem(self, c->id, c->count, c->tmout);
        er = co_await x;
    } else if (s == "set_flg") {
        auto x = k.set_flg(self, c->id, c->pattern);
        er = co_await x;
    } else if (s == "clr_flg") {
        auto x = k.clr_flg(self, c->id, c->pattern);
        er = co_await x;
    } else if (s == "wai_flg") {
        auto x = k.wai_flg(self, c->id, c->pattern, c->mode, c->clear, c->tmout);
        er = co_await x;
    } else if (s == "snd_mbx") {
        auto x = k.snd_mbx(self, c->id, kernel::Message{c->priority, c->text});
        er = co_await x;
    } else if (s == "rcv_mbx") {
        auto x = k.rcv_mbx(self, c->id, c->tmout);
        er = co_await x;
    } else if (s == "snd_mbf") {
        auto x = k.snd_mbf(self, c->id, c->text, c->tmout);
        er = co_await x;
    } else if (s == "rcv_mbf") {
        auto x = k.rcv_mbf(self, c->id, c->tmout);
        er = co_await x;
    } else if (s == "loc_mtx") {
        auto x = k.loc_mtx(self, c->id, c->tmout);
        er = co_await x;
    } else if (s == "unl_mtx") {
        auto x = k.unl_mtx(self, c->id);
        er = co_await x;
    } else if (s == "get_mpf") {
        std::size_t block = 0;
        auto x = k.get_mpf(self, c->id, c->tmout, &block);
        er = co_await x;
        if (er == E_OK) fixed_held_[{self, c->id}].push_back(block);
    } else if (s == "rel_mpf") {
        auto& held = fixed_held_[{self, c->id}];
        const std::size_t block = held.empty() ? std::numeric_limits<std::size_t>::max() : held.back();
        auto x = k.rel_mpf(self, c->id, block);
        er = co_await x;
        if (er == E_OK) held.pop_back();
    } else if (s == "get_mpl") {
        std::size_t offset = 0;
        auto x = k.get_mpl(self, c->id, c->size, c->tmout, &offset);
        er = co_await x;
        if (er == E_OK) variable_held_[{self, c->id}].push_back(offset);
    } else if (s == "rel_mpl") {
        auto& held = variable_held_[{self, c->id}];
        const std::size_t offset = held.empty() ? std::numeric_limits<std::size_t>::max() : held.back();
        auto x = k.rel_mpl(self, c->id, offset);
        er = co_await x;
        if (er == E_OK) held.pop_back();
    } else if (s == "del_obj") {
        auto x = k.del_obj(self, c->cls, c->id);
        er = co_await x;
    } else {
        er = E_ILUSE;
    }
    co_return er;
}

}  // namespace rtk::scenario
