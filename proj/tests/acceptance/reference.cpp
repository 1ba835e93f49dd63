#include "reference.hpp"

#include <algorithm>
#include <list>
#include <set>
#include <stdexcept>
#include <tuple>

namespace acc {

namespace sc = rtk::scenario;
using rtk::sim::Annotation;
using rtk::sim::Energy;
using namespace rtk::kernel;

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(std::mt19937_64& rng, int percent) { return uniform(rng, 1, 100) <= percent; }

Energy uj(std::int64_t v) { return Energy::from_microjoules(v); }

sc::Statement compute(const std::string& label) {
    sc::Statement st;
    st.kind = sc::Statement::Kind::Compute;
    st.label = label;
    return st;
}

sc::Statement call(std::string service) {
    sc::Statement st;
    st.kind = sc::Statement::Kind::Call;
    st.call.service = std::move(service);
    return st;
}

sc::Timeout maybe_timeout(std::mt19937_64& rng) {
    if (chance(rng, 50)) return std::nullopt;
    return static_cast<Tick>(uniform(rng, 1, 20));
}

sc::Statement random_task_statement(std::mt19937_64& rng, const sc::Scenario& s, int tasks) {
    static const char* labels[] = {"a", "b", "c", "z"};
    const int pick = uniform(rng, 1, 100);
    const int sems = static_cast<int>(s.objects.semaphores.size());
    if (pick <= 35) return compute(labels[uniform(rng, 0, 3)]);
    if (pick <= 45) {
        auto st = call("slp_tsk");
        st.call.tmout = maybe_timeout(rng);
        return st;
    }
    if (pick <= 57) {
        auto st = call("wup_tsk");
        st.call.id = uniform(rng, 1, tasks);
        return st;
    }
    if (pick <= 67) {
        auto st = call("dly_tsk");
        st.call.ticks = static_cast<Tick>(uniform(rng, 0, 15));
        return st;
    }
    const int id = uniform(rng, 1, sems);
    const int max = s.objects.semaphores[static_cast<std::size_t>(id - 1)].max;
    if (pick <= 83) {
        auto st = call("wai_sem");
        st.call.id = id;
        st.call.count = uniform(rng, 1, max);
        st.call.tmout = maybe_timeout(rng);
        return st;
    }
    auto st = call("sig_sem");
    st.call.id = id;
    st.call.count = uniform(rng, 1, 2);
    return st;
}

sc::Statement random_handler_statement(std::mt19937_64& rng, const sc::Scenario& s, int tasks) {
    const int pick = uniform(rng, 1, 100);
    if (pick <= 40) return compute(chance(rng, 50) ? "a" : "b");
    if (pick <= 70) {
        auto st = call("sig_sem");
        st.call.id = uniform(rng, 1, static_cast<int>(s.objects.semaphores.size()));
        return st;
    }
    if (pick <= 90) {
        auto st = call("wup_tsk");
        st.call.id = uniform(rng, 1, tasks);
        return st;
    }
    return call("slp_tsk");  // refused in handler context
}

bool has_time(const sc::Program& p, const sc::Scenario& s) {
    return std::any_of(p.begin(), p.end(), [&](const sc::Statement& st) {
        return st.kind == sc::Statement::Kind::Compute && s.annotations.at(st.label).etm > 0;
    });
}

}  // namespace

sc::Scenario random_scenario(std::mt19937_64& rng, Tick max_ticks) {
    sc::Scenario s;
    s.name = "random";
    s.tick_us = 1000;
    s.run_ticks = static_cast<Tick>(uniform(rng, 20, static_cast<int>(max_ticks)));
    s.svc = {"svc", static_cast<Tick>(uniform(rng, 0, 2)), uj(uniform(rng, 0, 50))};
    if (chance(rng, 30)) s.svc_overrides["wai_sem"] = {"wai_sem", static_cast<Tick>(uniform(rng, 0, 3)), uj(7)};
    s.idle_energy_per_tick = uj(uniform(rng, 0, 5));
    s.annotations["a"] = {"a", 1, uj(uniform(rng, 0, 100))};
    s.annotations["b"] = {"b", 3, uj(uniform(rng, 0, 100))};
    s.annotations["c"] = {"c", 7, uj(uniform(rng, 0, 1000))};
    s.annotations["z"] = {"z", 0, uj(uniform(rng, 0, 100))};

    const int sems = uniform(rng, 1, 2);
    for (int i = 1; i <= sems; ++i) {
        sc::SemaphoreDecl d;
        d.id = i;
        d.initial = uniform(rng, 0, 2);
        d.max = uniform(rng, std::max(1, d.initial), 3);
        s.objects.semaphores.push_back(d);
    }

    const int tasks = uniform(rng, 1, 3);
    for (int i = 1; i <= tasks; ++i) {
        sc::TaskDecl t;
        t.id = static_cast<ThreadId>(i);
        t.name = "T" + std::to_string(i);
        t.priority = static_cast<rtk::sim::Priority>(uniform(rng, 1, 3));
        const int prefix = uniform(rng, 0, 4);
        for (int k = 0; k < prefix; ++k) {
            if (chance(rng, 10)) {
                sc::Statement loop;
                loop.kind = sc::Statement::Kind::Loop;
                loop.count = static_cast<std::uint64_t>(uniform(rng, 1, 3));
                const int n = uniform(rng, 1, 2);
                for (int j = 0; j < n; ++j) loop.body.push_back(random_task_statement(rng, s, tasks));
                t.program.push_back(std::move(loop));
            } else {
                t.program.push_back(random_task_statement(rng, s, tasks));
            }
        }
        if (chance(rng, 60)) {
            sc::Statement loop;
            loop.kind = sc::Statement::Kind::Loop;
            const int n = uniform(rng, 1, 4);
            for (int j = 0; j < n; ++j) loop.body.push_back(random_task_statement(rng, s, tasks));
            if (!has_time(loop.body, s)) loop.body.push_back(compute("a"));
            t.program.push_back(std::move(loop));
        } else if (t.program.empty()) {
            t.program.push_back(compute("b"));
        }
        s.tasks.push_back(std::move(t));
    }

    ThreadId next = static_cast<ThreadId>(tasks + 1);
    int handler_budget = 4 - tasks;
    if (handler_budget > 0 && chance(rng, 60)) {
        sc::HandlerDecl h;
        h.id = next++;
        h.name = "ISR";
        h.kind = sc::HandlerKind::Isr;
        h.line = 0;
        const int n = uniform(rng, 1, 3);
        for (int j = 0; j < n; ++j) h.program.push_back(random_handler_statement(rng, s, tasks));
        s.handlers.push_back(std::move(h));
        --handler_budget;
        std::vector<Tick> at;
        const int stimuli = uniform(rng, 0, 5);
        for (int j = 0; j < stimuli; ++j) at.push_back(static_cast<Tick>(uniform(rng, 0, static_cast<int>(s.run_ticks) - 1)));
        std::sort(at.begin(), at.end());
        for (Tick a : at) s.stimuli.push_back({a, rtk::bfm::StimulusKind::Irq, 0, {}, {}});
    }
    if (handler_budget > 0 && chance(rng, 35)) {
        sc::HandlerDecl h;
        h.id = next++;
        h.name = "CYC";
        h.kind = sc::HandlerKind::Cyclic;
        h.period = static_cast<Tick>(uniform(rng, 5, 40));
        if (chance(rng, 70)) h.phase = static_cast<Tick>(uniform(rng, 0, static_cast<int>(h.period)));
        const int n = uniform(rng, 1, 2);
        for (int j = 0; j < n; ++j) h.program.push_back(random_handler_statement(rng, s, tasks));
        s.handlers.push_back(std::move(h));
    }
    return s;
}

// --- reference model -----------------------------------------------------------------------

namespace {

struct Op {
    bool is_call = false;
    Tick etm = 0;
    std::int64_t uj = 0;
    sc::Call c;
};

enum class St { Dormant, Ready, Running, Waiting };
enum class Phase { Next, Computing, Checked, Svc, Blocked };
enum class WaitOn { None, Sleep, Delay, Sem };
enum class TimerKind { Delay, Timeout, Cyclic };

struct Thread {
    ThreadId id = 0;
    int prio = 0;
    bool handler = false;
    bool idle = false;
    std::vector<Op> ops;
    std::optional<std::size_t> loop_start;

    St st = St::Dormant;
    Phase ph = Phase::Next;
    std::size_t pc = 0;
    bool seg = false;
    Tick seg_etm = 0;
    Tick seg_done = 0;
    std::int64_t seg_uj = 0;
    Tick ready_tick = 0;
    int wakeups = 0;
    WaitOn wait = WaitOn::None;
    ID wait_sem = 0;
    int wait_count = 0;
    std::optional<std::pair<Tick, std::uint64_t>> timer;
    ER result = E_OK;
    Tick cet = 0;
    std::int64_t cee = 0;
};

struct Timer {
    TimerKind kind;
    ThreadId target;
    Tick period;
};

struct Sem {
    int count = 0;
    int max = 0;
    std::list<ThreadId> waiters;  // kept in release order
};

struct Frame {
    ThreadId handler;
    std::optional<ThreadId> interrupted;
};

class Model {
public:
    explicit Model(const sc::Scenario& s) : s_(s) {
        idle_ = s.resolved_idle_id();
        for (const auto& d : s.objects.semaphores) sems_[d.id] = Sem{d.initial, d.max, {}};
        for (const auto& t : s.tasks) {
            Thread& th = add(t.id, t.priority, t.program);
            (void)th;
            tasks_.insert(t.id);
        }
        for (const auto& h : s.handlers) {
            Thread& th = add(h.id, 0, h.program);
            th.handler = true;
            if (h.kind == sc::HandlerKind::Isr) irq_[h.line] = h.id;
        }
        Thread& idle = threads_[idle_];
        idle.id = idle_;
        idle.idle = true;
        idle.prio = 141;
        tasks_.insert(idle_);

        // boot at instant 0: idle first, cyclic timers, then autostart tasks
        make_ready(idle);
        for (const auto& h : s.handlers) {
            if (h.kind == sc::HandlerKind::Cyclic) insert_timer(h.phase.value_or(h.period), {TimerKind::Cyclic, h.id, h.period});
            if (h.kind == sc::HandlerKind::Alarm) throw std::logic_error("alarms are not modelled");
        }
        for (const auto& t : s.tasks) {
            if (t.autostart) start(threads_.at(t.id));
        }
    }

    ReferenceRun run() {
        ReferenceRun out;
        while (now_ < s_.run_ticks && !deadlock_) {
            tick(out);
            check_deadlock();
        }
        for (const auto& [id, t] : threads_) {
            out.cet[id] = t.cet;
            out.cee_uj[id] = t.cee;
        }
        out.calls = std::move(calls_);
        out.deadlock = deadlock_;
        return out;
    }

private:
    Thread& add(ThreadId id, int prio, const sc::Program& p) {
        Thread& t = threads_[id];
        t.id = id;
        t.prio = prio;
        flatten(p, t);
        return t;
    }

    void flatten(const sc::Program& p, Thread& t) {
        for (const auto& st : p) {
            switch (st.kind) {
                case sc::Statement::Kind::Compute: {
                    const Annotation& a = s_.annotations.at(st.label);
                    t.ops.push_back({false, a.etm, a.eem.microjoules(), {}});
                    break;
                }
                case sc::Statement::Kind::Call: t.ops.push_back({true, 0, 0, st.call}); break;
                case sc::Statement::Kind::Loop:
                    if (!st.count) {
                        if (&st != &p.back() || t.loop_start) throw std::logic_error("forever loop must come last");
                        t.loop_start = t.ops.size();
                        flatten(st.body, t);
                    } else {
                        for (std::uint64_t i = 0; i < *st.count; ++i) flatten(st.body, t);
                    }
                    break;
                case sc::Statement::Kind::Bfm: throw std::logic_error("device access is not modelled");
            }
        }
    }

    void insert_timer(Tick due, Timer t) { timers_[{due, seq_++}] = t; }

    void start(Thread& t) {
        t.pc = 0;
        t.ph = Phase::Next;
        t.seg = false;
        make_ready(t);
    }

    void make_ready(Thread& t) {
        t.st = St::Ready;
        t.ready_tick = now_;
        ready_.insert({t.prio, t.ready_tick, t.id});
    }

    void release(Thread& t, ER er) {
        if (t.timer) timers_.erase(*t.timer);
        t.timer.reset();
        t.wait = WaitOn::None;
        t.result = er;
        make_ready(t);
    }

    std::optional<ThreadId> executing() const {
        if (!stack_.empty()) return stack_.back().handler;
        return current_;
    }

    void grant(Sem& s) {
        while (!s.waiters.empty()) {
            Thread& h = threads_.at(s.waiters.front());
            if (h.wait_count > s.count) break;
            s.count -= h.wait_count;
            s.waiters.pop_front();
            release(h, E_OK);
        }
    }

    void enqueue(Sem& s, ThreadId id) {
        const int p = threads_.at(id).prio;
        auto it = std::find_if(s.waiters.begin(), s.waiters.end(), [&](ThreadId w) { return threads_.at(w).prio > p; });
        s.waiters.insert(it, id);
    }

    void tick(ReferenceRun& out) {
        while (!timers_.empty() && timers_.begin()->first.first <= now_) {
            const auto key = timers_.begin()->first;
            const Timer tm = timers_.begin()->second;
            timers_.erase(timers_.begin());
            Thread& t = threads_.at(tm.target);
            switch (tm.kind) {
                case TimerKind::Cyclic:
                    insert_timer(key.first + tm.period, tm);
                    pending_.push_back(tm.target);
                    break;
                case TimerKind::Delay:
                    t.timer.reset();
                    release(t, E_OK);
                    break;
                case TimerKind::Timeout:
                    t.timer.reset();
                    if (t.wait == WaitOn::Sem) {
                        Sem& s = sems_.at(t.wait_sem);
                        s.waiters.remove(t.id);
                        t.wait = WaitOn::None;
                        grant(s);
                    }
                    release(t, E_TMOUT);
                    break;
            }
        }
        while (next_stimulus_ < s_.stimuli.size() && s_.stimuli[next_stimulus_].at <= now_) {
            pending_.push_back(irq_.at(s_.stimuli[next_stimulus_].line));
            ++next_stimulus_;
        }
        for (;;) {
            Thread* x = select();
            if (!x) {
                out.ticks.push_back(std::nullopt);
                break;
            }
            if (x->idle) {
                ++x->cet;
                x->cee += s_.idle_energy_per_tick.microjoules();
                out.ticks.push_back(x->id);
                break;
            }
            if (x->seg) {
                const std::int64_t before = x->seg_uj * static_cast<std::int64_t>(x->seg_done) / static_cast<std::int64_t>(x->seg_etm);
                ++x->seg_done;
                const std::int64_t after = x->seg_uj * static_cast<std::int64_t>(x->seg_done) / static_cast<std::int64_t>(x->seg_etm);
                ++x->cet;
                x->cee += after - before;
                if (x->seg_done == x->seg_etm) x->seg = false;
                out.ticks.push_back(x->id);
                break;
            }
            step(*x);
        }
        ++now_;
    }

    Thread* select() {
        if (critical_) return &threads_.at(*critical_);
        for (;;) {
            auto it = std::find_if(pending_.begin(), pending_.end(),
                                   [&](ThreadId h) { return threads_.at(h).st == St::Dormant; });
            if (it == pending_.end()) break;
            const ThreadId h = *it;
            pending_.erase(it);
            Frame f{h, executing()};
            if (f.interrupted) threads_.at(*f.interrupted).st = St::Ready;
            stack_.push_back(f);
            Thread& ht = threads_.at(h);
            ht.st = St::Running;
            ht.pc = 0;
            ht.ph = Phase::Next;
            ht.seg = false;
        }
        if (!stack_.empty()) return &threads_.at(stack_.back().handler);
        if (!ready_.empty()) {
            const auto [p, rt, id] = *ready_.begin();
            if (!current_) {
                dispatch(id);
            } else if (p < threads_.at(*current_).prio) {
                Thread& c = threads_.at(*current_);
                c.st = St::Ready;
                ready_.insert({c.prio, c.ready_tick, c.id});
                dispatch(id);
            }
        }
        if (current_) {
            Thread& c = threads_.at(*current_);
            c.st = St::Running;
            return &c;
        }
        return nullptr;
    }

    void dispatch(ThreadId id) {
        Thread& t = threads_.at(id);
        ready_.erase({t.prio, t.ready_tick, t.id});
        current_ = id;
        t.st = St::Running;
    }

    void complete(Thread& x) {
        x.st = St::Dormant;
        if (x.handler) {
            stack_.pop_back();
            return;
        }
        if (current_ == x.id) current_.reset();
    }

    Annotation svc_for(const std::string& name) const {
        if (auto it = s_.svc_overrides.find(name); it != s_.svc_overrides.end()) return it->second;
        return s_.svc;
    }

    // Runs the thread's zero-time code up to its next suspension point, as one
    // resumption of the coroutine would.
    void advance(Thread& x) {
        if (x.pc == x.ops.size()) {
            if (!x.loop_start) {
                complete(x);
                return;
            }
            x.pc = *x.loop_start;
        }
        const Op& op = x.ops[x.pc];
        x.ph = Phase::Next;
        if (op.is_call) {
            x.ph = Phase::Checked;
        } else if (op.etm > 0) {
            x.seg = true;
            x.seg_etm = op.etm;
            x.seg_done = 0;
            x.seg_uj = op.uj;
            x.ph = Phase::Computing;
        } else {
            x.cee += op.uj;
            ++x.pc;
        }
    }

    void step(Thread& x) {
        switch (x.ph) {
            case Phase::Next: advance(x); return;
            case Phase::Computing:
                ++x.pc;
                advance(x);
                return;
            case Phase::Checked: {
                critical_ = x.id;
                const Annotation a = svc_for(x.ops[x.pc].c.service);
                if (a.etm > 0) {
                    x.seg = true;
                    x.seg_etm = a.etm;
                    x.seg_done = 0;
                    x.seg_uj = a.eem.microjoules();
                } else {
                    x.cee += a.eem.microjoules();
                }
                x.ph = Phase::Svc;
                return;
            }
            case Phase::Svc: {
                critical_.reset();
                const sc::Call& c = x.ops[x.pc].c;
                const auto [er, block] = effect(x, c);
                if (block) {
                    x.st = St::Waiting;
                    x.ph = Phase::Blocked;
                    if (current_ == x.id) current_.reset();
                } else {
                    calls_.push_back({now_, x.id, c.service, er});
                    ++x.pc;
                    advance(x);
                }
                return;
            }
            case Phase::Blocked:
                calls_.push_back({now_, x.id, x.ops[x.pc].c.service, x.result});
                ++x.pc;
                advance(x);
                return;
        }
    }

    std::pair<ER, bool> block(Thread& x, WaitOn on, std::optional<Tick> tmout) {
        x.wait = on;
        x.result = E_OK;
        if (tmout) {
            const std::pair<Tick, std::uint64_t> key{now_ + *tmout, seq_};
            insert_timer(now_ + *tmout, {on == WaitOn::Delay ? TimerKind::Delay : TimerKind::Timeout, x.id, 0});
            x.timer = key;
        }
        return {E_OK, true};
    }

    std::pair<ER, bool> effect(Thread& x, const sc::Call& c) {
        const std::string& s = c.service;
        if (s == "slp_tsk") {
            if (x.handler) return {E_CTX, false};
            if (c.tmout && *c.tmout == 0) return {E_PAR, false};
            if (x.wakeups > 0) {
                --x.wakeups;
                return {E_OK, false};
            }
            return block(x, WaitOn::Sleep, c.tmout);
        }
        if (s == "wup_tsk") {
            const auto target = static_cast<ThreadId>(c.id);
            if (!tasks_.contains(target) || target == idle_) return {E_NOEXS, false};
            Thread& t = threads_.at(target);
            if (target == x.id || t.st == St::Dormant) return {E_OBJ, false};
            if (t.st == St::Waiting && t.wait == WaitOn::Sleep) {
                release(t, E_OK);
            } else {
                ++t.wakeups;
            }
            return {E_OK, false};
        }
        if (s == "dly_tsk") {
            if (x.handler) return {E_CTX, false};
            if (c.ticks == 0) return {E_OK, false};
            return block(x, WaitOn::Delay, c.ticks);
        }
        if (s == "wai_sem") {
            if (x.handler) return {E_CTX, false};
            Sem& sem = sems_.at(c.id);
            if (c.count <= 0 || c.count > sem.max || (c.tmout && *c.tmout == 0)) return {E_PAR, false};
            if (sem.waiters.empty() && sem.count >= c.count) {
                sem.count -= c.count;
                return {E_OK, false};
            }
            enqueue(sem, x.id);
            x.wait_sem = c.id;
            x.wait_count = c.count;
            return block(x, WaitOn::Sem, c.tmout);
        }
        if (s == "sig_sem") {
            Sem& sem = sems_.at(c.id);
            if (c.count <= 0) return {E_PAR, false};
            if (c.count > sem.max - sem.count) return {E_QOVR, false};
            sem.count += c.count;
            grant(sem);
            return {E_OK, false};
        }
        throw std::logic_error("service " + s + " is not modelled");
    }

    void check_deadlock() {
        if (!timers_.empty() || !stack_.empty() || !pending_.empty()) return;
        for (const auto& st : s_.stimuli) {
            if (st.at >= now_) return;
        }
        bool waiting = false;
        for (const auto& [id, t] : threads_) {
            if (id == idle_) continue;
            if (t.st == St::Ready || t.st == St::Running) return;
            if (t.st == St::Waiting && !t.handler) waiting = true;
        }
        deadlock_ = waiting;
    }

    const sc::Scenario& s_;
    ThreadId idle_ = 0;
    Tick now_ = 0;
    std::map<ThreadId, Thread> threads_;
    std::set<ThreadId> tasks_;
    std::map<std::uint32_t, ThreadId> irq_;
    std::map<ID, Sem> sems_;
    std::map<std::pair<Tick, std::uint64_t>, Timer> timers_;
    std::uint64_t seq_ = 0;
    std::set<std::tuple<int, Tick, ThreadId>> ready_;
    std::optional<ThreadId> current_;
    std::vector<Frame> stack_;
    std::vector<ThreadId> pending_;
    std::optional<ThreadId> critical_;
    std::size_t next_stimulus_ = 0;
    std::vector<sc::CallResult> calls_;
    bool deadlock_ = false;
};

}  // namespace

ReferenceRun reference_run(const sc::Scenario& s) { return Model(s).run(); }

}  // namespace acc
