#include "object_oracle.hpp"

#include "rtk/kernel/kernel.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#define SVC(out, expr)          \
    do {                        \
        auto call_ = (expr);    \
        out = co_await call_;   \
    } while (0)

namespace acc {

using namespace rtk::kernel;
using rtk::sim::Activity;
using rtk::sim::Engine;
using rtk::sim::ThreadId;
using rtk::sim::Tick;

namespace {

constexpr Tick kSlot = 20;
constexpr Tick kTimeout = 5;
constexpr int kActors = 3;
constexpr ThreadId kIdle = 99;

std::vector<ObjectKind> kinds() {
    return {ObjectKind::Semaphore, ObjectKind::EventFlag,  ObjectKind::Mailbox,     ObjectKind::MessageBuffer,
            ObjectKind::Mutex,     ObjectKind::FixedPool,  ObjectKind::VariablePool};
}

// Operations available on each kind; the index is what sequences enumerate.
const std::vector<std::string>& actions(ObjectKind k) {
    static const std::map<ObjectKind, std::vector<std::string>> table{
        {ObjectKind::Semaphore, {"wai 1", "wai 2", "wai 1 t5", "sig 1"}},
        {ObjectKind::EventFlag, {"set 0x1", "set 0x2", "clr all", "wai and 0x3", "wai or 0x1 clr"}},
        {ObjectKind::Mailbox, {"snd p2 a", "snd p1 b", "rcv", "rcv t5"}},
        {ObjectKind::MessageBuffer, {"snd xy", "snd xyz", "snd xyz t5", "rcv", "rcv t5"}},
        {ObjectKind::Mutex, {"loc", "unl", "loc t5"}},
        {ObjectKind::FixedPool, {"get", "rel", "get t5"}},
        {ObjectKind::VariablePool, {"get 3", "get 5", "get 4 t5", "rel"}},
    };
    return table.at(k);
}

struct Step {
    int actor = 0;
    int action = 0;
};

struct Obs {
    bool done = false;
    ER er = E_OK;
    std::string out;
    std::size_t stamp = 0;  // operations issued when the call returned
    friend bool operator==(const Obs&, const Obs&) = default;
};

struct Result {
    std::vector<Obs> obs;
    std::string state;
    std::array<int, kActors> priority{};
    friend bool operator==(const Result&, const Result&) = default;
};

std::string describe(const Result& r) {
    std::ostringstream o;
    for (std::size_t j = 0; j < r.obs.size(); ++j) {
        const auto& b = r.obs[j];
        o << " [" << j << ": " << (b.done ? std::string(er_name(b.er)) : "pending") << ' ' << b.out << " @" << b.stamp
          << ']';
    }
    o << " state {" << r.state << "} prio";
    for (int p : r.priority) o << ' ' << p;
    return o.str();
}

std::string hex(std::uint32_t v) {
    std::ostringstream o;
    o << "0x" << std::hex << v;
    return o.str();
}

// --- system under test --------------------------------------------------------------------

struct Rig {
    ObjectKind kind;
    std::vector<Step> seq;
    Engine e{kActors + 2};
    Kernel k;
    std::vector<Obs> obs;
    std::size_t issued = 0;
    std::array<std::vector<std::size_t>, kActors> held;

    Rig(ObjectKind kd, std::vector<Step> s) : kind(kd), seq(std::move(s)), k(e, config()), obs(seq.size()) {}

    static KernelConfig config() {
        KernelConfig c;
        c.idle_id = kIdle;
        return c;
    }
};

rtk::sim::Co<> perform(Rig& r, ThreadId self, int actor, int action, Obs& o) {
    auto& k = r.k;
    ER er = E_OK;
    std::string out;
    const Timeout t5 = kTimeout;
    switch (r.kind) {
        case ObjectKind::Semaphore:
            if (action == 0) SVC(er, k.wai_sem(self, 1, 1));
            if (action == 1) SVC(er, k.wai_sem(self, 1, 2));
            if (action == 2) SVC(er, k.wai_sem(self, 1, 1, t5));
            if (action == 3) SVC(er, k.sig_sem(self, 1, 1));
            break;
        case ObjectKind::EventFlag: {
            std::uint32_t got = 0;
            if (action == 0) SVC(er, k.set_flg(self, 1, 0x1));
            if (action == 1) SVC(er, k.set_flg(self, 1, 0x2));
            if (action == 2) SVC(er, k.clr_flg(self, 1, 0));
            if (action == 3) SVC(er, k.wai_flg(self, 1, 0x3, FlagMode::And, false, kForever, &got));
            if (action == 4) SVC(er, k.wai_flg(self, 1, 0x1, FlagMode::Or, true, kForever, &got));
            if (action >= 3 && er == E_OK) out = hex(got);
            break;
        }
        case ObjectKind::Mailbox: {
            Message m;
            if (action == 0) SVC(er, k.snd_mbx(self, 1, Message{2, "a"}));
            if (action == 1) SVC(er, k.snd_mbx(self, 1, Message{1, "b"}));
            if (action == 2) SVC(er, k.rcv_mbx(self, 1, kForever, &m));
            if (action == 3) SVC(er, k.rcv_mbx(self, 1, t5, &m));
            if (action >= 2 && er == E_OK) out = m.text;
            break;
        }
        case ObjectKind::MessageBuffer: {
            std::string bytes;
            if (action == 0) SVC(er, k.snd_mbf(self, 1, "xy"));
            if (action == 1) SVC(er, k.snd_mbf(self, 1, "xyz"));
            if (action == 2) SVC(er, k.snd_mbf(self, 1, "xyz", t5));
            if (action == 3) SVC(er, k.rcv_mbf(self, 1, kForever, &bytes));
            if (action == 4) SVC(er, k.rcv_mbf(self, 1, t5, &bytes));
            if (action >= 3 && er == E_OK) out = bytes;
            break;
        }
        case ObjectKind::Mutex:
            if (action == 0) SVC(er, k.loc_mtx(self, 1));
            if (action == 1) SVC(er, k.unl_mtx(self, 1));
            if (action == 2) SVC(er, k.loc_mtx(self, 1, t5));
            break;
        case ObjectKind::FixedPool: {
            auto& held = r.held[static_cast<std::size_t>(actor)];
            std::size_t block = 0;
            if (action == 0) SVC(er, k.get_mpf(self, 1, kForever, &block));
            if (action == 2) SVC(er, k.get_mpf(self, 1, t5, &block));
            if (action == 1) {
                const std::size_t which = held.empty() ? 0 : held.back();
                SVC(er, k.rel_mpf(self, 1, which));
                if (er == E_OK) held.pop_back();
            } else if (er == E_OK) {
                held.push_back(block);
                out = std::to_string(block);
            }
            break;
        }
        case ObjectKind::VariablePool: {
            auto& held = r.held[static_cast<std::size_t>(actor)];
            std::size_t offset = 0;
            if (action == 0) SVC(er, k.get_mpl(self, 1, 3, kForever, &offset));
            if (action == 1) SVC(er, k.get_mpl(self, 1, 5, kForever, &offset));
            if (action == 2) SVC(er, k.get_mpl(self, 1, 4, t5, &offset));
            if (action == 3) {
                const std::size_t which = held.empty() ? 0 : held.back();
                SVC(er, k.rel_mpl(self, 1, which));
                if (er == E_OK) held.pop_back();
            } else if (er == E_OK) {
                held.push_back(offset);
                out = std::to_string(offset);
            }
            break;
        }
    }
    o.er = er;
    o.out = out;
}

Activity actor_body(Rig& r, ThreadId self, int actor) {
    co_await r.e.wait_run(self);
    ER er = E_OK;
    for (std::size_t j = 0; j < r.seq.size(); ++j) {
        if (r.seq[j].actor != actor) continue;
        const Tick target = kSlot * (j + 1);
        if (r.e.now() + 1 < target) SVC(er, r.k.dly_tsk(self, target - r.e.now() - 1));
        if (er != E_OK) throw std::logic_error("actor delay refused");
        ++r.issued;
        Obs o;
        auto op = perform(r, self, actor, r.seq[j].action, o);
        co_await op;
        o.done = true;
        o.stamp = r.issued;
        r.obs[j] = o;
    }
    SVC(er, r.k.slp_tsk(self));
}

std::string waiters_text(const Kernel& k, ObjectClass cls) {
    std::string s;
    for (ThreadId w : k.waiters(cls, 1)) s += std::to_string(w - 1);
    return s;
}

Result run_system(ObjectKind kind, const std::vector<Step>& seq, const std::array<int, kActors>& prio) {
    Rig r(kind, seq);
    r.k.boot([&](Kernel& k) {
        switch (kind) {
            case ObjectKind::Semaphore: k.cre_sem(1, 1, 2); break;
            case ObjectKind::EventFlag: k.cre_flg(1, 0); break;
            case ObjectKind::Mailbox: k.cre_mbx(1); break;
            case ObjectKind::MessageBuffer: k.cre_mbf(1, 4, 3); break;
            case ObjectKind::Mutex: k.cre_mtx(1); break;
            case ObjectKind::FixedPool: k.cre_mpf(1, 16, 2); break;
            case ObjectKind::VariablePool: k.cre_mpl(1, 8); break;
        }
        for (int a = 0; a < kActors; ++a) {
            const auto id = static_cast<ThreadId>(a + 1);
            k.cre_tsk({id, "A" + std::to_string(a), prio[static_cast<std::size_t>(a)], 0,
                       [&r, a](ThreadId self) { return actor_body(r, self, a); }});
            k.start_task(id);
        }
    });
    const Tick end = kSlot * (seq.size() + 2);
    while (r.e.now() < end) {
        r.k.timer_tick();
        r.e.execute_tick();
    }

    Result res;
    res.obs = r.obs;
    std::ostringstream st;
    const auto& k = r.k;
    switch (kind) {
        case ObjectKind::Semaphore:
            st << "count " << k.semaphores().at(1).count << " waiters " << waiters_text(k, ObjectClass::Semaphore);
            break;
        case ObjectKind::EventFlag:
            st << "pattern " << hex(k.event_flags().at(1).pattern) << " waiters " << waiters_text(k, ObjectClass::EventFlag);
            break;
        case ObjectKind::Mailbox:
            st << "queue";
            for (const auto& [seq_no, m] : k.mailboxes().at(1).queue) st << ' ' << m.text;
            st << " waiters " << waiters_text(k, ObjectClass::Mailbox);
            break;
        case ObjectKind::MessageBuffer: {
            const auto& b = k.message_buffers().at(1);
            st << "messages";
            for (const auto& m : b.messages) st << ' ' << m;
            st << " used " << b.used << " waiters " << waiters_text(k, ObjectClass::MessageBuffer);
            break;
        }
        case ObjectKind::Mutex: {
            const auto& m = k.mutexes().at(1);
            st << "owner " << (m.owner ? static_cast<int>(*m.owner) - 1 : -1) << " waiters "
               << waiters_text(k, ObjectClass::Mutex);
            break;
        }
        case ObjectKind::FixedPool:
            st << "owners";
            for (const auto& o : k.fixed_pools().at(1).owners) st << ' ' << (o ? static_cast<int>(*o) - 1 : -1);
            st << " waiters " << waiters_text(k, ObjectClass::FixedPool);
            break;
        case ObjectKind::VariablePool:
            st << "allocated";
            for (const auto& [off, a] : k.variable_pools().at(1).allocated) st << ' ' << off << '+' << a.size << ':' << a.owner - 1;
            st << " waiters " << waiters_text(k, ObjectClass::VariablePool);
            break;
    }
    res.state = st.str();
    for (int a = 0; a < kActors; ++a) {
        res.priority[static_cast<std::size_t>(a)] = r.e.thread(static_cast<ThreadId>(a + 1)).current_priority;
    }
    return res;
}

// --- list-based model ----------------------------------------------------------------------

struct Waiter {
    int actor = 0;
    std::size_t op = 0;
    int action = 0;
    bool sender = false;  // message buffer: queued as a sender
};

class ObjectModel {
public:
    ObjectModel(ObjectKind kind, std::array<int, kActors> prio) : kind_(kind), prio_(prio) {}

    /// False when the sequence asks a blocked actor to act.
    bool run(const std::vector<Step>& seq, Result& res) {
        obs_.assign(seq.size(), Obs{});
        for (std::size_t j = 0; j < seq.size(); ++j) {
            const Step s = seq[j];
            if (blocked_[static_cast<std::size_t>(s.actor)]) return false;
            issued_ = j + 1;
            apply(j, s.actor, s.action);
            // a timed wait issued in this slot expires before the next one
            if (auto w = find(j)) {
                if (timed(w->action)) expire(*w);
            }
        }
        res.obs = obs_;
        res.state = state();
        for (int a = 0; a < kActors; ++a) res.priority[static_cast<std::size_t>(a)] = priority(a);
        return true;
    }

private:
    bool timed(int action) const {
        const std::string& name = actions(kind_)[static_cast<std::size_t>(action)];
        return name.size() > 3 && name.substr(name.size() - 2) == "t5";
    }

    int prio(int actor) const { return prio_[static_cast<std::size_t>(actor)]; }

    // Waiters sit in release order: by priority, then arrival.
    void enqueue(std::list<Waiter>& q, Waiter w) {
        auto it = std::find_if(q.begin(), q.end(), [&](const Waiter& x) { return prio(x.actor) > prio(w.actor); });
        q.insert(it, w);
    }

    std::optional<Waiter> find(std::size_t op) const {
        for (const auto* q : {&waiters_, &receivers_}) {
            for (const auto& w : *q) {
                if (w.op == op) return w;
            }
        }
        return std::nullopt;
    }

    void done(std::size_t op, ER er, std::string out = {}) { obs_[op] = Obs{true, er, std::move(out), issued_}; }

    void block(std::list<Waiter>& q, std::size_t op, int actor, int action, bool sender = false) {
        blocked_[static_cast<std::size_t>(actor)] = true;
        enqueue(q, Waiter{actor, op, action, sender});
    }

    void wake(const Waiter& w, ER er, std::string out = {}) {
        blocked_[static_cast<std::size_t>(w.actor)] = false;
        done(w.op, er, std::move(out));
    }

    void apply(std::size_t j, int actor, int action) {
        switch (kind_) {
            case ObjectKind::Semaphore: {
                if (action == 3) {
                    if (sem_ + 1 > 2) return done(j, E_QOVR);
                    ++sem_;
                    grant_sem();
                    return done(j, E_OK);
                }
                const int want = action == 1 ? 2 : 1;
                if (waiters_.empty() && sem_ >= want) {
                    sem_ -= want;
                    return done(j, E_OK);
                }
                return block(waiters_, j, actor, action);
            }
            case ObjectKind::EventFlag: {
                if (action == 0 || action == 1) {
                    pattern_ |= action == 0 ? 0x1u : 0x2u;
                    const std::list<Waiter> snapshot = waiters_;
                    for (const auto& w : snapshot) {
                        if (!flag_ok(w.action)) continue;
                        const std::uint32_t seen = pattern_;
                        remove(waiters_, w.op);
                        if (w.action == 4) pattern_ = 0;
                        wake(w, E_OK, hex(seen));
                    }
                    return done(j, E_OK);
                }
                if (action == 2) {
                    pattern_ = 0;
                    return done(j, E_OK);
                }
                if (flag_ok(action)) {
                    const std::uint32_t seen = pattern_;
                    if (action == 4) pattern_ = 0;
                    return done(j, E_OK, hex(seen));
                }
                return block(waiters_, j, actor, action);
            }
            case ObjectKind::Mailbox: {
                if (action <= 1) {
                    const int p = action == 0 ? 2 : 1;
                    const std::string text = action == 0 ? "a" : "b";
                    if (!waiters_.empty()) {
                        const Waiter w = waiters_.front();
                        waiters_.pop_front();
                        wake(w, E_OK, text);
                        return done(j, E_OK);
                    }
                    auto it = std::find_if(mailbox_.begin(), mailbox_.end(), [&](const auto& m) { return m.first > p; });
                    mailbox_.insert(it, {p, text});
                    return done(j, E_OK);
                }
                if (!mailbox_.empty()) {
                    const std::string text = mailbox_.front().second;
                    mailbox_.pop_front();
                    return done(j, E_OK, text);
                }
                return block(waiters_, j, actor, action);
            }
            case ObjectKind::MessageBuffer: {
                if (action <= 2) {
                    const std::string bytes = action == 0 ? "xy" : "xyz";
                    if (waiters_.empty()) {
                        if (!receivers_.empty() && buffer_.empty()) {
                            const Waiter r = receivers_.front();
                            receivers_.pop_front();
                            wake(r, E_OK, bytes);
                            return done(j, E_OK);
                        }
                        if (4 - used_ >= bytes.size()) {
                            buffer_.push_back(bytes);
                            used_ += bytes.size();
                            return done(j, E_OK);
                        }
                    }
                    payload_[j] = bytes;
                    return block(waiters_, j, actor, action, true);
                }
                if (!buffer_.empty()) {
                    const std::string bytes = buffer_.front();
                    buffer_.pop_front();
                    used_ -= bytes.size();
                    admit();
                    return done(j, E_OK, bytes);
                }
                return block(receivers_, j, actor, action);
            }
            case ObjectKind::Mutex: {
                if (action == 1) {
                    if (owner_ != actor) return done(j, E_ILUSE);
                    owner_ = -1;
                    if (!waiters_.empty()) {
                        const Waiter w = waiters_.front();
                        waiters_.pop_front();
                        owner_ = w.actor;
                        wake(w, E_OK);
                    }
                    return done(j, E_OK);
                }
                if (owner_ < 0) {
                    owner_ = actor;
                    return done(j, E_OK);
                }
                if (owner_ == actor) return done(j, E_ILUSE);
                return block(waiters_, j, actor, action);
            }
            case ObjectKind::FixedPool: {
                auto& held = held_[static_cast<std::size_t>(actor)];
                if (action == 1) {
                    const std::size_t b = held.empty() ? 0 : held.back();
                    if (blocks_[b] != actor) return done(j, E_ILUSE);
                    held.pop_back();
                    if (!waiters_.empty()) {
                        const Waiter w = waiters_.front();
                        waiters_.pop_front();
                        blocks_[b] = w.actor;
                        held_[static_cast<std::size_t>(w.actor)].push_back(b);
                        wake(w, E_OK, std::to_string(b));
                    } else {
                        blocks_[b] = -1;
                    }
                    return done(j, E_OK);
                }
                if (waiters_.empty()) {
                    for (std::size_t b = 0; b < blocks_.size(); ++b) {
                        if (blocks_[b] >= 0) continue;
                        blocks_[b] = actor;
                        held.push_back(b);
                        return done(j, E_OK, std::to_string(b));
                    }
                }
                return block(waiters_, j, actor, action);
            }
            case ObjectKind::VariablePool: {
                auto& held = held_[static_cast<std::size_t>(actor)];
                if (action == 3) {
                    const std::size_t off = held.empty() ? 0 : held.back();
                    auto it = allocations_.find(off);
                    if (it == allocations_.end()) return done(j, E_PAR);
                    if (it->second.second != actor) return done(j, E_ILUSE);
                    held.pop_back();
                    for (std::size_t u = off; u < off + it->second.first; ++u) units_[u] = -1;
                    allocations_.erase(it);
                    grant_pool();
                    return done(j, E_OK);
                }
                const std::size_t size = action == 0 ? 3 : action == 1 ? 5 : 4;
                if (waiters_.empty()) {
                    if (auto off = first_fit(size)) {
                        take(*off, size, actor);
                        return done(j, E_OK, std::to_string(*off));
                    }
                }
                return block(waiters_, j, actor, action);
            }
        }
    }

    void expire(const Waiter& w) {
        if (w.sender || kind_ != ObjectKind::MessageBuffer) {
            remove(waiters_, w.op);
        } else {
            remove(receivers_, w.op);
        }
        wake(w, E_TMOUT);
        if (kind_ == ObjectKind::Semaphore) grant_sem();
        if (kind_ == ObjectKind::MessageBuffer && w.sender) admit();
        if (kind_ == ObjectKind::VariablePool) grant_pool();
    }

    static void remove(std::list<Waiter>& q, std::size_t op) {
        q.remove_if([&](const Waiter& w) { return w.op == op; });
    }

    bool flag_ok(int action) const { return action == 3 ? (pattern_ & 0x3u) == 0x3u : (pattern_ & 0x1u) != 0; }

    void grant_sem() {
        while (!waiters_.empty()) {
            const Waiter w = waiters_.front();
            const int want = w.action == 1 ? 2 : 1;
            if (want > sem_) break;
            sem_ -= want;
            waiters_.pop_front();
            wake(w, E_OK);
        }
    }

    void admit() {
        while (!waiters_.empty()) {
            const Waiter s = waiters_.front();
            const std::string bytes = payload_.at(s.op);
            if (!receivers_.empty() && buffer_.empty()) {
                const Waiter r = receivers_.front();
                receivers_.pop_front();
                wake(r, E_OK, bytes);
            } else if (4 - used_ >= bytes.size()) {
                buffer_.push_back(bytes);
                used_ += bytes.size();
            } else {
                break;
            }
            waiters_.pop_front();
            wake(s, E_OK);
        }
    }

    std::optional<std::size_t> first_fit(std::size_t size) const {
        std::size_t run = 0;
        for (std::size_t u = 0; u < units_.size(); ++u) {
            run = units_[u] < 0 ? run + 1 : 0;
            // the run is a whole free hole only once it cannot grow further
            const bool closes = u + 1 == units_.size() || units_[u + 1] >= 0;
            if (closes && run >= size) return u + 1 - run;
        }
        return std::nullopt;
    }

    void take(std::size_t off, std::size_t size, int actor) {
        for (std::size_t u = off; u < off + size; ++u) units_[u] = actor;
        allocations_[off] = {size, actor};
        held_[static_cast<std::size_t>(actor)].push_back(off);
    }

    void grant_pool() {
        while (!waiters_.empty()) {
            const Waiter w = waiters_.front();
            const std::size_t size = w.action == 0 ? 3 : w.action == 1 ? 5 : 4;
            auto off = first_fit(size);
            if (!off) break;
            take(*off, size, w.actor);
            waiters_.pop_front();
            wake(w, E_OK, std::to_string(*off));
        }
    }

    std::string queue_text(const std::list<Waiter>& q) const {
        std::string s;
        for (const auto& w : q) s += std::to_string(w.actor);
        return s;
    }

    std::string state() const {
        std::ostringstream st;
        switch (kind_) {
            case ObjectKind::Semaphore: st << "count " << sem_ << " waiters " << queue_text(waiters_); break;
            case ObjectKind::EventFlag: st << "pattern " << hex(pattern_) << " waiters " << queue_text(waiters_); break;
            case ObjectKind::Mailbox:
                st << "queue";
                for (const auto& m : mailbox_) st << ' ' << m.second;
                st << " waiters " << queue_text(waiters_);
                break;
            case ObjectKind::MessageBuffer:
                st << "messages";
                for (const auto& m : buffer_) st << ' ' << m;
                st << " used " << used_ << " waiters " << queue_text(waiters_) << queue_text(receivers_);
                break;
            case ObjectKind::Mutex: st << "owner " << owner_ << " waiters " << queue_text(waiters_); break;
            case ObjectKind::FixedPool:
                st << "owners";
                for (int b : blocks_) st << ' ' << b;
                st << " waiters " << queue_text(waiters_);
                break;
            case ObjectKind::VariablePool:
                st << "allocated";
                for (const auto& [off, a] : allocations_) st << ' ' << off << '+' << a.first << ':' << a.second;
                st << " waiters " << queue_text(waiters_);
                break;
        }
        return st.str();
    }

    // A mutex owner runs at the best priority among itself and its waiters.
    int priority(int actor) const {
        int p = prio(actor);
        if (kind_ == ObjectKind::Mutex && owner_ == actor) {
            for (const auto& w : waiters_) p = std::min(p, prio(w.actor));
        }
        return p;
    }

    ObjectKind kind_;
    std::array<int, kActors> prio_;
    std::vector<Obs> obs_;
    std::size_t issued_ = 0;
    std::array<bool, kActors> blocked_{};
    std::list<Waiter> waiters_;    // senders for message buffers
    std::list<Waiter> receivers_;  // message buffers only
    std::array<std::vector<std::size_t>, kActors> held_;

    int sem_ = 1;
    std::uint32_t pattern_ = 0;
    std::list<std::pair<int, std::string>> mailbox_;
    std::list<std::string> buffer_;
    std::size_t used_ = 0;
    std::map<std::size_t, std::string> payload_;
    int owner_ = -1;
    std::array<int, 2> blocks_{-1, -1};
    std::array<int, 8> units_{-1, -1, -1, -1, -1, -1, -1, -1};
    std::map<std::size_t, std::pair<std::size_t, int>> allocations_;
};

}  // namespace

std::vector<ObjectKind> all_object_kinds() { return kinds(); }

std::string kind_name(ObjectKind k) {
    switch (k) {
        case ObjectKind::Semaphore: return "semaphore";
        case ObjectKind::EventFlag: return "event flag";
        case ObjectKind::Mailbox: return "mailbox";
        case ObjectKind::MessageBuffer: return "message buffer";
        case ObjectKind::Mutex: return "mutex";
        case ObjectKind::FixedPool: return "fixed pool";
        case ObjectKind::VariablePool: return "variable pool";
    }
    return "?";
}

OracleSummary run_object_oracle(ObjectKind kind, std::size_t max_ops) {
    OracleSummary sum;
    const int alphabet = static_cast<int>(actions(kind).size()) * kActors;
    const std::array<std::array<int, kActors>, 2> patterns{{{2, 2, 2}, {3, 2, 1}}};
    for (const auto& prio : patterns) {
        for (std::size_t len = 1; len <= max_ops; ++len) {
            std::vector<int> digits(len, 0);
            for (;;) {
                std::vector<Step> seq;
                for (int d : digits) seq.push_back({d % kActors, d / kActors});
                Result want;
                ObjectModel model(kind, prio);
                if (!model.run(seq, want)) {
                    ++sum.skipped;
                } else {
                    ++sum.sequences;
                    const Result got = run_system(kind, seq, prio);
                    if (!(got == want)) {
                        if (sum.mismatches++ == 0) {
                            std::ostringstream o;
                            o << "prio " << prio[0] << prio[1] << prio[2] << " ops";
                            for (const auto& s : seq) o << " A" << s.actor << ':' << actions(kind)[static_cast<std::size_t>(s.action)];
                            o << "\n    model " << describe(want) << "\n    kernel" << describe(got);
                            sum.first_mismatch = o.str();
                        }
                    }
                }
                std::size_t i = 0;
                while (i < len && ++digits[i] == alphabet) digits[i++] = 0;
                if (i == len) break;
            }
        }
    }
    return sum;
}

}  // namespace acc
