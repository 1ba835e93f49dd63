#include "doctest.h"
#include "rtk/kernel/kernel.hpp"

#include <algorithm>

using namespace rtk::kernel;
using rtk::ErrorCode;
using rtk::SimError;
using rtk::sim::Activity;
using rtk::sim::Annotation;
using rtk::sim::ContextKind;
using rtk::sim::Engine;
using rtk::sim::EventRecorder;
using rtk::sim::ThreadState;
using rtk::sim::TraceRecord;
using rtk::sim::TraceRecorder;

// Awaits a kernel service and stores its result; the call object is kept in a
// named local so nothing non-trivial is a temporary of the co_await.
#define SVC(out, expr)          \
    do {                        \
        auto call_ = (expr);    \
        out = co_await call_;   \
    } while (0)

namespace {

constexpr ThreadId kIdle = 99;

struct Mark {
    std::string what;
    Tick at;
    ER er;
    friend bool operator==(const Mark&, const Mark&) = default;
};

using Log = std::vector<Mark>;

KernelConfig idle_config() {
    KernelConfig c;
    c.idle_id = kIdle;
    return c;
}

struct KRig {
    Engine e;
    Kernel k;
    TraceRecorder trace;
    EventRecorder events;
    Log log;

    explicit KRig(std::size_t user_threads, KernelConfig cfg = idle_config())
        : e(user_threads + 2), k(e, std::move(cfg)) {
        e.attach_sinks(&trace, &events);
    }

    void run(Tick n) {
        for (Tick i = 0; i < n; ++i) {
            k.timer_tick();
            e.execute_tick();
        }
    }

    void mark(std::string what, ER er = E_OK) { log.push_back({std::move(what), e.now(), er}); }

    std::vector<TraceRecord> records_of(ThreadId id) const {
        std::vector<TraceRecord> out;
        for (const auto& r : trace.records()) {
            if (r.thread_id == id) out.push_back(r);
        }
        return out;
    }

    const Mark* find(std::string_view what) const {
        auto it = std::find_if(log.begin(), log.end(), [&](const Mark& m) { return m.what == what; });
        return it == log.end() ? nullptr : &*it;
    }
};

Annotation work(Tick n) { return {"work", n, {}}; }

// --- bodies ---------------------------------------------------------------------------

Activity sleeper_twice(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.slp_tsk(self));
    r.log.push_back({"sleep1", static_cast<Tick>(r.k.tcb(self).wakeup_count), er});
    SVC(er, r.k.slp_tsk(self));
    r.log.push_back({"sleep2", static_cast<Tick>(r.k.tcb(self).wakeup_count), er});
}

Activity waker_twice(KRig& r, ThreadId self, ThreadId target) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.wup_tsk(self, target));
    r.mark("wup1", er);
    SVC(er, r.k.wup_tsk(self, target));
    r.mark("wup2", er);
    r.log.push_back({"count", static_cast<Tick>(r.k.tcb(target).wakeup_count), E_OK});
}

Activity delayer(KRig& r, ThreadId self, Tick before, Tick delay) {
    co_await r.e.wait_run(self);
    const Annotation a = work(before);
    co_await r.e.wait(self, a);
    r.mark("delay");
    ER er;
    SVC(er, r.k.dly_tsk(self, delay));
    r.mark("woke", er);
    const Annotation b = work(1);
    co_await r.e.wait(self, b);
}

Activity worker(KRig& r, ThreadId self, Tick n) {
    co_await r.e.wait_run(self);
    const Annotation a = work(n);
    co_await r.e.wait(self, a);
    r.mark("done" + std::to_string(self));
}

Activity sem_waiter(KRig& r, ThreadId self, ID sem, int n, Timeout tmout) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.wai_sem(self, sem, n, tmout));
    r.mark("got" + std::to_string(self), er);
}

Activity sem_signaller(KRig& r, ThreadId self, ID sem, int times) {
    co_await r.e.wait_run(self);
    for (int i = 0; i < times; ++i) {
        ER er;
        SVC(er, r.k.sig_sem(self, sem, 1));
        r.mark("sig", er);
    }
}

Activity flag_waiter(KRig& r, ThreadId self, ID flg, std::uint32_t pattern, FlagMode mode, bool clear) {
    co_await r.e.wait_run(self);
    ER er;
    std::uint32_t seen = 0;
    SVC(er, r.k.wai_flg(self, flg, pattern, mode, clear, kForever, &seen));
    r.log.push_back({"flag" + std::to_string(self) + "=" + std::to_string(seen), r.e.now(), er});
}

Activity flag_setter(KRig& r, ThreadId self, ID flg, std::vector<std::uint32_t> sets) {
    co_await r.e.wait_run(self);
    for (auto p : sets) {
        ER er;
        SVC(er, r.k.set_flg(self, flg, p));
        r.mark("set" + std::to_string(p), er);
    }
}

Activity mbx_sender(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    Message a{5, "a"};
    Message b{1, "b"};
    Message c{3, "c"};
    SVC(er, r.k.snd_mbx(self, 1, a));
    SVC(er, r.k.snd_mbx(self, 1, b));
    SVC(er, r.k.dly_tsk(self, 10));
    SVC(er, r.k.snd_mbx(self, 1, c));
    r.mark("sent", er);
}

Activity mbx_receiver(KRig& r, ThreadId self, int count) {
    co_await r.e.wait_run(self);
    for (int i = 0; i < count; ++i) {
        ER er;
        Message m;
        SVC(er, r.k.rcv_mbx(self, 1, kForever, &m));
        r.mark("rcv:" + m.text, er);
    }
}

Activity mbf_sender(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.snd_mbf(self, 1, std::string(6, 'a')));
    r.mark("snd1", er);
    SVC(er, r.k.snd_mbf(self, 1, std::string(6, 'b')));
    r.mark("snd2", er);
    SVC(er, r.k.snd_mbf(self, 1, std::string(9, 'c')));
    r.mark("too-big", er);
}

Activity mbf_receiver(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    const Annotation a = work(3);
    co_await r.e.wait(self, a);
    for (int i = 0; i < 2; ++i) {
        ER er;
        std::string got;
        SVC(er, r.k.rcv_mbf(self, 1, kForever, &got));
        r.mark("rcv:" + got, er);
    }
}

Activity mutex_low(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.loc_mtx(self, 1));
    r.mark("low-locked", er);
    SVC(er, r.k.loc_mtx(self, 1));
    r.mark("relock", er);
    const Annotation a = work(10);
    co_await r.e.wait(self, a);
    SVC(er, r.k.unl_mtx(self, 1));
    r.mark("low-unlocked", er);
    const Annotation b = work(1);
    co_await r.e.wait(self, b);
}

Activity mutex_high(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.dly_tsk(self, 3));
    SVC(er, r.k.unl_mtx(self, 1));
    r.mark("foreign-unlock", er);
    SVC(er, r.k.loc_mtx(self, 1));
    r.mark("high-locked", er);
    SVC(er, r.k.unl_mtx(self, 1));
}

Activity pool_user(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    for (int i = 0; i < 4; ++i) {
        std::size_t block = 99;
        SVC(er, r.k.get_mpf(self, 1, kForever, &block));
        r.mark("mpf" + std::to_string(block), er);
    }
    SVC(er, r.k.get_mpf(self, 1, Timeout{5}));
    r.mark("mpf-5th", er);

    std::size_t off = 99;
    SVC(er, r.k.get_mpl(self, 2, 40, kForever, &off));
    r.mark("mpl" + std::to_string(off), er);
    const std::size_t first = off;
    SVC(er, r.k.get_mpl(self, 2, 40, kForever, &off));
    r.mark("mpl" + std::to_string(off), er);
    SVC(er, r.k.rel_mpl(self, 2, first));
    r.mark("rel", er);
    SVC(er, r.k.get_mpl(self, 2, 40, kForever, &off));
    r.mark("reuse" + std::to_string(off), er);
    SVC(er, r.k.get_mpl(self, 2, 200));
    r.mark("mpl-200", er);
}

Activity pool_thief(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.rel_mpf(self, 1, 0));
    r.mark("foreign-rel", er);
    SVC(er, r.k.rel_mpf(self, 1, 17));
    r.mark("bad-block", er);
}

Activity stamp_handler(KRig& r, ThreadId self, Tick etm) {
    co_await r.e.wait_run(self);
    r.mark("H" + std::to_string(self));
    const Annotation a{"h", etm, {}};
    co_await r.e.wait(self, a);
}

Activity waking_handler(KRig& r, ThreadId self, ThreadId target) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.slp_tsk(self));
    r.mark("h-slp", er);
    SVC(er, r.k.wup_tsk(self, target));
    r.mark("h-wup", er);
}

Activity plain_sleeper(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.slp_tsk(self));
    r.mark("awake", er);
    SVC(er, r.k.slp_tsk(self, Timeout{0}));
    r.mark("slp0", er);
    SVC(er, r.k.slp_tsk(self, Timeout{4}));
    r.mark("slp4", er);
}

Activity deleter(KRig& r, ThreadId self) {
    co_await r.e.wait_run(self);
    ER er;
    SVC(er, r.k.del_obj(self, ObjectClass::Semaphore, 1));
    r.mark("del", er);
    SVC(er, r.k.sig_sem(self, 1, 1));
    r.mark("sig-deleted", er);
}

// Registers a task running `make(self)` and autostarts it.
template <typename F>
void task(KRig& r, ThreadId id, Priority p, F make) {
    r.k.cre_tsk({id, "T" + std::to_string(id), p, 0, [make](ThreadId self) { return make(self); }});
    r.k.start_task(id);
}

}  // namespace

TEST_CASE("boot with no tasks gives every tick to idle") {
    KRig r(0);
    r.k.boot({});
    r.run(10);
    CHECK(r.e.thread(kIdle).token.cet == 10);
    CHECK_FALSE(r.e.contains(kInitThreadId));
    CHECK(r.e.check_all_created());
}

TEST_CASE("boot rejects more threads than declared and duplicate ids") {
    {
        KRig r(0);
        CHECK_THROWS_AS(r.k.boot([&](Kernel&) { task(r, 1, 5, [&](ThreadId s) { return worker(r, s, 1); }); }),
                        SimError);
    }
    {
        KRig r(2);
        try {
            r.k.boot([&](Kernel&) {
                task(r, 1, 5, [&](ThreadId s) { return worker(r, s, 1); });
                task(r, 1, 6, [&](ThreadId s) { return worker(r, s, 1); });
            });
            FAIL("expected a conflict");
        } catch (const SimError& e) {
            CHECK(e.code() == ErrorCode::Conflict);
        }
    }
}

TEST_CASE("queued wakeups drain one per sleep") {
    KRig r(2);
    r.k.boot([&](Kernel&) {
        task(r, 1, 5, [&](ThreadId s) { return sleeper_twice(r, s); });
        task(r, 2, 3, [&](ThreadId s) { return waker_twice(r, s, 1); });
    });
    r.run(10);
    const Log expected{{"wup1", 1, E_OK}, {"wup2", 2, E_OK}, {"count", 2, E_OK},
                       {"sleep1", 1, E_OK}, {"sleep2", 0, E_OK}};
    CHECK(r.log == expected);
    const auto& t = r.k.tcb(1);
    CHECK(t.wakeups_issued == t.sleeps_satisfied + t.wakeup_count);
    CHECK(t.sleeps_satisfied == 2);
}

TEST_CASE("delay lets the lower-priority task run exactly the delay window") {
    KRig r(2);
    r.k.boot([&](Kernel&) {
        task(r, 1, 3, [&](ThreadId s) { return delayer(r, s, 2, 5); });
        task(r, 2, 7, [&](ThreadId s) { return worker(r, s, 20); });
    });
    r.run(30);
    // SVC charge is one tick: the delay begins when the service completes.
    const Tick t = r.find("delay")->at + 1;
    CHECK(t == 3);
    CHECK(r.find("woke")->at == t + 5);
    const auto low = r.records_of(2);
    REQUIRE(!low.empty());
    CHECK(low[0].tick_start == t);
    CHECK(low[0].tick_end == t + 5);
    CHECK(r.k.timers().empty());
    CHECK(r.k.timers().stats().processed == 1);
}

TEST_CASE("semaphore: immediate take, priority release, handoff") {
    KRig r(3);
    r.k.boot([&](Kernel& k) {
        k.cre_sem(1, 0, 5);
        k.cre_sem(2, 3, 5);
        task(r, 1, 7, [&](ThreadId s) { return sem_waiter(r, s, 1, 1, kForever); });
        task(r, 2, 2, [&](ThreadId s) { return sem_waiter(r, s, 1, 1, kForever); });
        task(r, 3, 9, [&](ThreadId s) { return sem_signaller(r, s, 1, 1); });
    });
    r.run(3);
    CHECK(r.k.waiters(ObjectClass::Semaphore, 1) == std::vector<ThreadId>{2, 1});
    r.run(1);
    CHECK(r.find("got2")->at == 3);
    CHECK(r.find("got1") == nullptr);
    CHECK(r.k.waiters(ObjectClass::Semaphore, 1) == std::vector<ThreadId>{1});
    CHECK(r.k.semaphores().at(1).count == 0);
}

TEST_CASE("semaphore count 3 wait 1 leaves 2 without blocking") {
    KRig r(1);
    r.k.boot([&](Kernel& k) {
        k.cre_sem(2, 3, 5);
        task(r, 1, 5, [&](ThreadId s) { return sem_waiter(r, s, 2, 1, kForever); });
    });
    r.run(3);
    CHECK(r.find("got1")->at == 1);
    CHECK(r.k.semaphores().at(2).count == 2);
}

TEST_CASE("semaphore overflow and bad arguments") {
    KRig r(1);
    r.k.boot([&](Kernel& k) {
        k.cre_sem(1, 5, 5);
        task(r, 1, 5, [&](ThreadId s) { return sem_signaller(r, s, 1, 1); });
    });
    r.run(3);
    CHECK(r.find("sig")->er == E_QOVR);
    CHECK_THROWS_AS(r.k.cre_sem(2, 6, 5), SimError);
    CHECK_THROWS_AS(r.k.cre_sem(1, 0, 5), SimError);
}

TEST_CASE("semaphore wait times out") {
    KRig r(1);
    r.k.boot([&](Kernel& k) {
        k.cre_sem(1, 0, 1);
        task(r, 1, 5, [&](ThreadId s) { return sem_waiter(r, s, 1, 1, Timeout{5}); });
    });
    r.run(10);
    REQUIRE(r.find("got1"));
    CHECK(r.find("got1")->er == E_TMOUT);
    CHECK(r.find("got1")->at == 6);
    CHECK(r.k.waiters(ObjectClass::Semaphore, 1).empty());
}

TEST_CASE("deleting a semaphore releases waiters with E_DLT") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_sem(1, 0, 1);
        task(r, 1, 2, [&](ThreadId s) { return sem_waiter(r, s, 1, 1, kForever); });
        task(r, 2, 5, [&](ThreadId s) { return deleter(r, s); });
    });
    r.run(10);
    CHECK(r.find("got1")->er == E_DLT);
    CHECK(r.find("del")->er == E_OK);
    CHECK(r.find("sig-deleted")->er == E_NOEXS);
    CHECK(r.k.semaphores().empty());
}

TEST_CASE("event flag AND waits for every bit") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_flg(1, 0);
        task(r, 1, 2, [&](ThreadId s) { return flag_waiter(r, s, 1, 0b11, FlagMode::And, false); });
        task(r, 2, 5, [&](ThreadId s) { return flag_setter(r, s, 1, {0b01, 0b10}); });
    });
    r.run(2);
    CHECK(r.e.thread(1).state == ThreadState::Waiting);
    r.run(1);
    CHECK(r.find("set1") != nullptr);
    CHECK(r.e.thread(1).state == ThreadState::Waiting);
    r.run(5);
    REQUIRE(r.find("flag1=3"));
    CHECK(r.find("flag1=3")->at == 3);
}

TEST_CASE("event flag OR already satisfied returns at once") {
    KRig r(1);
    r.k.boot([&](Kernel& k) {
        k.cre_flg(1, 0b100);
        task(r, 1, 2, [&](ThreadId s) { return flag_waiter(r, s, 1, 0b110, FlagMode::Or, false); });
    });
    r.run(3);
    REQUIRE(r.find("flag1=4"));
    CHECK(r.find("flag1=4")->at == 1);
}

TEST_CASE("event flag clear by the first waiter keeps the second blocked") {
    KRig r(3);
    r.k.boot([&](Kernel& k) {
        k.cre_flg(1, 0);
        task(r, 1, 2, [&](ThreadId s) { return flag_waiter(r, s, 1, 0b1, FlagMode::Or, true); });
        task(r, 2, 3, [&](ThreadId s) { return flag_waiter(r, s, 1, 0b1, FlagMode::Or, false); });
        task(r, 3, 5, [&](ThreadId s) { return flag_setter(r, s, 1, {0b1}); });
    });
    r.run(10);
    CHECK(r.find("flag1=1") != nullptr);
    CHECK(r.find("flag2=1") == nullptr);
    CHECK(r.k.waiters(ObjectClass::EventFlag, 1) == std::vector<ThreadId>{2});
    CHECK(r.k.event_flags().at(1).pattern == 0);
}

TEST_CASE("mailbox delivers by priority, then hands off to a waiting receiver") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_mbx(1);
        task(r, 1, 2, [&](ThreadId s) { return mbx_sender(r, s); });
        task(r, 2, 5, [&](ThreadId s) { return mbx_receiver(r, s, 3); });
    });
    r.run(20);
    std::vector<std::string> order;
    for (const auto& m : r.log) {
        if (m.what.starts_with("rcv:")) order.push_back(m.what.substr(4));
    }
    CHECK(order == std::vector<std::string>{"b", "a", "c"});
    CHECK(r.find("rcv:c")->at == 14);
}

TEST_CASE("message buffer sender blocks until bytes are read") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_mbf(1, 8, 8);
        task(r, 1, 3, [&](ThreadId s) { return mbf_sender(r, s); });
        task(r, 2, 5, [&](ThreadId s) { return mbf_receiver(r, s); });
    });
    r.run(3);
    CHECK(r.k.message_buffers().at(1).used == 6);
    CHECK(r.k.waiters(ObjectClass::MessageBuffer, 1) == std::vector<ThreadId>{1});
    r.run(10);
    CHECK(r.find("snd1")->at == 1);
    CHECK(r.find("snd2")->at == 6);
    CHECK(r.find("rcv:aaaaaa")->at == 6);
    CHECK(r.find("too-big")->er == E_PAR);
    CHECK(r.find("rcv:bbbbbb") != nullptr);
    CHECK(r.k.message_buffers().at(1).used == 0);
}

TEST_CASE("mutex inheritance raises the owner while contested") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_mtx(1);
        task(r, 1, 7, [&](ThreadId s) { return mutex_low(r, s); });
        task(r, 2, 2, [&](ThreadId s) { return mutex_high(r, s); });
    });
    r.run(4);
    CHECK(r.e.thread(1).current_priority == 7);
    r.run(4);
    CHECK(r.e.thread(1).current_priority == 2);
    CHECK(r.k.mutexes().at(1).owner == ThreadId{1});
    r.run(20);
    CHECK(r.find("relock")->er == E_ILUSE);
    CHECK(r.find("foreign-unlock")->er == E_ILUSE);
    CHECK(r.find("high-locked")->er == E_OK);
    CHECK(r.find("high-locked")->at == r.find("low-unlocked")->at);
    CHECK(r.e.thread(1).current_priority == 7);
    CHECK_FALSE(r.k.mutexes().at(1).owner.has_value());
}

TEST_CASE("fixed and variable pools") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_mpf(1, 32, 4);
        k.cre_mpl(2, 100);
        task(r, 1, 3, [&](ThreadId s) { return pool_user(r, s); });
        task(r, 2, 5, [&](ThreadId s) { return pool_thief(r, s); });
    });
    r.run(40);
    for (int b = 0; b < 4; ++b) CHECK(r.find("mpf" + std::to_string(b))->er == E_OK);
    CHECK(r.find("mpf-5th")->er == E_TMOUT);
    CHECK(r.find("foreign-rel")->er == E_ILUSE);
    CHECK(r.find("bad-block")->er == E_PAR);
    CHECK(r.find("mpl0") != nullptr);
    CHECK(r.find("mpl40") != nullptr);
    CHECK(r.find("reuse0")->er == E_OK);
    CHECK(r.find("mpl-200")->er == E_PAR);
    CHECK(r.k.fixed_pools().at(1).high_water == 4);
    CHECK(r.k.variable_pools().at(2).high_water == 80);
}

TEST_CASE("cyclic default phase is one period") {
    KRig r(1);
    r.k.boot([&](Kernel& k) { k.cre_cyc({10, "H1", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 10); });
    r.run(35);
    std::vector<Tick> at;
    for (const auto& m : r.log) at.push_back(m.at);
    CHECK(at == std::vector<Tick>{10, 20, 30});
    CHECK(r.k.handlers().at(10).activations == 3);
}

TEST_CASE("cyclic with phase fires on the arithmetic progression") {
    KRig r(1);
    r.k.boot([&](Kernel& k) { k.cre_cyc({10, "H1", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 10, 3); });
    r.run(40);
    std::vector<Tick> at;
    for (const auto& m : r.log) at.push_back(m.at);
    CHECK(at == std::vector<Tick>{3, 13, 23, 33});
}

TEST_CASE("cyclic activation count law") {
    const auto expected = [](Tick t, Tick p, Tick phi) -> Tick { return t > phi ? (t - phi + p - 1) / p : 0; };
    for (Tick p : {1, 3, 7}) {
        for (Tick phi : {0, 2, 5}) {
            for (Tick t : {0, 4, 17, 30}) {
                KRig r(1);
                r.k.boot([&](Kernel& k) {
                    k.cre_cyc({10, "H", [&](ThreadId s) { return stamp_handler(r, s, 0); }}, p, phi);
                });
                r.run(t);
                CAPTURE(p);
                CAPTURE(phi);
                CAPTURE(t);
                CHECK(r.k.handlers().at(10).activations == expected(t, p, phi));
            }
        }
    }
}

TEST_CASE("alarm fires once at its offset") {
    KRig r(1);
    r.k.boot([&](Kernel& k) { k.cre_alm({20, "H2", [&](ThreadId s) { return stamp_handler(r, s, 2); }}, 50); });
    r.run(100);
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].at == 50);
    CHECK(r.k.handlers().at(20).activations == 1);
}

TEST_CASE("interrupt enters the handler at the asserted tick and resumes the task") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.def_int({30, "ISR", [&](ThreadId s) { return stamp_handler(r, s, 2); }}, 0);
        task(r, 1, 5, [&](ThreadId s) { return worker(r, s, 20); });
    });
    for (Tick i = 0; i < 30; ++i) {
        r.k.timer_tick();
        if (r.e.now() == 7) r.k.raise_irq(0);
        r.e.execute_tick();
    }
    CHECK(r.find("H30")->at == 7);
    const auto task_records = r.records_of(1);
    REQUIRE(task_records.size() >= 2);
    CHECK(task_records[0].tick_end == 7);
    CHECK(task_records[1].tick_start == 9);
    CHECK(task_records[1].event == rtk::sim::EventKind::ReturnFromInterrupt);
    CHECK(r.find("done1")->at == 22);
    CHECK_THROWS_AS(r.k.raise_irq(3), SimError);
}

TEST_CASE("handler services: sleep is refused, wakeup works") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        task(r, 1, 5, [&](ThreadId s) { return plain_sleeper(r, s); });
        k.cre_cyc({10, "H", [&](ThreadId s) { return waking_handler(r, s, 1); }}, 100, 5);
    });
    r.run(20);
    CHECK(r.find("h-slp")->er == E_CTX);
    CHECK(r.find("h-wup")->er == E_OK);
    CHECK(r.find("awake")->at == 7);
    CHECK(r.find("slp0")->er == E_PAR);
    CHECK(r.find("slp4")->er == E_TMOUT);
    CHECK(r.find("slp4")->at == r.find("slp0")->at + 5);
}

TEST_CASE("creation validation") {
    KRig r(3);
    r.k.boot([&](Kernel& k) {
        CHECK_THROWS_AS(k.cre_cyc({10, "H", {}}, 0), SimError);
        k.def_int({11, "I", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 1);
        try {
            k.def_int({12, "J", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 1);
            FAIL("expected a conflict");
        } catch (const SimError& e) {
            CHECK(e.code() == ErrorCode::Conflict);
        }
        k.cre_alm({12, "J", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 5);
        k.cre_cyc({10, "H", [&](ThreadId s) { return stamp_handler(r, s, 1); }}, 4);
        CHECK_THROWS_AS(k.cre_mbf(1, 4, 8), SimError);
        CHECK_THROWS_AS(k.cre_mpl(1, 0), SimError);
        CHECK_THROWS_AS(k.cre_tsk({1, "X", 141, 0, {}}), SimError);
    });
    CHECK_THROWS_AS(r.k.def_int({13, "K", {}}, 9), SimError);
}

TEST_CASE("run-time split matches the trace contexts") {
    KRig r(2);
    r.k.boot([&](Kernel& k) {
        k.cre_mtx(1);
        task(r, 1, 7, [&](ThreadId s) { return mutex_low(r, s); });
        task(r, 2, 2, [&](ThreadId s) { return mutex_high(r, s); });
    });
    r.run(40);
    for (ThreadId id : {1u, 2u}) {
        const auto& info = r.e.thread(id);
        Tick svc = 0;
        Tick user = 0;
        for (const auto& rec : r.records_of(id)) {
            (rec.context == ContextKind::Svc ? svc : user) += rec.tick_end - rec.tick_start;
        }
        CHECK(r.k.sys_run_time(id) == svc);
        CHECK(r.k.user_run_time(id) == user);
        CHECK(r.k.sys_run_time(id) + r.k.user_run_time(id) == info.token.cet);
    }
}
