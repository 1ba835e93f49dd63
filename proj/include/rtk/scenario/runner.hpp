#pragma once

#include "rtk/scenario/scenario.hpp"

#include <memory>

namespace rtk::scenario {

struct CallResult {
    Tick tick = 0;  // completion instant
    ThreadId thread = 0;
    std::string service;
    kernel::ER er = kernel::E_OK;
    friend bool operator==(const CallResult&, const CallResult&) = default;
};

struct BlockedThread {
    ThreadId id = 0;
    std::string name;
    std::string waiting_on;  // e.g. "semaphore 1"
};

struct RunSummary {
    Tick ticks = 0;
    bool deadlock = false;
    std::vector<BlockedThread> blocked;
    double wall_seconds = 0;
    double ticks_per_second = 0;
};

std::string describe_deadlock(Tick at, const std::vector<BlockedThread>& blocked);

/// One scenario bound to an engine, kernel and BFM. Free-run and step mode
/// both advance through step(), so their traces are identical by construction.
class Simulation {
public:
    explicit Simulation(Scenario s);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Extra sinks, fed alongside the built-in recorders. Attach before boot().
    void add_trace_sink(sim::TraceSink& sink);
    void add_event_sink(sim::EventSink& sink);

    /// Creates objects, devices and threads at instant 0. Throws SimError on
    /// configuration problems.
    void boot();
    bool booted() const noexcept { return booted_; }

    /// One system tick. Returns false once run_ticks is reached or a deadlock
    /// was found.
    bool step();
    bool done() const noexcept;
    /// Steps until run_ticks (or deadlock), then closes the trace.
    RunSummary run();
    /// Closes the open trace segment. Idempotent.
    void finish();

    Tick now() const;
    Tick until() const noexcept { return scenario_.run_ticks; }
    bool deadlocked() const noexcept { return !blocked_.empty(); }
    const std::vector<BlockedThread>& blocked() const noexcept { return blocked_; }

    const Scenario& scenario() const noexcept { return scenario_; }
    sim::Engine& engine() noexcept { return *engine_; }
    const sim::Engine& engine() const noexcept { return *engine_; }
    kernel::Kernel& kernel() noexcept { return *kernel_; }
    const kernel::Kernel& kernel() const noexcept { return *kernel_; }
    bfm::Bfm& bfm() noexcept { return *bfm_; }
    const bfm::Bfm& bfm() const noexcept { return *bfm_; }

    const std::vector<sim::TraceRecord>& records() const noexcept { return trace_.records(); }
    const std::vector<sim::KernelEvent>& events() const noexcept { return events_.events(); }
    const std::vector<CallResult>& calls() const noexcept { return calls_; }

private:
    sim::Activity body(ThreadId self, const Program* program);
    sim::Co<> exec(ThreadId self, const Program* program);
    sim::Co<kernel::ER> invoke(ThreadId self, const Call* call);
    void check_deadlock();

    Scenario scenario_;
    std::unique_ptr<sim::Engine> engine_;
    std::unique_ptr<kernel::Kernel> kernel_;
    std::unique_ptr<bfm::Bfm> bfm_;
    sim::TraceRecorder trace_;
    sim::EventRecorder events_;
    sim::TraceTee trace_tee_;
    sim::EventTee event_tee_;
    bool booted_ = false;
    bool finished_ = false;
    std::vector<BlockedThread> blocked_;
    std::vector<CallResult> calls_;
    // Blocks and offsets a thread holds, per pool, released LIFO.
    std::map<std::pair<ThreadId, ID>, std::vector<std::size_t>> fixed_held_;
    std::map<std::pair<ThreadId, ID>, std::vector<std::size_t>> variable_held_;
};

}  // namespace rtk::scenario
