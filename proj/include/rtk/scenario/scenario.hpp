#pragma once

#include "rtk/bfm/bfm.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtk::scenario {

using bfm::DeviceSpec;
using bfm::Stimulus;
using kernel::ID;
using kernel::Timeout;
using sim::Energy;
using sim::Priority;
using sim::ThreadId;
using sim::Tick;

/// Arguments of one kernel service call. Only the keys the service takes are
/// read or written; the rest keep their defaults.
struct Call {
    std::string service;
    ID id = 0;  // object id, or target task for sta/ter/wup
    int count = 1;
    std::uint32_t pattern = 0;
    kernel::FlagMode mode = kernel::FlagMode::And;
    bool clear = false;
    Timeout tmout;  // empty: forever
    Tick ticks = 0;
    std::size_t size = 0;
    std::string text;
    int priority = 1;
    kernel::ObjectClass cls = kernel::ObjectClass::Semaphore;

    friend bool operator==(const Call&, const Call&) = default;
};

struct Statement {
    enum class Kind : std::uint8_t { Compute, Call, Bfm, Loop };

    Kind kind = Kind::Compute;
    std::string label;  // compute
    Call call;
    // bfm
    std::string device;
    std::string access;
    std::uint64_t address = 0;
    std::string data;  // hex
    std::size_t length = 0;
    // loop
    std::optional<std::uint64_t> count;  // empty: forever
    std::vector<Statement> body;

    int line = 0;  // source line, not part of equality

    friend bool operator==(const Statement& a, const Statement& b) {
        return a.kind == b.kind && a.label == b.label && a.call == b.call && a.device == b.device &&
               a.access == b.access && a.address == b.address && a.data == b.data && a.length == b.length &&
               a.count == b.count && a.body == b.body;
    }
};

using Program = std::vector<Statement>;

struct TaskDecl {
    ThreadId id = 0;
    std::string name;
    Priority priority = sim::kLowestPriority;
    std::uint32_t exinf = 0;
    bool autostart = true;
    Program program;
    friend bool operator==(const TaskDecl&, const TaskDecl&) = default;
};

enum class HandlerKind : std::uint8_t { Cyclic, Alarm, Isr };

std::string_view to_string(HandlerKind k) noexcept;

struct HandlerDecl {
    ThreadId id = 0;
    std::string name;
    HandlerKind kind = HandlerKind::Cyclic;
    Tick period = 0;             // cyclic
    std::optional<Tick> phase;   // cyclic; empty means one period
    Tick offset = 0;             // alarm
    std::uint32_t line = 0;      // isr
    Program program;
    friend bool operator==(const HandlerDecl&, const HandlerDecl&) = default;
};

struct SemaphoreDecl {
    ID id = 0;
    int initial = 0;
    int max = 1;
    std::uint32_t exinf = 0;
    friend bool operator==(const SemaphoreDecl&, const SemaphoreDecl&) = default;
};

struct EventFlagDecl {
    ID id = 0;
    std::uint32_t initial = 0;
    std::uint32_t exinf = 0;
    friend bool operator==(const EventFlagDecl&, const EventFlagDecl&) = default;
};

struct SimpleDecl {  // mailboxes and mutexes
    ID id = 0;
    std::uint32_t exinf = 0;
    friend bool operator==(const SimpleDecl&, const SimpleDecl&) = default;
};

struct MessageBufferDecl {
    ID id = 0;
    std::size_t capacity = 0;
    std::size_t max_message = 0;
    std::uint32_t exinf = 0;
    friend bool operator==(const MessageBufferDecl&, const MessageBufferDecl&) = default;
};

struct FixedPoolDecl {
    ID id = 0;
    std::size_t block_size = 0;
    std::size_t blocks = 0;
    std::uint32_t exinf = 0;
    friend bool operator==(const FixedPoolDecl&, const FixedPoolDecl&) = default;
};

struct VariablePoolDecl {
    ID id = 0;
    std::size_t size = 0;
    std::uint32_t exinf = 0;
    friend bool operator==(const VariablePoolDecl&, const VariablePoolDecl&) = default;
};

struct Objects {
    std::vector<SemaphoreDecl> semaphores;
    std::vector<EventFlagDecl> event_flags;
    std::vector<SimpleDecl> mailboxes;
    std::vector<MessageBufferDecl> message_buffers;
    std::vector<SimpleDecl> mutexes;
    std::vector<FixedPoolDecl> fixed_pools;
    std::vector<VariablePoolDecl> variable_pools;
    friend bool operator==(const Objects&, const Objects&) = default;
};

struct Scenario {
    std::string name = "scenario";
    std::uint32_t tick_us = sim::kDefaultTickUs;
    std::uint64_t cycles_per_tick = bfm::kDefaultCyclesPerTick;
    Tick run_ticks = 1;
    double battery_wh = 10.0;
    sim::Annotation svc{"svc", 1, {}};
    std::map<std::string, sim::Annotation> svc_overrides;
    std::optional<ThreadId> idle_id;  // empty: one above the largest declared id
    std::string idle_name = "IDLE";
    Energy idle_energy_per_tick;
    std::map<std::string, sim::Annotation> annotations;
    std::vector<DeviceSpec> devices;
    Objects objects;
    std::vector<TaskDecl> tasks;
    std::vector<HandlerDecl> handlers;
    std::vector<Stimulus> stimuli;
    friend bool operator==(const Scenario&, const Scenario&) = default;

    ThreadId resolved_idle_id() const;
};

struct Diagnostic {
    int line = 0;  // 1-based, 0 when unknown
    std::string message;
};

/// Every problem found in a scenario, each with its source line.
class ScenarioError : public SimError {
public:
    ScenarioError(std::string source, std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// `source` names the text in diagnostics.
Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>");
Scenario load_scenario(const std::string& path);
std::string serialize(const Scenario& s);

/// Reference checks on an already built scenario (parse_scenario runs them too).
std::vector<Diagnostic> validate(const Scenario& s);

/// The bundled case study.
std::string_view demo_scenario_text();
Scenario demo_scenario();

}  // namespace rtk::scenario
