#include "rtk/debug/ds.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <map>
#include <sstream>

namespace rtk::debug {

using kernel::ObjectClass;

namespace {

constexpr std::string_view kTitle = "Debug Support (DS)";
constexpr std::string_view kSeparator = "[*****]";
constexpr std::string_view kWaitDisabled = "Wait Disabled Released ...";

struct Section {
    ObjectClass cls;
    std::string_view title;   // "(Semaphore Statistics)"
    std::string_view plural;  // "No. of Allocated Semaphores"
    std::string_view entity;  // "Semaphore" -> "Semaphore ID", "Semaphore Extended Information"
};

constexpr std::array kSections{
    Section{ObjectClass::Semaphore, "Semaphore Statistics", "Semaphores", "Semaphore"},
    Section{ObjectClass::EventFlag, "Event Flag Statistics", "Event Flags", "Event Flag"},
    Section{ObjectClass::Mutex, "Mutex Statistics", "Mutexes", "Mutex"},
    Section{ObjectClass::Mailbox, "Mailbox Statistics", "Mailboxes", "Mailbox"},
    Section{ObjectClass::MessageBuffer, "Message Buffer Statistics", "Message Buffers", "Message Buffer"},
    Section{ObjectClass::FixedPool, "Fixed Memory Pool Statistics", "Fixed Memory Pools", "Fixed Memory Pool"},
    Section{ObjectClass::VariablePool, "Variable Memory Pool Statistics", "Variable Memory Pools",
            "Variable Memory Pool"},
};

const Section& section_of(ObjectClass cls) {
    return *std::find_if(kSections.begin(), kSections.end(), [cls](const Section& s) { return s.cls == cls; });
}

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::DataIntegrity, "DS listing: " + what); }

std::string hex32(std::uint32_t v) {
    std::ostringstream o;
    o << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
    return o.str();
}

std::string id_list(const std::vector<ThreadId>& ids) {
    if (ids.empty()) return "none";
    std::string out;
    for (auto id : ids) {
        if (!out.empty()) out += ',';
        out += std::to_string(id);
    }
    return out;
}

class Writer {
public:
    void line(std::string_view text, int indent = 0) { out_ << std::string(indent, ' ') << text << '\n'; }

    template <typename T>
    void header(std::string_view label, const T& value, int indent = 0) {
        out_ << std::string(indent, ' ') << label << " : " << value << '\n';
    }

    // Task fields align the '=' at column 31 of the label, object fields at 30.
    template <typename T>
    void field(std::string_view label, const T& value, bool object) {
        const std::size_t width = object ? 30 : 31;
        out_ << (object ? "    > " : "  > ") << label
             << std::string(label.size() < width ? width - label.size() : 1, ' ') << "= " << value << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

bool whole_ms(std::uint32_t tick_us) { return tick_us % 1000 == 0; }

Tick to_unit(Tick ticks, std::uint32_t tick_us) { return whole_ms(tick_us) ? ticks * (tick_us / 1000) : ticks; }

Tick from_unit(Tick v, std::uint32_t tick_us) {
    if (!whole_ms(tick_us)) return v;
    const Tick per = tick_us / 1000;
    if (v % per != 0) corrupt("run time " + std::to_string(v) + " ms is not a whole number of ticks");
    return v / per;
}

// --- parsing helpers -----------------------------------------------------------------

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T to_number(std::string_view s, std::string_view what) {
    T v{};
    int base = 10;
    if (s.starts_with("0x")) {
        s.remove_prefix(2);
        base = 16;
    }
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        corrupt("bad number \"" + std::string(s) + "\" for " + std::string(what));
    }
    return v;
}

std::vector<ThreadId> to_ids(std::string_view s, std::string_view what) {
    std::vector<ThreadId> out;
    if (s == "none") return out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        out.push_back(to_number<ThreadId>(s.substr(0, comma), what));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

struct Entry {
    std::uint64_t id = 0;
    std::map<std::string, std::string, std::less<>> fields;

    const std::string& get(std::string_view key) const {
        auto it = fields.find(key);
        if (it == fields.end()) corrupt("entry " + std::to_string(id) + " lacks \"" + std::string(key) + "\"");
        return it->second;
    }
    template <typename T>
    T num(std::string_view key) const {
        return to_number<T>(get(key), key);
    }
    std::vector<ThreadId> ids(std::string_view key) const { return to_ids(get(key), key); }
};

struct Block {
    std::size_t declared = 0;
    std::vector<Entry> entries;
};

}  // namespace

// --- reference functions -------------------------------------------------------------

TaskRecord ref_task(const kernel::Kernel& k, ThreadId id) {
    const auto& t = k.tcb(id);
    const auto& info = k.engine().thread(id);
    TaskRecord r;
    r.id = id;
    r.exinf = t.exinf;
    r.current_priority = info.current_priority;
    r.base_priority = info.base_priority;
    r.state = info.state;
    r.wakeup_count = t.wakeup_count;
    r.suspend_count = t.suspend_count;
    r.max_continuous_run = info.stats.max_continuous_run;
    r.sys_run_time = k.sys_run_time(id);
    r.user_run_time = k.user_run_time(id);
    return r;
}

namespace {

template <typename Map>
const auto& lookup(const Map& m, ObjectClass cls, ID id) {
    auto it = m.find(id);
    if (it == m.end()) fail(ErrorCode::NotFound, std::string(to_string(cls)) + " " + std::to_string(id) + " does not exist");
    return it->second;
}

}  // namespace

ObjectRecord ref_object(const kernel::Kernel& k, ObjectClass cls, ID id) {
    switch (cls) {
        case ObjectClass::Semaphore: {
            const auto& s = lookup(k.semaphores(), cls, id);
            return SemaphoreRecord{id, s.exinf, s.count, s.max_count, k.waiters(cls, id)};
        }
        case ObjectClass::EventFlag: {
            const auto& f = lookup(k.event_flags(), cls, id);
            return EventFlagRecord{id, f.exinf, f.pattern, k.waiters(cls, id)};
        }
        case ObjectClass::Mutex: {
            const auto& m = lookup(k.mutexes(), cls, id);
            return MutexRecord{id, m.exinf, m.owner, k.waiters(cls, id)};
        }
        case ObjectClass::Mailbox: {
            const auto& m = lookup(k.mailboxes(), cls, id);
            return MailboxRecord{id, m.exinf, m.queue.size(), k.waiters(cls, id)};
        }
        case ObjectClass::MessageBuffer: {
            const auto& b = lookup(k.message_buffers(), cls, id);
            const auto prio = [&k](ThreadId t) { return k.engine().thread(t).current_priority; };
            return MessageBufferRecord{id,     b.exinf,           b.capacity, b.max_message, b.used, b.messages.size(),
                                       b.senders.ordered(prio), b.receivers.ordered(prio)};
        }
        case ObjectClass::FixedPool: {
            const auto& p = lookup(k.fixed_pools(), cls, id);
            return FixedPoolRecord{id, p.exinf, p.block_size, p.owners.size(), p.in_use, p.high_water, k.waiters(cls, id)};
        }
        case ObjectClass::VariablePool: {
            const auto& p = lookup(k.variable_pools(), cls, id);
            return VariablePoolRecord{id,           p.exinf, p.total, p.used, p.high_water, p.free_list.size(),
                                      k.waiters(cls, id)};
        }
    }
    fail(ErrorCode::NotFound, "unknown object class");
}

DsSnapshot take_snapshot(const kernel::Kernel& k) {
    DsSnapshot s;
    s.tick = k.engine().now();
    s.tick_us = k.engine().tick_us();
    for (const auto& [id, t] : k.tasks()) s.tasks.push_back(ref_task(k, id));
    const auto collect = [&k](const auto& map, ObjectClass cls, auto& out) {
        using R = typename std::decay_t<decltype(out)>::value_type;
        for (const auto& [id, obj] : map) out.push_back(std::get<R>(ref_object(k, cls, id)));
    };
    collect(k.semaphores(), ObjectClass::Semaphore, s.semaphores);
    collect(k.event_flags(), ObjectClass::EventFlag, s.event_flags);
    collect(k.mutexes(), ObjectClass::Mutex, s.mutexes);
    collect(k.mailboxes(), ObjectClass::Mailbox, s.mailboxes);
    collect(k.message_buffers(), ObjectClass::MessageBuffer, s.message_buffers);
    collect(k.fixed_pools(), ObjectClass::FixedPool, s.fixed_pools);
    collect(k.variable_pools(), ObjectClass::VariablePool, s.variable_pools);
    return s;
}

// --- listing -------------------------------------------------------------------------------

std::string dump_listing(const DsSnapshot& s) {
    Writer w;
    const std::string unit = whole_ms(s.tick_us) ? "(ms)" : "(ticks)";
    w.line(kTitle);
    w.header("Snapshot Tick", s.tick);
    w.header("Tick Length (us)", s.tick_us);
    w.header("No. of Tasks", s.tasks.size());
    std::size_t n = 0;
    for (const auto& t : s.tasks) {
        w.line(std::to_string(++n) + ". Task ID : " + std::to_string(t.id));
        w.field("Task Extended Information", hex32(t.exinf), false);
        w.field("Current Priority", t.current_priority, false);
        w.field("Base Priority", t.base_priority, false);
        w.field("Task State", sim::state_code(t.state), false);
        w.line(std::string("> ") + std::string(kWaitDisabled), 2);
        w.field("Queued Wakeup Request Count", t.wakeup_count, false);
        w.field("Suspend Request Nesting Count", t.suspend_count, false);
        w.field("Max. Continuous Run Time " + unit, to_unit(t.max_continuous_run, s.tick_us), false);
        w.field("Raised Task Event", 0, false);
        w.field("Cumulative System Level Run Time " + unit, to_unit(t.sys_run_time, s.tick_us), false);
        w.field("Cumulative User Level Run Time " + unit, to_unit(t.user_run_time, s.tick_us), false);
    }
    w.line(kSeparator, 2);

    const auto section = [&w](ObjectClass cls, const auto& records, auto&& body) {
        const auto& sec = section_of(cls);
        w.line("(" + std::string(sec.title) + ")", 2);
        w.header("No. of Allocated " + std::string(sec.plural), records.size(), 2);
        std::size_t i = 0;
        for (const auto& r : records) {
            w.line(std::to_string(++i) + ". " + std::string(sec.entity) + " ID : " + std::to_string(r.id), 2);
            w.field(std::string(sec.entity) + " Extended Information", hex32(r.exinf), true);
            body(r);
        }
        w.line(kSeparator, 2);
    };
    section(ObjectClass::Semaphore, s.semaphores, [&](const SemaphoreRecord& r) {
        w.field("Current Semaphore Count", r.count, true);
        w.field("Maximum Semaphore Count", r.max_count, true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    section(ObjectClass::EventFlag, s.event_flags, [&](const EventFlagRecord& r) {
        w.field("Current Flag Pattern", hex32(r.pattern), true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    section(ObjectClass::Mutex, s.mutexes, [&](const MutexRecord& r) {
        w.field("Owner Task", r.owner ? std::to_string(*r.owner) : std::string("none"), true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    section(ObjectClass::Mailbox, s.mailboxes, [&](const MailboxRecord& r) {
        w.field("Queued Messages", r.queued, true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    section(ObjectClass::MessageBuffer, s.message_buffers, [&](const MessageBufferRecord& r) {
        w.field("Buffer Size (bytes)", r.capacity, true);
        w.field("Max. Message Size (bytes)", r.max_message, true);
        w.field("Used Bytes", r.used, true);
        w.field("Queued Messages", r.queued, true);
        w.field("Waiting Senders", id_list(r.senders), true);
        w.field("Waiting Receivers", id_list(r.receivers), true);
    });
    section(ObjectClass::FixedPool, s.fixed_pools, [&](const FixedPoolRecord& r) {
        w.field("Block Size (bytes)", r.block_size, true);
        w.field("Total Blocks", r.block_count, true);
        w.field("Blocks In Use", r.in_use, true);
        w.field("High Water Mark", r.high_water, true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    section(ObjectClass::VariablePool, s.variable_pools, [&](const VariablePoolRecord& r) {
        w.field("Pool Size (bytes)", r.total, true);
        w.field("Bytes In Use", r.used, true);
        w.field("High Water Mark", r.high_water, true);
        w.field("Free Segments", r.free_segments, true);
        w.field("Waiting Tasks", id_list(r.waiters), true);
    });
    return w.str();
}

DsSnapshot parse_listing(std::string_view text) {
    DsSnapshot s;
    std::map<std::string, std::string, std::less<>> header;
    Block tasks;
    std::map<ObjectClass, Block> objects;
    Block* current = nullptr;
    std::optional<ObjectClass> current_class;
    bool titled = false;
    std::size_t line_no = 0;

    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view raw = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        const std::string_view line = trim(raw);
        const std::string at = " (line " + std::to_string(line_no) + ")";
        if (line.empty() || line == kSeparator) continue;
        if (!titled) {
            if (line != kTitle) corrupt("missing title" + at);
            titled = true;
            continue;
        }
        if (line.starts_with("> ")) {
            const auto body = line.substr(2);
            if (body == kWaitDisabled) continue;
            const auto eq = body.find('=');
            if (eq == std::string_view::npos || !current || current->entries.empty()) corrupt("stray field" + at);
            current->entries.back().fields.emplace(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
            continue;
        }
        if (line.starts_with('(') && line.ends_with(')')) {
            const auto title = line.substr(1, line.size() - 2);
            auto sec = std::find_if(kSections.begin(), kSections.end(), [&](const Section& x) { return x.title == title; });
            if (sec == kSections.end()) corrupt("unknown section " + std::string(line) + at);
            current_class = sec->cls;
            current = &objects[sec->cls];
            continue;
        }
        const auto colon = line.find(" : ");
        if (colon == std::string_view::npos) corrupt("unrecognised line \"" + std::string(line) + "\"" + at);
        const auto key = line.substr(0, colon);
        const auto value = line.substr(colon + 3);
        if (key.starts_with("No. of ")) {
            const auto n = to_number<std::size_t>(value, key);
            if (key == "No. of Tasks") {
                current = &tasks;
            } else if (!current_class || key != "No. of Allocated " + std::string(section_of(*current_class).plural)) {
                corrupt("count line out of place" + at);
            }
            current->declared = n;
            continue;
        }
        const auto dot = key.find(". ");
        if (dot != std::string_view::npos && key.ends_with(" ID")) {
            const auto entity = key.substr(dot + 2, key.size() - dot - 5);
            const bool is_task = entity == "Task";
            if (is_task ? current != &tasks : (!current_class || entity != section_of(*current_class).entity)) {
                corrupt("entry out of place" + at);
            }
            current->entries.push_back({to_number<std::uint64_t>(value, key), {}});
            continue;
        }
        header.emplace(std::string(key), std::string(value));
    }
    if (!titled) corrupt("empty listing");

    const auto head = [&](std::string_view key) {
        auto it = header.find(key);
        if (it == header.end()) corrupt("missing header \"" + std::string(key) + "\"");
        return it->second;
    };
    s.tick = to_number<Tick>(head("Snapshot Tick"), "Snapshot Tick");
    s.tick_us = to_number<std::uint32_t>(head("Tick Length (us)"), "Tick Length (us)");
    if (s.tick_us == 0) corrupt("tick length must be positive");
    const std::string unit = whole_ms(s.tick_us) ? "(ms)" : "(ticks)";

    const auto check_count = [](const Block& b, std::string_view what) {
        if (b.declared != b.entries.size()) {
            corrupt(std::string(what) + " count " + std::to_string(b.declared) + " but " +
                    std::to_string(b.entries.size()) + " entries");
        }
    };
    check_count(tasks, "task");
    for (const auto& e : tasks.entries) {
        TaskRecord t;
        t.id = static_cast<ThreadId>(e.id);
        t.exinf = e.num<std::uint32_t>("Task Extended Information");
        t.current_priority = e.num<Priority>("Current Priority");
        t.base_priority = e.num<Priority>("Base Priority");
        auto st = sim::parse_state_code(e.get("Task State"));
        if (!st) corrupt("bad task state " + e.get("Task State"));
        t.state = *st;
        t.wakeup_count = e.num<int>("Queued Wakeup Request Count");
        t.suspend_count = e.num<int>("Suspend Request Nesting Count");
        t.max_continuous_run = from_unit(e.num<Tick>("Max. Continuous Run Time " + unit), s.tick_us);
        t.sys_run_time = from_unit(e.num<Tick>("Cumulative System Level Run Time " + unit), s.tick_us);
        t.user_run_time = from_unit(e.num<Tick>("Cumulative User Level Run Time " + unit), s.tick_us);
        s.tasks.push_back(t);
    }

    for (const auto& sec : kSections) {
        const auto it = objects.find(sec.cls);
        if (it == objects.end()) corrupt("missing section (" + std::string(sec.title) + ")");
        check_count(it->second, sec.entity);
        const std::string exinf_key = std::string(sec.entity) + " Extended Information";
        for (const auto& e : it->second.entries) {
            const ID id = static_cast<ID>(e.id);
            const auto exinf = e.num<std::uint32_t>(exinf_key);
            switch (sec.cls) {
                case ObjectClass::Semaphore:
                    s.semaphores.push_back({id, exinf, e.num<int>("Current Semaphore Count"),
                                            e.num<int>("Maximum Semaphore Count"), e.ids("Waiting Tasks")});
                    break;
                case ObjectClass::EventFlag:
                    s.event_flags.push_back(
                        {id, exinf, e.num<std::uint32_t>("Current Flag Pattern"), e.ids("Waiting Tasks")});
                    break;
                case ObjectClass::Mutex: {
                    const auto& owner = e.get("Owner Task");
                    std::optional<ThreadId> o;
                    if (owner != "none") o = to_number<ThreadId>(owner, "Owner Task");
                    s.mutexes.push_back({id, exinf, o, e.ids("Waiting Tasks")});
                    break;
                }
                case ObjectClass::Mailbox:
                    s.mailboxes.push_back({id, exinf, e.num<std::size_t>("Queued Messages"), e.ids("Waiting Tasks")});
                    break;
                case ObjectClass::MessageBuffer:
                    s.message_buffers.push_back({id, exinf, e.num<std::size_t>("Buffer Size (bytes)"),
                                                 e.num<std::size_t>("Max. Message Size (bytes)"),
                                                 e.num<std::size_t>("Used Bytes"), e.num<std::size_t>("Queued Messages"),
                                                 e.ids("Waiting Senders"), e.ids("Waiting Receivers")});
                    break;
                case ObjectClass::FixedPool:
                    s.fixed_pools.push_back({id, exinf, e.num<std::size_t>("Block Size (bytes)"),
                                             e.num<std::size_t>("Total Blocks"), e.num<std::size_t>("Blocks In Use"),
                                             e.num<std::size_t>("High Water Mark"), e.ids("Waiting Tasks")});
                    break;
                case ObjectClass::VariablePool:
                    s.variable_pools.push_back({id, exinf, e.num<std::size_t>("Pool Size (bytes)"),
                                                e.num<std::size_t>("Bytes In Use"), e.num<std::size_t>("High Water Mark"),
                                                e.num<std::size_t>("Free Segments"), e.ids("Waiting Tasks")});
                    break;
            }
        }
    }
    return s;
}

}  // namespace rtk::debug
