#include "rtk/scenario/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace rtk::scenario {

using kernel::FlagMode;
using kernel::ObjectClass;

std::string_view to_string(HandlerKind k) noexcept {
    switch (k) {
        case HandlerKind::Cyclic: return "cyclic";
        case HandlerKind::Alarm: return "alarm";
        case HandlerKind::Isr: return "isr";
    }
    return "?";
}

namespace {

std::optional<HandlerKind> parse_handler_kind(std::string_view s) {
    for (auto k : {HandlerKind::Cyclic, HandlerKind::Alarm, HandlerKind::Isr}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::string join_diagnostics(std::string_view source, const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
        if (!out.empty()) out += '\n';
        out += std::string(source) + ":" + (d.line > 0 ? std::to_string(d.line) + ":" : "") + " " + d.message;
    }
    return out;
}

}  // namespace

ScenarioError::ScenarioError(std::string source, std::vector<Diagnostic> diagnostics)
    : SimError(ErrorCode::Validation, join_diagnostics(source, diagnostics)), diagnostics_(std::move(diagnostics)) {}

ThreadId Scenario::resolved_idle_id() const {
    if (idle_id) return *idle_id;
    ThreadId top = 0;
    for (const auto& t : tasks) top = std::max(top, t.id);
    for (const auto& h : handlers) top = std::max(top, h.id);
    return top + 1;
}

// --- service argument shapes ------------------------------------------------------------

namespace {

struct Shape {
    std::vector<std::string_view> keys;
    std::vector<std::string_view> required;
    std::optional<ObjectClass> cls;
    bool task_target = false;
};

const std::map<std::string, Shape, std::less<>>& shapes() {
    static const std::map<std::string, Shape, std::less<>> m{
        {"sta_tsk", {{"task"}, {"task"}, {}, true}},
        {"ter_tsk", {{"task"}, {"task"}, {}, true}},
        {"wup_tsk", {{"task"}, {"task"}, {}, true}},
        {"ext_tsk", {{}, {}, {}, false}},
        {"slp_tsk", {{"tmout"}, {}, {}, false}},
        {"dly_tsk", {{"ticks"}, {"ticks"}, {}, false}},
        {"sig_sem", {{"id", "count"}, {"id"}, ObjectClass::Semaphore}},
        {"wai_sem", {{"id", "count", "tmout"}, {"id"}, ObjectClass::Semaphore}},
        {"set_flg", {{"id", "pattern"}, {"id", "pattern"}, ObjectClass::EventFlag}},
        {"clr_flg", {{"id", "pattern"}, {"id", "pattern"}, ObjectClass::EventFlag}},
        {"wai_flg", {{"id", "pattern", "mode", "clear", "tmout"}, {"id", "pattern"}, ObjectClass::EventFlag}},
        {"snd_mbx", {{"id", "text", "priority"}, {"id"}, ObjectClass::Mailbox}},
        {"rcv_mbx", {{"id", "tmout"}, {"id"}, ObjectClass::Mailbox}},
        {"snd_mbf", {{"id", "text"}, {"id"}, ObjectClass::MessageBuffer}},
        {"rcv_mbf", {{"id", "tmout"}, {"id"}, ObjectClass::MessageBuffer}},
        {"loc_mtx", {{"id", "tmout"}, {"id"}, ObjectClass::Mutex}},
        {"unl_mtx", {{"id"}, {"id"}, ObjectClass::Mutex}},
        {"get_mpf", {{"id", "tmout"}, {"id"}, ObjectClass::FixedPool}},
        {"rel_mpf", {{"id"}, {"id"}, ObjectClass::FixedPool}},
        {"get_mpl", {{"id", "size", "tmout"}, {"id", "size"}, ObjectClass::VariablePool}},
        {"rel_mpl", {{"id"}, {"id"}, ObjectClass::VariablePool}},
        {"del_obj", {{"class", "id"}, {"class", "id"}, {}, false}},
    };
    return m;
}

bool takes(const Shape& s, std::string_view key) { return std::find(s.keys.begin(), s.keys.end(), key) != s.keys.end(); }

// --- reading ----------------------------------------------------------------------------

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

class Reader {
public:
    std::vector<Diagnostic> diags;
    std::map<std::string, int> lines;  // "tasks[0]" -> source line

    void error(const YAML::Node& at, std::string msg) { diags.push_back({line_of(at), std::move(msg)}); }

    bool is_map(const YAML::Node& n, std::string_view what) {
        if (n.IsMap()) return true;
        error(n, std::string(what) + " must be a mapping");
        return false;
    }

    bool is_seq(const YAML::Node& n, std::string_view what) {
        if (n.IsSequence()) return true;
        error(n, std::string(what) + " must be a list");
        return false;
    }

    void only_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed, std::string_view what) {
        only_keys(map, std::vector<std::string_view>(allowed), what);
    }

    void only_keys(const YAML::Node& map, const std::vector<std::string_view>& allowed, std::string_view what) {
        for (const auto& kv : map) {
            const auto key = kv.first.Scalar();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                error(kv.first, "unknown key \"" + key + "\" in " + std::string(what));
            }
        }
    }

    std::optional<std::string> text(const YAML::Node& n, std::string_view what) {
        if (!n.IsScalar()) {
            error(n, std::string(what) + " must be a scalar");
            return std::nullopt;
        }
        return n.Scalar();
    }

    template <typename T>
    std::optional<T> integer(const YAML::Node& n, std::string_view what, T lo = std::numeric_limits<T>::min(),
                             T hi = std::numeric_limits<T>::max()) {
        auto s = text(n, what);
        if (!s) return std::nullopt;
        std::string_view v = *s;
        bool negative = false;
        if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
            negative = v.front() == '-';
            v.remove_prefix(1);
        }
        int base = 10;
        if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
            base = 16;
            v.remove_prefix(2);
        }
        std::uint64_t mag = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), mag, base);
        if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
            error(n, std::string(what) + " must be an integer, got \"" + *s + "\"");
            return std::nullopt;
        }
        __extension__ using wide = __int128;
        const wide value = negative ? -static_cast<wide>(mag) : static_cast<wide>(mag);
        if (value < static_cast<wide>(lo) || value > static_cast<wide>(hi)) {
            std::ostringstream o;
            o << what << " = " << *s << " is outside [" << +lo << ", " << +hi << "]";
            error(n, o.str());
            return std::nullopt;
        }
        return static_cast<T>(value);
    }

    std::optional<bool> boolean(const YAML::Node& n, std::string_view what) {
        auto s = text(n, what);
        if (!s) return std::nullopt;
        if (*s == "true" || *s == "yes") return true;
        if (*s == "false" || *s == "no") return false;
        error(n, std::string(what) + " must be true or false");
        return std::nullopt;
    }

    std::optional<Energy> energy(const YAML::Node& n, std::string_view what) {
        auto s = text(n, what);
        if (!s) return std::nullopt;
        auto e = Energy::parse(*s);
        if (!e || e->microjoules() < 0) {
            error(n, std::string(what) + " must be a non-negative mJ value with at most 3 decimals, got \"" + *s + "\"");
            return std::nullopt;
        }
        return e;
    }

    std::optional<double> real(const YAML::Node& n, std::string_view what) {
        auto s = text(n, what);
        if (!s) return std::nullopt;
        double v = 0;
        const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc{} || p != s->data() + s->size()) {
            error(n, std::string(what) + " must be a number");
            return std::nullopt;
        }
        return v;
    }

    template <typename T, typename F>
    void set(const YAML::Node& map, std::string_view key, T& out, F&& read) {
        if (auto n = map[std::string(key)]; n) {
            if (auto v = read(n, key)) out = *v;
        }
    }

    template <typename T>
    void set_int(const YAML::Node& map, std::string_view key, T& out, T lo = std::numeric_limits<T>::min(),
                 T hi = std::numeric_limits<T>::max()) {
        if (auto n = map[std::string(key)]; n) {
            if (auto v = integer<T>(n, key, lo, hi)) out = *v;
        }
    }

    bool require(const YAML::Node& map, std::initializer_list<std::string_view> keys, std::string_view what) {
        bool ok = true;
        for (auto k : keys) {
            if (!map[std::string(k)]) {
                error(map, std::string(what) + " needs \"" + std::string(k) + "\"");
                ok = false;
            }
        }
        return ok;
    }

    std::optional<sim::Annotation> annotation(const YAML::Node& n, std::string label) {
        if (!is_map(n, "annotation " + label)) return std::nullopt;
        only_keys(n, {"etm", "eem"}, "annotation " + label);
        sim::Annotation a{std::move(label), 0, {}};
        set_int<Tick>(n, "etm", a.etm);
        set(n, "eem", a.eem, [&](const YAML::Node& x, std::string_view k) { return energy(x, k); });
        return a;
    }

    Timeout timeout(const YAML::Node& n) {
        if (n.IsScalar() && n.Scalar() == "forever") return kernel::kForever;
        if (auto v = integer<Tick>(n, "tmout")) return *v;
        return kernel::kForever;
    }

    Program program(const YAML::Node& n, std::string_view owner) {
        Program out;
        if (!n) return out;
        if (!is_seq(n, std::string("program of ") + std::string(owner))) return out;
        for (const auto& item : n) {
            if (auto st = statement(item, owner)) out.push_back(std::move(*st));
        }
        return out;
    }

    std::optional<Statement> statement(const YAML::Node& n, std::string_view owner) {
        if (!is_map(n, "statement")) return std::nullopt;
        Statement st;
        st.line = line_of(n);
        if (auto c = n["compute"]; c) {
            only_keys(n, {"compute"}, "compute statement");
            st.kind = Statement::Kind::Compute;
            if (auto s = text(c, "compute")) st.label = *s;
            return st;
        }
        if (auto c = n["call"]; c) {
            st.kind = Statement::Kind::Call;
            auto name = text(c, "call");
            if (!name) return std::nullopt;
            st.call.service = *name;
            const auto shape = shapes().find(*name);
            if (shape == shapes().end()) {
                error(c, "unknown service \"" + *name + "\"");
                return std::nullopt;
            }
            std::vector<std::string_view> allowed{"call"};
            allowed.insert(allowed.end(), shape->second.keys.begin(), shape->second.keys.end());
            only_keys(n, allowed, *name);
            for (auto k : shape->second.required) {
                if (!n[std::string(k)]) error(n, *name + " needs \"" + std::string(k) + "\"");
            }
            auto& call = st.call;
            set_int<ID>(n, shape->second.task_target ? "task" : "id", call.id, 1);
            set_int<int>(n, "count", call.count, 1);
            set_int<std::uint32_t>(n, "pattern", call.pattern);
            set_int<Tick>(n, "ticks", call.ticks);
            set_int<std::size_t>(n, "size", call.size, 1);
            set_int<int>(n, "priority", call.priority, 1);
            set(n, "clear", call.clear, [&](const YAML::Node& x, std::string_view k) { return boolean(x, k); });
            if (auto t = n["text"]; t) {
                if (auto s = text(t, "text")) call.text = *s;
            }
            if (auto t = n["tmout"]; t) call.tmout = timeout(t);
            if (auto m = n["mode"]; m) {
                auto s = text(m, "mode");
                if (s && (*s == "and" || *s == "or")) {
                    call.mode = *s == "and" ? FlagMode::And : FlagMode::Or;
                } else if (s) {
                    error(m, "mode must be and or or");
                }
            }
            if (auto k = n["class"]; k) {
                auto s = text(k, "class");
                if (auto cls = s ? kernel::parse_object_class(*s) : std::nullopt) {
                    call.cls = *cls;
                } else if (s) {
                    error(k, "unknown object class \"" + *s + "\"");
                }
            }
            return st;
        }
        if (auto b = n["bfm"]; b) {
            st.kind = Statement::Kind::Bfm;
            only_keys(n, {"bfm", "access", "address", "data", "length"}, "bfm statement");
            if (auto s = text(b, "bfm")) st.device = *s;
            if (!require(n, {"access"}, "bfm statement")) return std::nullopt;
            if (auto s = text(n["access"], "access")) st.access = *s;
            set_int<std::uint64_t>(n, "address", st.address);
            set_int<std::size_t>(n, "length", st.length);
            if (auto d = n["data"]; d) {
                if (auto s = text(d, "data")) {
                    try {
                        bfm::parse_hex(*s);
                        st.data = *s;
                    } catch (const SimError& e) {
                        error(d, e.what());
                    }
                }
            }
            return st;
        }
        if (auto l = n["loop"]; l) {
            st.kind = Statement::Kind::Loop;
            only_keys(n, {"loop", "body"}, "loop");
            if (l.IsScalar() && l.Scalar() == "forever") {
                st.count.reset();
            } else if (auto c = integer<std::uint64_t>(l, "loop count")) {
                st.count = *c;
            }
            st.body = program(n["body"], owner);
            return st;
        }
        error(n, "statement must be one of compute, call, bfm or loop");
        return std::nullopt;
    }
};

std::uint32_t parse_exinf(Reader& r, const YAML::Node& map) {
    std::uint32_t v = 0;
    r.set_int<std::uint32_t>(map, "exinf", v);
    return v;
}

void read_objects(Reader& r, const YAML::Node& n, Objects& o) {
    if (!r.is_map(n, "objects")) return;
    r.only_keys(n, {"semaphores", "event_flags", "mailboxes", "message_buffers", "mutexes", "fixed_pools", "variable_pools"},
                "objects");
    const auto each = [&](const char* key, auto&& fn) {
        const auto list = n[key];
        if (!list || !r.is_seq(list, key)) return;
        std::size_t i = 0;
        for (const auto& item : list) {
            r.lines[std::string(key) + "[" + std::to_string(i++) + "]"] = line_of(item);
            if (r.is_map(item, key)) fn(item);
        }
    };
    each("semaphores", [&](const YAML::Node& m) {
        r.only_keys(m, {"id", "initial", "max", "exinf"}, "semaphore");
        r.require(m, {"id"}, "semaphore");
        SemaphoreDecl d;
        r.set_int<ID>(m, "id", d.id);
        r.set_int<int>(m, "initial", d.initial);
        r.set_int<int>(m, "max", d.max);
        d.exinf = parse_exinf(r, m);
        o.semaphores.push_back(d);
    });
    each("event_flags", [&](const YAML::Node& m) {
        r.only_keys(m, {"id", "initial", "exinf"}, "event flag");
        r.require(m, {"id"}, "event flag");
        EventFlagDecl d;
        r.set_int<ID>(m, "id", d.id);
        r.set_int<std::uint32_t>(m, "initial", d.initial);
        d.exinf = parse_exinf(r, m);
        o.event_flags.push_back(d);
    });
    const auto simple = [&](std::vector<SimpleDecl>& out, const char* what) {
        return [&, what](const YAML::Node& m) {
            r.only_keys(m, {"id", "exinf"}, what);
            r.require(m, {"id"}, what);
            SimpleDecl d;
            r.set_int<ID>(m, "id", d.id);
            d.exinf = parse_exinf(r, m);
            out.push_back(d);
        };
    };
    each("mailboxes", simple(o.mailboxes, "mailbox"));
    each("mutexes", simple(o.mutexes, "mutex"));
    each("message_buffers", [&](const YAML::Node& m) {
        r.only_keys(m, {"id", "capacity", "max_message", "exinf"}, "message buffer");
        r.require(m, {"id", "capacity", "max_message"}, "message buffer");
        MessageBufferDecl d;
        r.set_int<ID>(m, "id", d.id);
        r.set_int<std::size_t>(m, "capacity", d.capacity);
        r.set_int<std::size_t>(m, "max_message", d.max_message);
        d.exinf = parse_exinf(r, m);
        o.message_buffers.push_back(d);
    });
    each("fixed_pools", [&](const YAML::Node& m) {
        r.only_keys(m, {"id", "block_size", "blocks", "exinf"}, "fixed pool");
        r.require(m, {"id", "block_size", "blocks"}, "fixed pool");
        FixedPoolDecl d;
        r.set_int<ID>(m, "id", d.id);
        r.set_int<std::size_t>(m, "block_size", d.block_size);
        r.set_int<std::size_t>(m, "blocks", d.blocks);
        d.exinf = parse_exinf(r, m);
        o.fixed_pools.push_back(d);
    });
    each("variable_pools", [&](const YAML::Node& m) {
        r.only_keys(m, {"id", "size", "exinf"}, "variable pool");
        r.require(m, {"id", "size"}, "variable pool");
        VariablePoolDecl d;
        r.set_int<ID>(m, "id", d.id);
        r.set_int<std::size_t>(m, "size", d.size);
        d.exinf = parse_exinf(r, m);
        o.variable_pools.push_back(d);
    });
}

DeviceSpec read_device(Reader& r, const YAML::Node& m) {
    DeviceSpec d;
    r.only_keys(m, {"name", "kind", "accesses", "size", "word", "fifo", "tx_per_tick", "ports"}, "device");
    r.require(m, {"name", "kind"}, "device");
    if (auto n = m["name"]; n) {
        if (auto s = r.text(n, "name")) d.name = *s;
    }
    if (auto n = m["kind"]; n) {
        auto s = r.text(n, "kind");
        if (auto k = s ? bfm::parse_device_kind(*s) : std::nullopt) {
            d.kind = *k;
        } else if (s) {
            r.error(n, "unknown device kind \"" + *s + "\"");
        }
    }
    r.set_int<std::size_t>(m, "size", d.size);
    r.set_int<std::size_t>(m, "word", d.word);
    r.set_int<std::size_t>(m, "fifo", d.fifo_capacity);
    r.set_int<std::size_t>(m, "tx_per_tick", d.tx_per_tick);
    r.set_int<std::size_t>(m, "ports", d.ports);
    if (auto acc = m["accesses"]; acc && r.is_map(acc, "accesses")) {
        for (const auto& kv : acc) {
            const auto name = kv.first.Scalar();
            if (!r.is_map(kv.second, "access " + name)) continue;
            r.only_keys(kv.second, {"cycles", "eem"}, "access " + name);
            bfm::AccessCost c;
            r.set_int<std::uint64_t>(kv.second, "cycles", c.cycles);
            r.set(kv.second, "eem", c.energy, [&](const YAML::Node& x, std::string_view k) { return r.energy(x, k); });
            d.accesses[name] = c;
        }
    }
    return d;
}

}  // namespace

// --- semantic checks --------------------------------------------------------------------

namespace {

class Checker {
public:
    Checker(const Scenario& s, const std::map<std::string, int>& lines) : s_(s), lines_(lines) {}

    std::vector<Diagnostic> run() {
        top_level();
        objects();
        threads();
        devices();
        stimuli();
        std::stable_sort(diags_.begin(), diags_.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
        return std::move(diags_);
    }

private:
    int line(const std::string& key) const {
        auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }
    void error(int at, std::string msg) { diags_.push_back({at, std::move(msg)}); }

    void top_level() {
        if (s_.run_ticks < 1) error(line("run_ticks"), "run_ticks must be at least 1");
        if (s_.tick_us < 1) error(line("tick_us"), "tick_us must be at least 1");
        if (s_.cycles_per_tick < 1) error(line("cycles_per_tick"), "cycles_per_tick must be at least 1");
        if (!(s_.battery_wh > 0)) error(line("battery_wh"), "battery_wh must be positive");
        const auto& names = kernel::service_names();
        for (const auto& [name, a] : s_.svc_overrides) {
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                error(line("svc_overrides"), "svc override for unknown service \"" + name + "\"");
            }
        }
    }

    template <typename Decls>
    void unique_ids(const Decls& ds, const char* key, const char* what, std::set<ID>& out) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const int at = line(std::string(key) + "[" + std::to_string(i) + "]");
            if (ds[i].id < 1) error(at, std::string(what) + " id must be positive");
            if (!out.insert(ds[i].id).second) error(at, "duplicate " + std::string(what) + " id " + std::to_string(ds[i].id));
        }
    }

    void objects() {
        const auto& o = s_.objects;
        unique_ids(o.semaphores, "semaphores", "semaphore", ids_[ObjectClass::Semaphore]);
        unique_ids(o.event_flags, "event_flags", "event flag", ids_[ObjectClass::EventFlag]);
        unique_ids(o.mailboxes, "mailboxes", "mailbox", ids_[ObjectClass::Mailbox]);
        unique_ids(o.message_buffers, "message_buffers", "message buffer", ids_[ObjectClass::MessageBuffer]);
        unique_ids(o.mutexes, "mutexes", "mutex", ids_[ObjectClass::Mutex]);
        unique_ids(o.fixed_pools, "fixed_pools", "fixed pool", ids_[ObjectClass::FixedPool]);
        unique_ids(o.variable_pools, "variable_pools", "variable pool", ids_[ObjectClass::VariablePool]);
        for (std::size_t i = 0; i < o.semaphores.size(); ++i) {
            const auto& d = o.semaphores[i];
            if (d.max < 1 || d.initial < 0 || d.initial > d.max) {
                error(line("semaphores[" + std::to_string(i) + "]"),
                      "semaphore " + std::to_string(d.id) + " needs 0 <= initial <= max and max >= 1");
            }
        }
        for (std::size_t i = 0; i < o.message_buffers.size(); ++i) {
            const auto& d = o.message_buffers[i];
            if (d.capacity < 1 || d.max_message < 1 || d.max_message > d.capacity) {
                error(line("message_buffers[" + std::to_string(i) + "]"),
                      "message buffer " + std::to_string(d.id) + " needs 1 <= max_message <= capacity");
            }
        }
        for (std::size_t i = 0; i < o.fixed_pools.size(); ++i) {
            if (o.fixed_pools[i].block_size < 1 || o.fixed_pools[i].blocks < 1) {
                error(line("fixed_pools[" + std::to_string(i) + "]"), "fixed pool needs block_size and blocks >= 1");
            }
        }
        for (std::size_t i = 0; i < o.variable_pools.size(); ++i) {
            if (o.variable_pools[i].size < 1) error(line("variable_pools[" + std::to_string(i) + "]"), "variable pool size must be >= 1");
        }
    }

    void threads() {
        std::set<ThreadId> ids;
        for (const auto& t : s_.tasks) task_ids_.insert(t.id);
        const ThreadId idle = s_.resolved_idle_id();
        const auto claim = [&](ThreadId id, int at, const std::string& name) {
            if (id < 1) error(at, name + ": thread id must be positive");
            if (!ids.insert(id).second) error(at, "duplicate thread id " + std::to_string(id) + " (" + name + ")");
            if (id == idle) error(at, name + ": id " + std::to_string(id) + " is taken by the idle task");
        };
        for (std::size_t i = 0; i < s_.tasks.size(); ++i) {
            const auto& t = s_.tasks[i];
            const int at = line("tasks[" + std::to_string(i) + "]");
            claim(t.id, at, t.name);
            if (t.priority < sim::kHighestPriority || t.priority > sim::kLowestPriority) {
                error(at, t.name + ": priority " + std::to_string(t.priority) + " outside [" +
                              std::to_string(sim::kHighestPriority) + ", " + std::to_string(sim::kLowestPriority) + "]");
            }
            program(t.program, t.name, false, at);
        }
        std::set<std::uint32_t> lines_bound;
        for (std::size_t i = 0; i < s_.handlers.size(); ++i) {
            const auto& h = s_.handlers[i];
            const int at = line("handlers[" + std::to_string(i) + "]");
            claim(h.id, at, h.name);
            switch (h.kind) {
                case HandlerKind::Cyclic:
                    if (h.period < 1) error(at, h.name + ": cyclic period must be at least 1 tick");
                    break;
                case HandlerKind::Alarm: break;
                case HandlerKind::Isr:
                    if (h.line >= 8) error(at, h.name + ": irq line " + std::to_string(h.line) + " outside [0, 7]");
                    if (!lines_bound.insert(h.line).second) error(at, h.name + ": irq line " + std::to_string(h.line) + " bound twice");
                    isr_lines_.insert(h.line);
                    break;
            }
            program(h.program, h.name, true, at);
        }
    }

    void program(const Program& p, const std::string& owner, bool handler, int fallback) {
        for (const auto& st : p) {
            const int at = st.line ? st.line : fallback;
            switch (st.kind) {
                case Statement::Kind::Compute:
                    if (!s_.annotations.contains(st.label)) error(at, owner + ": undeclared annotation label \"" + st.label + "\"");
                    break;
                case Statement::Kind::Call: call(st.call, owner, at); break;
                case Statement::Kind::Bfm: device_use(st, owner, at); break;
                case Statement::Kind::Loop:
                    if (!st.count && handler) error(at, owner + ": handlers may not loop forever");
                    if (!st.count && st.body.empty()) error(at, owner + ": forever loop with an empty body");
                    program(st.body, owner, handler, at);
                    break;
            }
        }
    }

    void call(const Call& c, const std::string& owner, int at) {
        const auto shape = shapes().find(c.service);
        if (shape == shapes().end()) {
            error(at, owner + ": unknown service \"" + c.service + "\"");
            return;
        }
        if (shape->second.task_target && !task_ids_.contains(static_cast<ThreadId>(c.id))) {
            error(at, owner + ": " + c.service + " targets undeclared task " + std::to_string(c.id));
        }
        std::optional<ObjectClass> cls = shape->second.cls;
        if (c.service == "del_obj") cls = c.cls;
        if (cls && !ids_[*cls].contains(c.id)) {
            error(at, owner + ": " + c.service + " refers to undeclared " + std::string(kernel::to_string(*cls)) + " " +
                          std::to_string(c.id));
        }
        if (c.tmout && *c.tmout == 0) error(at, owner + ": " + c.service + " timeout must be forever or >= 1");
    }

    void device_use(const Statement& st, const std::string& owner, int at) {
        const auto it = std::find_if(s_.devices.begin(), s_.devices.end(), [&](const DeviceSpec& d) { return d.name == st.device; });
        if (it == s_.devices.end()) {
            error(at, owner + ": undeclared device \"" + st.device + "\"");
            return;
        }
        if (!it->accesses.contains(st.access)) {
            error(at, owner + ": device " + st.device + " has no access \"" + st.access + "\"");
        }
    }

    void devices() {
        std::set<std::string> names;
        for (std::size_t i = 0; i < s_.devices.size(); ++i) {
            const auto& d = s_.devices[i];
            const int at = line("devices[" + std::to_string(i) + "]");
            if (d.name.empty()) error(at, "device needs a name");
            if (!names.insert(d.name).second) error(at, "duplicate device \"" + d.name + "\"");
            const auto& ok = bfm::supported_accesses(d.kind);
            for (const auto& [name, cost] : d.accesses) {
                if (std::find(ok.begin(), ok.end(), name) == ok.end()) {
                    error(at, "device " + d.name + " (" + std::string(bfm::to_string(d.kind)) + ") cannot do \"" + name + "\"");
                }
            }
            if (d.kind == bfm::DeviceKind::Memory && (d.word < 1 || d.size < 1)) error(at, "memory " + d.name + " needs size and word >= 1");
            if (d.kind == bfm::DeviceKind::SerialIO && (d.fifo_capacity < 1 || d.tx_per_tick < 1)) {
                error(at, "serial " + d.name + " needs fifo and tx_per_tick >= 1");
            }
        }
    }

    void stimuli() {
        for (std::size_t i = 0; i < s_.stimuli.size(); ++i) {
            const auto& st = s_.stimuli[i];
            const int at = line("stimuli[" + std::to_string(i) + "]");
            if (st.kind == bfm::StimulusKind::Irq) {
                if (!isr_lines_.contains(st.line)) error(at, "stimulus at tick " + std::to_string(st.at) + ": irq line " + std::to_string(st.line) + " has no handler");
                continue;
            }
            const auto want = st.kind == bfm::StimulusKind::SerialInput ? bfm::DeviceKind::SerialIO : bfm::DeviceKind::ParallelIO;
            const auto it = std::find_if(s_.devices.begin(), s_.devices.end(), [&](const DeviceSpec& d) { return d.name == st.device; });
            if (it == s_.devices.end()) {
                error(at, "stimulus targets undeclared device \"" + st.device + "\"");
            } else if (it->kind != want) {
                error(at, "stimulus device " + st.device + " is not a " + std::string(bfm::to_string(want)) + " device");
            } else if (want == bfm::DeviceKind::ParallelIO && (st.line >= it->ports || st.data.size() != 1)) {
                error(at, "parallel input needs exactly one byte for an existing port");
            } else if (want == bfm::DeviceKind::SerialIO && st.data.empty()) {
                error(at, "serial input needs at least one byte");
            }
            if (st.at >= s_.run_ticks) error(at, "stimulus at tick " + std::to_string(st.at) + " is past run_ticks");
        }
    }

    const Scenario& s_;
    const std::map<std::string, int>& lines_;
    std::vector<Diagnostic> diags_;
    std::map<ObjectClass, std::set<ID>> ids_;
    std::set<ThreadId> task_ids_;
    std::set<std::uint32_t> isr_lines_;
};

}  // namespace

std::vector<Diagnostic> validate(const Scenario& s) {
    const std::map<std::string, int> none;
    return Checker(s, none).run();
}

// --- parse ------------------------------------------------------------------------------

Scenario parse_scenario(std::string_view text, std::string_view source) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ScenarioError(std::string(source), {{e.mark.is_null() ? 0 : e.mark.line + 1, "syntax error: " + e.msg}});
    }
    Reader r;
    Scenario s;
    if (!root.IsMap()) {
        throw ScenarioError(std::string(source), {{line_of(root), "scenario must be a mapping"}});
    }
    r.only_keys(root,
                {"name", "tick_us", "cycles_per_tick", "run_ticks", "battery_wh", "svc", "svc_overrides", "idle",
                 "annotations", "devices", "objects", "tasks", "handlers", "stimuli"},
                "scenario");
    for (const auto& kv : root) r.lines[kv.first.Scalar()] = line_of(kv.first);
    if (auto n = root["name"]; n) {
        if (auto v = r.text(n, "name")) s.name = *v;
    }
    r.set_int<std::uint32_t>(root, "tick_us", s.tick_us);
    r.set_int<std::uint64_t>(root, "cycles_per_tick", s.cycles_per_tick);
    r.set_int<Tick>(root, "run_ticks", s.run_ticks);
    r.set(root, "battery_wh", s.battery_wh, [&](const YAML::Node& x, std::string_view k) { return r.real(x, k); });
    if (auto n = root["svc"]; n) {
        if (auto a = r.annotation(n, "svc")) s.svc = *a;
    }
    if (auto n = root["svc_overrides"]; n && r.is_map(n, "svc_overrides")) {
        for (const auto& kv : n) {
            if (auto a = r.annotation(kv.second, kv.first.Scalar())) s.svc_overrides[kv.first.Scalar()] = *a;
        }
    }
    if (auto n = root["idle"]; n && r.is_map(n, "idle")) {
        r.only_keys(n, {"id", "name", "energy_per_tick"}, "idle");
        if (auto id = n["id"]; id) {
            if (auto v = r.integer<ThreadId>(id, "idle id", 1)) s.idle_id = *v;
        }
        if (auto nm = n["name"]; nm) {
            if (auto v = r.text(nm, "idle name")) s.idle_name = *v;
        }
        r.set(n, "energy_per_tick", s.idle_energy_per_tick, [&](const YAML::Node& x, std::string_view k) { return r.energy(x, k); });
    }
    if (auto n = root["annotations"]; n && r.is_map(n, "annotations")) {
        for (const auto& kv : n) {
            if (auto a = r.annotation(kv.second, kv.first.Scalar())) s.annotations[kv.first.Scalar()] = *a;
        }
    }
    if (auto n = root["devices"]; n && r.is_seq(n, "devices")) {
        std::size_t i = 0;
        for (const auto& item : n) {
            r.lines["devices[" + std::to_string(i++) + "]"] = line_of(item);
            if (r.is_map(item, "device")) s.devices.push_back(read_device(r, item));
        }
    }
    if (auto n = root["objects"]; n) read_objects(r, n, s.objects);
    if (auto n = root["tasks"]; n && r.is_seq(n, "tasks")) {
        std::size_t i = 0;
        for (const auto& item : n) {
            r.lines["tasks[" + std::to_string(i++) + "]"] = line_of(item);
            if (!r.is_map(item, "task")) continue;
            r.only_keys(item, {"id", "name", "priority", "exinf", "autostart", "program"}, "task");
            r.require(item, {"id", "name", "priority"}, "task");
            TaskDecl t;
            r.set_int<ThreadId>(item, "id", t.id);
            if (auto nm = item["name"]; nm) {
                if (auto v = r.text(nm, "name")) t.name = *v;
            }
            r.set_int<Priority>(item, "priority", t.priority);
            t.exinf = parse_exinf(r, item);
            r.set(item, "autostart", t.autostart, [&](const YAML::Node& x, std::string_view k) { return r.boolean(x, k); });
            t.program = r.program(item["program"], t.name);
            s.tasks.push_back(std::move(t));
        }
    }
    if (auto n = root["handlers"]; n && r.is_seq(n, "handlers")) {
        std::size_t i = 0;
        for (const auto& item : n) {
            r.lines["handlers[" + std::to_string(i++) + "]"] = line_of(item);
            if (!r.is_map(item, "handler")) continue;
            r.only_keys(item, {"id", "name", "kind", "period", "phase", "offset", "line", "program"}, "handler");
            r.require(item, {"id", "name", "kind"}, "handler");
            HandlerDecl h;
            r.set_int<ThreadId>(item, "id", h.id);
            if (auto nm = item["name"]; nm) {
                if (auto v = r.text(nm, "name")) h.name = *v;
            }
            if (auto k = item["kind"]; k) {
                auto v = r.text(k, "kind");
                if (auto kind = v ? parse_handler_kind(*v) : std::nullopt) {
                    h.kind = *kind;
                } else if (v) {
                    r.error(k, "handler kind must be cyclic, alarm or isr");
                }
            }
            if (h.kind == HandlerKind::Cyclic) r.require(item, {"period"}, "cyclic handler");
            if (h.kind == HandlerKind::Alarm) r.require(item, {"offset"}, "alarm handler");
            if (h.kind == HandlerKind::Isr) r.require(item, {"line"}, "interrupt handler");
            r.set_int<Tick>(item, "period", h.period);
            if (auto p = item["phase"]; p) {
                if (auto v = r.integer<Tick>(p, "phase")) h.phase = *v;
            }
            r.set_int<Tick>(item, "offset", h.offset);
            r.set_int<std::uint32_t>(item, "line", h.line);
            h.program = r.program(item["program"], h.name);
            s.handlers.push_back(std::move(h));
        }
    }
    if (auto n = root["stimuli"]; n && r.is_seq(n, "stimuli")) {
        std::size_t i = 0;
        for (const auto& item : n) {
            r.lines["stimuli[" + std::to_string(i++) + "]"] = line_of(item);
            if (!r.is_map(item, "stimulus")) continue;
            r.only_keys(item, {"at", "irq", "device", "port", "data"}, "stimulus");
            r.require(item, {"at"}, "stimulus");
            Stimulus st;
            r.set_int<Tick>(item, "at", st.at);
            if (auto irq = item["irq"]; irq) {
                st.kind = bfm::StimulusKind::Irq;
                r.set_int<std::uint32_t>(item, "irq", st.line);
                if (item["device"] || item["data"]) r.error(item, "stimulus has both irq and device input");
            } else if (auto dev = item["device"]; dev) {
                if (auto v = r.text(dev, "device")) st.device = *v;
                const auto it = std::find_if(s.devices.begin(), s.devices.end(), [&](const DeviceSpec& d) { return d.name == st.device; });
                const bool parallel = it != s.devices.end() && it->kind == bfm::DeviceKind::ParallelIO;
                st.kind = parallel || item["port"] ? bfm::StimulusKind::ParallelInput : bfm::StimulusKind::SerialInput;
                r.set_int<std::uint32_t>(item, "port", st.line);
                if (auto d = item["data"]; d) {
                    if (auto v = r.text(d, "data")) {
                        try {
                            st.data = bfm::parse_hex(*v);
                        } catch (const SimError& e) {
                            r.error(d, e.what());
                        }
                    }
                } else {
                    r.error(item, "device input needs \"data\"");
                }
            } else {
                r.error(item, "stimulus needs irq or device");
            }
            s.stimuli.push_back(std::move(st));
        }
    }
    if (r.diags.empty()) {
        auto more = Checker(s, r.lines).run();
        r.diags.insert(r.diags.end(), more.begin(), more.end());
    }
    if (!r.diags.empty()) throw ScenarioError(std::string(source), std::move(r.diags));
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path, {{0, "cannot read file"}});
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path);
}

// --- serialize --------------------------------------------------------------------------

namespace {

std::string hex32(std::uint32_t v) {
    std::ostringstream o;
    o << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
    return o.str();
}

void emit_annotation(YAML::Emitter& y, const sim::Annotation& a) {
    y << YAML::Flow << YAML::BeginMap << YAML::Key << "etm" << YAML::Value << a.etm << YAML::Key << "eem"
      << YAML::Value << a.eem.to_string() << YAML::EndMap;
}

void emit_program(YAML::Emitter& y, const Program& p) {
    y << YAML::BeginSeq;
    for (const auto& st : p) {
        y << YAML::BeginMap;
        switch (st.kind) {
            case Statement::Kind::Compute: y << YAML::Key << "compute" << YAML::Value << st.label; break;
            case Statement::Kind::Call: {
                const auto& c = st.call;
                const auto& shape = shapes().at(c.service);
                y << YAML::Key << "call" << YAML::Value << c.service;
                if (takes(shape, "task")) y << YAML::Key << "task" << YAML::Value << c.id;
                if (takes(shape, "class")) y << YAML::Key << "class" << YAML::Value << std::string(kernel::to_string(c.cls));
                if (takes(shape, "id")) y << YAML::Key << "id" << YAML::Value << c.id;
                if (takes(shape, "count")) y << YAML::Key << "count" << YAML::Value << c.count;
                if (takes(shape, "pattern")) y << YAML::Key << "pattern" << YAML::Value << hex32(c.pattern);
                if (takes(shape, "mode")) y << YAML::Key << "mode" << YAML::Value << (c.mode == FlagMode::And ? "and" : "or");
                if (takes(shape, "clear")) y << YAML::Key << "clear" << YAML::Value << c.clear;
                if (takes(shape, "ticks")) y << YAML::Key << "ticks" << YAML::Value << c.ticks;
                if (takes(shape, "size")) y << YAML::Key << "size" << YAML::Value << c.size;
                if (takes(shape, "text")) y << YAML::Key << "text" << YAML::Value << YAML::DoubleQuoted << c.text;
                if (takes(shape, "priority")) y << YAML::Key << "priority" << YAML::Value << c.priority;
                if (takes(shape, "tmout")) {
                    y << YAML::Key << "tmout" << YAML::Value;
                    if (c.tmout) {
                        y << *c.tmout;
                    } else {
                        y << "forever";
                    }
                }
                break;
            }
            case Statement::Kind::Bfm:
                y << YAML::Key << "bfm" << YAML::Value << st.device << YAML::Key << "access" << YAML::Value << st.access;
                if (st.address) y << YAML::Key << "address" << YAML::Value << st.address;
                if (!st.data.empty()) y << YAML::Key << "data" << YAML::Value << YAML::DoubleQuoted << st.data;
                if (st.length) y << YAML::Key << "length" << YAML::Value << st.length;
                break;
            case Statement::Kind::Loop:
                y << YAML::Key << "loop" << YAML::Value;
                if (st.count) {
                    y << *st.count;
                } else {
                    y << "forever";
                }
                y << YAML::Key << "body" << YAML::Value;
                emit_program(y, st.body);
                break;
        }
        y << YAML::EndMap;
    }
    y << YAML::EndSeq;
}

}  // namespace

std::string serialize(const Scenario& s) {
    YAML::Emitter y;
    y << YAML::BeginMap;
    y << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << s.name;
    y << YAML::Key << "tick_us" << YAML::Value << s.tick_us;
    y << YAML::Key << "cycles_per_tick" << YAML::Value << s.cycles_per_tick;
    y << YAML::Key << "run_ticks" << YAML::Value << s.run_ticks;
    y << YAML::Key << "battery_wh" << YAML::Value << s.battery_wh;
    y << YAML::Key << "svc" << YAML::Value;
    emit_annotation(y, s.svc);
    if (!s.svc_overrides.empty()) {
        y << YAML::Key << "svc_overrides" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, a] : s.svc_overrides) {
            y << YAML::Key << k << YAML::Value;
            emit_annotation(y, a);
        }
        y << YAML::EndMap;
    }
    y << YAML::Key << "idle" << YAML::Value << YAML::BeginMap;
    if (s.idle_id) y << YAML::Key << "id" << YAML::Value << *s.idle_id;
    y << YAML::Key << "name" << YAML::Value << s.idle_name << YAML::Key << "energy_per_tick" << YAML::Value
      << s.idle_energy_per_tick.to_string() << YAML::EndMap;

    y << YAML::Key << "annotations" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, a] : s.annotations) {
        y << YAML::Key << k << YAML::Value;
        emit_annotation(y, a);
    }
    y << YAML::EndMap;

    y << YAML::Key << "devices" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : s.devices) {
        y << YAML::BeginMap << YAML::Key << "name" << YAML::Value << d.name << YAML::Key << "kind" << YAML::Value
          << std::string(bfm::to_string(d.kind));
        switch (d.kind) {
            case bfm::DeviceKind::Memory:
                y << YAML::Key << "size" << YAML::Value << d.size << YAML::Key << "word" << YAML::Value << d.word;
                break;
            case bfm::DeviceKind::SerialIO:
                y << YAML::Key << "fifo" << YAML::Value << d.fifo_capacity << YAML::Key << "tx_per_tick" << YAML::Value
                  << d.tx_per_tick;
                break;
            case bfm::DeviceKind::ParallelIO: y << YAML::Key << "ports" << YAML::Value << d.ports; break;
            default: break;
        }
        y << YAML::Key << "accesses" << YAML::Value << YAML::BeginMap;
        for (const auto& [name, cost] : d.accesses) {
            y << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "cycles" << YAML::Value
              << cost.cycles << YAML::Key << "eem" << YAML::Value << cost.energy.to_string() << YAML::EndMap;
        }
        y << YAML::EndMap << YAML::EndMap;
    }
    y << YAML::EndSeq;

    const auto& o = s.objects;
    y << YAML::Key << "objects" << YAML::Value << YAML::BeginMap;
    const auto list = [&](const char* key, const auto& items, auto&& fields) {
        if (items.empty()) return;
        y << YAML::Key << key << YAML::Value << YAML::BeginSeq;
        for (const auto& d : items) {
            y << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << d.id;
            fields(d);
            y << YAML::Key << "exinf" << YAML::Value << hex32(d.exinf) << YAML::EndMap;
        }
        y << YAML::EndSeq;
    };
    list("semaphores", o.semaphores, [&](const SemaphoreDecl& d) {
        y << YAML::Key << "initial" << YAML::Value << d.initial << YAML::Key << "max" << YAML::Value << d.max;
    });
    list("event_flags", o.event_flags, [&](const EventFlagDecl& d) { y << YAML::Key << "initial" << YAML::Value << hex32(d.initial); });
    list("mailboxes", o.mailboxes, [](const SimpleDecl&) {});
    list("message_buffers", o.message_buffers, [&](const MessageBufferDecl& d) {
        y << YAML::Key << "capacity" << YAML::Value << d.capacity << YAML::Key << "max_message" << YAML::Value << d.max_message;
    });
    list("mutexes", o.mutexes, [](const SimpleDecl&) {});
    list("fixed_pools", o.fixed_pools, [&](const FixedPoolDecl& d) {
        y << YAML::Key << "block_size" << YAML::Value << d.block_size << YAML::Key << "blocks" << YAML::Value << d.blocks;
    });
    list("variable_pools", o.variable_pools, [&](const VariablePoolDecl& d) { y << YAML::Key << "size" << YAML::Value << d.size; });
    y << YAML::EndMap;

    y << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : s.tasks) {
        y << YAML::BeginMap << YAML::Key << "id" << YAML::Value << t.id << YAML::Key << "name" << YAML::Value << t.name
          << YAML::Key << "priority" << YAML::Value << t.priority << YAML::Key << "exinf" << YAML::Value << hex32(t.exinf)
          << YAML::Key << "autostart" << YAML::Value << t.autostart << YAML::Key << "program" << YAML::Value;
        emit_program(y, t.program);
        y << YAML::EndMap;
    }
    y << YAML::EndSeq;

    y << YAML::Key << "handlers" << YAML::Value << YAML::BeginSeq;
    for (const auto& h : s.handlers) {
        y << YAML::BeginMap << YAML::Key << "id" << YAML::Value << h.id << YAML::Key << "name" << YAML::Value << h.name
          << YAML::Key << "kind" << YAML::Value << std::string(to_string(h.kind));
        switch (h.kind) {
            case HandlerKind::Cyclic:
                y << YAML::Key << "period" << YAML::Value << h.period;
                if (h.phase) y << YAML::Key << "phase" << YAML::Value << *h.phase;
                break;
            case HandlerKind::Alarm: y << YAML::Key << "offset" << YAML::Value << h.offset; break;
            case HandlerKind::Isr: y << YAML::Key << "line" << YAML::Value << h.line; break;
        }
        y << YAML::Key << "program" << YAML::Value;
        emit_program(y, h.program);
        y << YAML::EndMap;
    }
    y << YAML::EndSeq;

    y << YAML::Key << "stimuli" << YAML::Value << YAML::BeginSeq;
    for (const auto& st : s.stimuli) {
        y << YAML::Flow << YAML::BeginMap << YAML::Key << "at" << YAML::Value << st.at;
        if (st.kind == bfm::StimulusKind::Irq) {
            y << YAML::Key << "irq" << YAML::Value << st.line;
        } else {
            y << YAML::Key << "device" << YAML::Value << st.device;
            if (st.kind == bfm::StimulusKind::ParallelInput) y << YAML::Key << "port" << YAML::Value << st.line;
            y << YAML::Key << "data" << YAML::Value << YAML::DoubleQuoted << bfm::to_hex(st.data);
        }
        y << YAML::EndMap;
    }
    y << YAML::EndSeq;
    y << YAML::EndMap;
    return std::string(y.c_str()) + "\n";
}

}  // namespace rtk::scenario
