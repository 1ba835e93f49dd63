#include "rtk/report/report.hpp"

#include "rtk/sim/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace rtk::report {

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

double pct(long double part, long double whole) { return whole == 0 ? 0.0 : static_cast<double>(100.0L * part / whole); }

bool is_handler_context(ContextKind c) {
    return c == ContextKind::Isr || c == ContextKind::CycHandler || c == ContextKind::AlmHandler;
}

struct Style {
    const char* id;
    const char* color;
    const char* hatch;  // path drawn over the fill, empty for solid
};

Style style_of(ContextKind c) {
    switch (c) {
        case ContextKind::Startup: return {"ctx-startup", "#9e9e9e", ""};
        case ContextKind::Task: return {"ctx-task", "#4caf50", ""};
        case ContextKind::Svc: return {"ctx-svc", "#ff9800", "M0,6 L6,0"};
        case ContextKind::CycHandler: return {"ctx-cyc", "#2196f3", "M0,3 L6,3"};
        case ContextKind::AlmHandler: return {"ctx-alm", "#9c27b0", "M3,0 L3,6"};
        case ContextKind::Isr: return {"ctx-isr", "#f44336", "M0,0 L6,6 M0,6 L6,0"};
        case ContextKind::Bfm: return {"ctx-bfm", "#795548", "M2,2 L3,3"};
        case ContextKind::Idle: return {"ctx-idle", "#e0e0e0", ""};
    }
    return {"ctx-task", "#4caf50", ""};
}

constexpr std::array kAllContexts{ContextKind::Startup, ContextKind::Task, ContextKind::Svc, ContextKind::CycHandler,
                                  ContextKind::AlmHandler, ContextKind::Isr, ContextKind::Bfm, ContextKind::Idle};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

Battery Battery::from_watt_hours(double wh) {
    if (!(wh > 0) || !std::isfinite(wh)) fail(ErrorCode::Validation, "battery capacity must be a positive number of Wh");
    Battery b;
    b.capacity = Energy::from_microjoules(static_cast<std::int64_t>(std::llround(wh * 3.6e9)));
    return b;
}

// --- distribution ----------------------------------------------------------------------

DistributionReport distribution_report(const std::vector<TraceRecord>& records, Tick window, std::uint32_t tick_us,
                                       const Battery& battery) {
    if (window == 0) fail(ErrorCode::Validation, "distribution window must be at least one tick");
    if (tick_us == 0) fail(ErrorCode::Validation, "tick length must be positive");
    DistributionReport r;
    r.window = window;
    r.tick_us = tick_us;
    r.capacity = battery.capacity;

    std::map<ThreadId, ThreadShare> by_id;
    for (const auto& rec : records) {
        if (rec.tick_end > window || rec.tick_start > rec.tick_end) {
            fail(ErrorCode::Validation, "record [" + std::to_string(rec.tick_start) + ", " + std::to_string(rec.tick_end) +
                                            ") of " + rec.thread_name + " lies outside the window");
        }
        auto& s = by_id[rec.thread_id];
        s.id = rec.thread_id;
        s.name = rec.thread_name;
        s.cet += rec.tick_end - rec.tick_start;
        s.cee += rec.eem;
        r.total_cet += rec.tick_end - rec.tick_start;
        r.total_cee += rec.eem;
    }
    for (auto& [id, s] : by_id) {
        s.time_pct = pct(s.cet, r.total_cet);
        s.energy_pct = pct(s.cee.microjoules(), r.total_cee.microjoules());
        r.threads.push_back(std::move(s));
    }

    const long double used = r.total_cee.microjoules();
    const long double cap = r.capacity.microjoules();
    r.remaining_fraction = static_cast<double>(std::max(0.0L, 1.0L - used / cap));
    r.average_power_mw = static_cast<double>(used * 1000.0L / (static_cast<long double>(window) * tick_us));
    if (used > 0) {
        const long double ticks = cap * window / used;
        r.lifespan_ticks = static_cast<double>(ticks);
        r.lifespan_hours = static_cast<double>(ticks * tick_us / 3.6e9L);
    }
    return r;
}

std::string render_text_report(const DistributionReport& r) {
    std::size_t name_w = 5;
    std::size_t id_w = 6;
    for (const auto& s : r.threads) {
        name_w = std::max(name_w, s.name.size());
        id_w = std::max(id_w, std::to_string(s.id).size() + 1);
    }
    std::ostringstream o;
    o << "CONSUMED TIME / ENERGY DISTRIBUTION\n";
    o << "window: " << r.window << " ticks (" << r.tick_us << " us/tick)\n";
    const auto row = [&](std::string_view id, std::string_view name, std::string_view cet, std::string_view tp,
                         std::string_view cee, std::string_view ep) {
        o << std::left << std::setw(static_cast<int>(id_w)) << id << std::setw(static_cast<int>(name_w) + 2) << name << std::right
          << std::setw(10) << cet << std::setw(9) << tp << std::setw(16) << cee << std::setw(10) << ep << '\n';
    };
    row("id", "name", "cet", "time%", "cee_mJ", "energy%");
    for (const auto& s : r.threads) {
        row(std::to_string(s.id), s.name, std::to_string(s.cet), fixed(s.time_pct, 2), s.cee.to_string(),
            fixed(s.energy_pct, 2));
    }
    row("total", "", std::to_string(r.total_cet), r.total_cet ? "100.00" : "0.00", r.total_cee.to_string(),
        r.total_cee.microjoules() ? "100.00" : "0.00");
    o << "battery: " << fixed(Battery{r.capacity}.watt_hours(), 3) << " Wh (" << r.capacity.to_string()
      << " mJ), consumed " << r.total_cee.to_string() << " mJ, remaining " << fixed(r.remaining_fraction * 100, 7)
      << " %\n";
    o << "average power: " << fixed(r.average_power_mw, 6) << " mW\n";
    if (r.lifespan_ticks) {
        o << "projected lifespan: " << fixed(*r.lifespan_ticks, 2) << " ticks (" << fixed(*r.lifespan_hours, 4)
          << " h)\n";
    } else {
        o << "projected lifespan: unbounded (no energy consumed)\n";
    }
    return o.str();
}

std::string render_json_report(const DistributionReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["window_ticks"] = r.window;
    j["tick_us"] = r.tick_us;
    ordered_json threads = ordered_json::array();
    for (const auto& s : r.threads) {
        threads.push_back({{"id", s.id},
                           {"name", s.name},
                           {"cet_ticks", s.cet},
                           {"cee_uj", s.cee.microjoules()},
                           {"cee_mj", s.cee.to_string()},
                           {"time_pct", s.time_pct},
                           {"energy_pct", s.energy_pct}});
    }
    j["threads"] = std::move(threads);
    j["total_cet_ticks"] = r.total_cet;
    j["total_cee_uj"] = r.total_cee.microjoules();
    j["total_cee_mj"] = r.total_cee.to_string();
    j["battery"] = {{"capacity_uj", r.capacity.microjoules()},
                    {"capacity_wh", Battery{r.capacity}.watt_hours()},
                    {"remaining_fraction", r.remaining_fraction}};
    j["average_power_mw"] = r.average_power_mw;
    j["lifespan_ticks"] = r.lifespan_ticks ? ordered_json(*r.lifespan_ticks) : ordered_json(nullptr);
    j["lifespan_hours"] = r.lifespan_hours ? ordered_json(*r.lifespan_hours) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

// --- gantt ------------------------------------------------------------------------------

Gantt build_gantt(const std::vector<TraceRecord>& records, Tick from, Tick to) {
    if (to < from) fail(ErrorCode::Validation, "gantt range ends before it starts");
    std::vector<const TraceRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TraceRecord* a, const TraceRecord* b) { return a->tick_start < b->tick_start; });

    Gantt g;
    g.from = from;
    g.to = to;
    std::map<ThreadId, GanttRow> rows;
    std::map<ThreadId, Tick> last_end;
    std::set<ThreadId> handlers;
    for (const auto* r : sorted) {
        if (is_handler_context(r->context)) handlers.insert(r->thread_id);
    }
    const TraceRecord* runner = nullptr;
    Tick covered = from;
    for (const auto* r : sorted) {
        auto& row = rows[r->thread_id];
        row.id = r->thread_id;
        row.name = r->thread_name;
        const bool empty = r->tick_end == r->tick_start;
        if (!empty) {
            if (runner && r->tick_start < runner->tick_end) {
                fail(ErrorCode::DataIntegrity, runner->thread_name + " and " + r->thread_name + " both run at tick " +
                                                   std::to_string(r->tick_start));
            }
            runner = r;
        }
        if (r->event == EventKind::ReturnFromPreemption) {
            if (auto it = last_end.find(r->thread_id); it != last_end.end() && it->second >= from && it->second < to) {
                g.marks.push_back({it->second, MarkKind::Preemption, r->thread_id});
            }
        }
        if (handlers.contains(r->thread_id) && r->event == EventKind::Startup && r->tick_start >= from &&
            r->tick_start < to) {
            g.marks.push_back({r->tick_start, MarkKind::InterruptEntry, r->thread_id});
        }
        if (!empty) last_end[r->thread_id] = r->tick_end;

        const Tick s = std::max(r->tick_start, from);
        const Tick e = std::min(r->tick_end, to);
        if (s >= e) continue;
        if (s > covered) g.gaps.push_back({covered, s});
        covered = std::max(covered, e);
        auto& regions = row.regions;
        if (!regions.empty() && regions.back().end == s && regions.back().context == r->context &&
            regions.back().label == r->label) {
            regions.back().end = e;
        } else {
            regions.push_back({s, e, r->context, r->label});
        }
    }
    if (covered < to) g.gaps.push_back({covered, to});
    for (auto& [id, row] : rows) g.rows.push_back(std::move(row));
    std::stable_sort(g.marks.begin(), g.marks.end(), [](const Mark& a, const Mark& b) { return a.tick < b.tick; });
    return g;
}

char context_glyph(ContextKind c) noexcept {
    switch (c) {
        case ContextKind::Startup: return 'S';
        case ContextKind::Task: return '#';
        case ContextKind::Svc: return '=';
        case ContextKind::CycHandler: return 'C';
        case ContextKind::AlmHandler: return 'A';
        case ContextKind::Isr: return '!';
        case ContextKind::Bfm: return 'b';
        case ContextKind::Idle: return '.';
    }
    return '?';
}

std::string render_gantt_text(const Gantt& g, Tick ticks_per_column) {
    if (ticks_per_column == 0) fail(ErrorCode::Validation, "ticks per column must be positive");
    const Tick span = g.to - g.from;
    const std::size_t columns = static_cast<std::size_t>((span + ticks_per_column - 1) / ticks_per_column);
    std::size_t name_w = 5;
    for (const auto& row : g.rows) name_w = std::max(name_w, row.name.size());
    const auto column_of = [&](Tick t) { return static_cast<std::size_t>((t - g.from) / ticks_per_column); };

    std::ostringstream o;
    o << "GANTT [" << g.from << ", " << g.to << ") " << ticks_per_column << " tick(s)/column\n";
    o << "legend:";
    for (auto c : kAllContexts) o << ' ' << context_glyph(c) << '=' << sim::to_string(c);
    o << "  marks: P=preemption I=interrupt entry *=both\n";

    std::string ruler(columns, ' ');
    for (std::size_t c = 0; c < columns; c += 10) {
        const std::string label = std::to_string(g.from + c * ticks_per_column);
        for (std::size_t i = 0; i < label.size() && c + i < columns; ++i) ruler[c + i] = label[i];
    }
    o << std::string(name_w, ' ') << " |" << ruler << "|\n";

    for (const auto& row : g.rows) {
        std::vector<std::array<Tick, kAllContexts.size()>> load(columns, std::array<Tick, kAllContexts.size()>{});
        for (const auto& reg : row.regions) {
            for (Tick t = reg.start; t < reg.end; ++t) ++load[column_of(t)][static_cast<std::size_t>(reg.context)];
        }
        std::string line(columns, ' ');
        for (std::size_t c = 0; c < columns; ++c) {
            const auto best = std::max_element(load[c].begin(), load[c].end());
            if (*best > 0) line[c] = context_glyph(static_cast<ContextKind>(best - load[c].begin()));
        }
        o << std::left << std::setw(static_cast<int>(name_w)) << row.name << " |" << line << "|\n";
    }

    std::string marks(columns, ' ');
    for (const auto& m : g.marks) {
        char& slot = marks[column_of(m.tick)];
        const char want = m.kind == MarkKind::Preemption ? 'P' : 'I';
        slot = (slot == ' ' || slot == want) ? want : '*';
    }
    o << std::left << std::setw(static_cast<int>(name_w)) << "marks" << " |" << marks << "|\n";
    if (!g.gaps.empty()) {
        o << "unattributed:";
        for (const auto& [s, e] : g.gaps) o << " [" << s << ", " << e << ")";
        o << '\n';
    }
    return o.str();
}

std::string render_gantt_svg(const Gantt& g) {
    const Tick span = std::max<Tick>(g.to - g.from, 1);
    const Tick px = std::clamp<Tick>(1000 / span, 1, 20);
    const Tick left = 90;
    const Tick row_h = 22;
    const Tick top = 30;
    const Tick width = left + span * px + 20;
    const Tick height = top + g.rows.size() * row_h + 50;
    const auto x_of = [&](Tick t) { return left + (t - g.from) * px; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"monospace\" font-size=\"11\">\n<defs>\n";
    for (auto c : kAllContexts) {
        const auto st = style_of(c);
        o << "<pattern id=\"" << st.id << "\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
          << "<rect width=\"6\" height=\"6\" fill=\"" << st.color << "\"/>";
        if (*st.hatch) o << "<path d=\"" << st.hatch << "\" stroke=\"#000\" stroke-opacity=\"0.4\"/>";
        o << "</pattern>\n";
    }
    o << "</defs>\n";
    o << "<text x=\"4\" y=\"16\">GANTT [" << g.from << ", " << g.to << ")</text>\n";
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        const auto& row = g.rows[i];
        const Tick y = top + i * row_h;
        o << "<text x=\"4\" y=\"" << y + 15 << "\">" << xml_escape(row.name) << "</text>\n";
        for (const auto& reg : row.regions) {
            o << "<rect x=\"" << x_of(reg.start) << "\" y=\"" << y + 2 << "\" width=\"" << (reg.end - reg.start) * px
              << "\" height=\"" << row_h - 4 << "\" fill=\"url(#" << style_of(reg.context).id << ")\"><title>"
              << xml_escape(row.name) << ' ' << xml_escape(reg.label) << " [" << reg.start << ", " << reg.end
              << ")</title></rect>\n";
        }
    }
    const Tick bottom = top + g.rows.size() * row_h;
    for (const auto& m : g.marks) {
        const bool pre = m.kind == MarkKind::Preemption;
        o << "<line x1=\"" << x_of(m.tick) << "\" y1=\"" << top << "\" x2=\"" << x_of(m.tick) << "\" y2=\"" << bottom
          << "\" stroke=\"" << (pre ? "#d50000" : "#0d47a1") << "\"" << (pre ? "" : " stroke-dasharray=\"3,2\"")
          << "/>\n";
    }
    Tick lx = left;
    for (auto c : kAllContexts) {
        o << "<rect x=\"" << lx << "\" y=\"" << bottom + 16 << "\" width=\"12\" height=\"12\" fill=\"url(#"
          << style_of(c).id << ")\"/><text x=\"" << lx + 16 << "\" y=\"" << bottom + 26 << "\">" << sim::to_string(c)
          << "</text>\n";
        lx += 100;
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace rtk::report
