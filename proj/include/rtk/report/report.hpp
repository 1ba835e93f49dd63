#pragma once

#include "rtk/sim/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtk::report {

using sim::ContextKind;
using sim::Energy;
using sim::EventKind;
using sim::ThreadId;
using sim::Tick;
using sim::TraceRecord;

struct Battery {
    Energy capacity = Energy::from_millijoules(36'000'000);  // 10 Wh

    /// Rounds to the nearest microjoule; throws Validation for non-positive capacity.
    static Battery from_watt_hours(double wh);
    double watt_hours() const noexcept { return static_cast<double>(capacity.microjoules()) / 3.6e9; }
};

struct ThreadShare {
    ThreadId id = 0;
    std::string name;
    Tick cet = 0;
    Energy cee;
    double time_pct = 0;
    double energy_pct = 0;
};

struct DistributionReport {
    Tick window = 0;
    std::uint32_t tick_us = sim::kDefaultTickUs;
    std::vector<ThreadShare> threads;  // ascending id
    Tick total_cet = 0;
    Energy total_cee;
    Energy capacity;
    double remaining_fraction = 1.0;
    double average_power_mw = 0;
    std::optional<double> lifespan_ticks;  // empty when nothing was consumed
    std::optional<double> lifespan_hours;
};

/// Aggregates the records of the window [0, window).
DistributionReport distribution_report(const std::vector<TraceRecord>& records, Tick window,
                                       std::uint32_t tick_us = sim::kDefaultTickUs, const Battery& battery = {});

std::string render_text_report(const DistributionReport& r);
std::string render_json_report(const DistributionReport& r);

// --- gantt --------------------------------------------------------------------------------

struct Region {
    Tick start = 0;
    Tick end = 0;
    ContextKind context = ContextKind::Task;
    std::string label;
    friend bool operator==(const Region&, const Region&) = default;
};

enum class MarkKind : std::uint8_t { Preemption, InterruptEntry };

struct Mark {
    Tick tick = 0;
    MarkKind kind = MarkKind::Preemption;
    ThreadId thread = 0;
    friend bool operator==(const Mark&, const Mark&) = default;
};

struct GanttRow {
    ThreadId id = 0;
    std::string name;
    std::vector<Region> regions;
};

struct Gantt {
    Tick from = 0;
    Tick to = 0;
    std::vector<GanttRow> rows;  // ascending id
    std::vector<Mark> marks;     // ascending tick
    std::vector<std::pair<Tick, Tick>> gaps;  // ticks nobody ran
};

/// Clips records to [from, to). Overlapping non-empty records raise DataIntegrity.
Gantt build_gantt(const std::vector<TraceRecord>& records, Tick from, Tick to);

char context_glyph(ContextKind c) noexcept;
std::string render_gantt_text(const Gantt& g, Tick ticks_per_column = 1);
std::string render_gantt_svg(const Gantt& g);

}  // namespace rtk::report
