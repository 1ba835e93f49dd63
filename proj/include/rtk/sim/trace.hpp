#pragma once

#include "rtk/sim/energy.hpp"
#include "rtk/sim/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rtk::sim {

/// One contiguous execution segment of a thread.
struct TraceRecord {
    Tick tick_start = 0;
    Tick tick_end = 0;
    ThreadId thread_id = 0;
    std::string thread_name;
    ContextKind context = ContextKind::Task;
    std::string label;
    Tick etm_ticks = 0;
    Energy eem;
    EventKind event = EventKind::ContinueRun;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class KernelEventType : std::uint8_t {
    Start,
    Dispatch,
    Preempt,
    InterruptEnter,
    InterruptReturn,
    CriticalBegin,
    CriticalEnd,
    Block,
    Release,
    Exit,
    Stop,
};

std::string_view to_string(KernelEventType t) noexcept;

/// Scheduling event emitted on the report channel. `other` names the
/// interrupted thread for InterruptEnter; `value` carries the critical depth
/// or the released event kind.
struct KernelEvent {
    Tick tick = 0;
    KernelEventType type = KernelEventType::Dispatch;
    ThreadId thread_id = 0;
    std::string thread_name;
    ThreadId other = 0;
    int value = 0;

    friend bool operator==(const KernelEvent&, const KernelEvent&) = default;
};

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void on_segment(const TraceRecord& record) = 0;
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void on_event(const KernelEvent& event) = 0;
};

class TraceRecorder final : public TraceSink {
public:
    void on_segment(const TraceRecord& record) override { records_.push_back(record); }
    const std::vector<TraceRecord>& records() const noexcept { return records_; }

private:
    std::vector<TraceRecord> records_;
};

class EventRecorder final : public EventSink {
public:
    void on_event(const KernelEvent& event) override { events_.push_back(event); }
    const std::vector<KernelEvent>& events() const noexcept { return events_; }

private:
    std::vector<KernelEvent> events_;
};

/// Fan-out to several sinks, so one channel can feed a recorder and a file.
class TraceTee final : public TraceSink {
public:
    void add(TraceSink& sink) { sinks_.push_back(&sink); }
    void on_segment(const TraceRecord& record) override {
        for (auto* s : sinks_) s->on_segment(record);
    }

private:
    std::vector<TraceSink*> sinks_;
};

class EventTee final : public EventSink {
public:
    void add(EventSink& sink) { sinks_.push_back(&sink); }
    void on_event(const KernelEvent& event) override {
        for (auto* s : sinks_) s->on_event(event);
    }

private:
    std::vector<EventSink*> sinks_;
};

// CSV trace: tick_start,tick_end,thread_id,thread_name,context_kind,label,etm_ticks,eem_mJ,event_kind
inline constexpr std::string_view kTraceCsvHeader =
    "tick_start,tick_end,thread_id,thread_name,context_kind,label,etm_ticks,eem_mJ,event_kind";
std::string to_csv_line(const TraceRecord& r);
TraceRecord parse_csv_line(std::string_view line);
std::vector<TraceRecord> parse_trace_csv(std::istream& in);

inline constexpr std::string_view kEventCsvHeader = "tick,event,thread_id,thread_name,other,value";
std::string to_csv_line(const KernelEvent& e);

/// Streams records as CSV lines (header first).
class CsvTraceWriter final : public TraceSink {
public:
    explicit CsvTraceWriter(std::ostream& out);
    void on_segment(const TraceRecord& record) override;

private:
    std::ostream* out_;
};

class CsvEventWriter final : public EventSink {
public:
    explicit CsvEventWriter(std::ostream& out);
    void on_event(const KernelEvent& event) override;

private:
    std::ostream* out_;
};

}  // namespace rtk::sim
