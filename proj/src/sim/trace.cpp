#include "rtk/sim/error.hpp"
#include "rtk/sim/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace rtk::sim {

std::string_view to_string(KernelEventType t) noexcept {
    switch (t) {
        case KernelEventType::Start: return "START";
        case KernelEventType::Dispatch: return "DISPATCH";
        case KernelEventType::Preempt: return "PREEMPT";
        case KernelEventType::InterruptEnter: return "INT_ENTER";
        case KernelEventType::InterruptReturn: return "INT_RETURN";
        case KernelEventType::CriticalBegin: return "CRIT_BEGIN";
        case KernelEventType::CriticalEnd: return "CRIT_END";
        case KernelEventType::Block: return "BLOCK";
        case KernelEventType::Release: return "RELEASE";
        case KernelEventType::Exit: return "EXIT";
        case KernelEventType::Stop: return "STOP";
    }
    return "?";
}

namespace {

void append_field(std::string& out, std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

template <typename T>
T to_number(const std::string& s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        fail(ErrorCode::DataIntegrity, "bad numeric field in trace: '" + s + "'");
    }
    return v;
}

}  // namespace

std::string to_csv_line(const TraceRecord& r) {
    std::string out;
    out += std::to_string(r.tick_start);
    out += ',';
    out += std::to_string(r.tick_end);
    out += ',';
    out += std::to_string(r.thread_id);
    out += ',';
    append_field(out, r.thread_name);
    out += ',';
    out += to_string(r.context);
    out += ',';
    append_field(out, r.label);
    out += ',';
    out += std::to_string(r.etm_ticks);
    out += ',';
    out += r.eem.to_string();
    out += ',';
    out += to_string(r.event);
    return out;
}

TraceRecord parse_csv_line(std::string_view line) {
    const auto f = split_csv(line);
    if (f.size() != 9) fail(ErrorCode::DataIntegrity, "trace line must have 9 fields: " + std::string(line));
    TraceRecord r;
    r.tick_start = to_number<Tick>(f[0]);
    r.tick_end = to_number<Tick>(f[1]);
    r.thread_id = to_number<ThreadId>(f[2]);
    r.thread_name = f[3];
    auto ctx = parse_context_kind(f[4]);
    if (!ctx) fail(ErrorCode::DataIntegrity, "unknown context kind '" + f[4] + "'");
    r.context = *ctx;
    r.label = f[5];
    r.etm_ticks = to_number<Tick>(f[6]);
    auto e = Energy::parse(f[7]);
    if (!e) fail(ErrorCode::DataIntegrity, "bad energy '" + f[7] + "'");
    r.eem = *e;
    auto ev = parse_event_kind(f[8]);
    if (!ev) fail(ErrorCode::DataIntegrity, "unknown event kind '" + f[8] + "'");
    r.event = *ev;
    return r;
}

std::vector<TraceRecord> parse_trace_csv(std::istream& in) {
    std::vector<TraceRecord> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == kTraceCsvHeader) continue;
        }
        out.push_back(parse_csv_line(line));
    }
    return out;
}

std::string to_csv_line(const KernelEvent& e) {
    std::string out;
    out += std::to_string(e.tick);
    out += ',';
    out += to_string(e.type);
    out += ',';
    out += std::to_string(e.thread_id);
    out += ',';
    append_field(out, e.thread_name);
    out += ',';
    out += std::to_string(e.other);
    out += ',';
    out += std::to_string(e.value);
    return out;
}

CsvTraceWriter::CsvTraceWriter(std::ostream& out) : out_(&out) { *out_ << kTraceCsvHeader << '\n'; }

void CsvTraceWriter::on_segment(const TraceRecord& record) { *out_ << to_csv_line(record) << '\n'; }

CsvEventWriter::CsvEventWriter(std::ostream& out) : out_(&out) { *out_ << kEventCsvHeader << '\n'; }

void CsvEventWriter::on_event(const KernelEvent& event) { *out_ << to_csv_line(event) << '\n'; }

}  // namespace rtk::sim
