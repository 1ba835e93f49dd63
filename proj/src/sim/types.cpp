#include "rtk/sim/energy.hpp"
#include "rtk/sim/error.hpp"
#include "rtk/sim/types.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace rtk {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Usage: return "usage";
        case ErrorCode::Validation: return "validation";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::Consistency: return "consistency";
        case ErrorCode::Protocol: return "protocol";
        case ErrorCode::StateMachine: return "state-machine";
        case ErrorCode::SchedulerEmpty: return "scheduler-empty";
        case ErrorCode::Underflow: return "underflow";
        case ErrorCode::ObjectState: return "object-state";
        case ErrorCode::Device: return "device";
        case ErrorCode::Configuration: return "configuration";
        case ErrorCode::DataIntegrity: return "data-integrity";
    }
    return "unknown";
}

}  // namespace rtk

namespace rtk::sim {

namespace {

constexpr std::array kEventNames{"STARTUP", "CONTINUE", "RET_PREEMPT", "RET_INT", "SLEEP_ARRIVAL"};
constexpr std::array kContextNames{"STARTUP", "TASK", "SVC", "CYC_HANDLER", "ALM_HANDLER", "ISR", "BFM", "IDLE"};
constexpr std::array kStateCodes{"NON", "DMT", "RDY", "RUN", "WAI", "SUS", "WAS"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<const char*, N>& names, std::string_view s) noexcept {
    for (std::size_t i = 0; i < N; ++i) {
        if (s == names[i]) return static_cast<Enum>(i);
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(EventKind k) noexcept { return kEventNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(ContextKind c) noexcept { return kContextNames[static_cast<std::size_t>(c)]; }
std::string_view state_code(ThreadState s) noexcept { return kStateCodes[static_cast<std::size_t>(s)]; }

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept { return lookup<EventKind>(kEventNames, s); }
std::optional<ContextKind> parse_context_kind(std::string_view s) noexcept {
    return lookup<ContextKind>(kContextNames, s);
}
std::optional<ThreadState> parse_state_code(std::string_view s) noexcept {
    return lookup<ThreadState>(kStateCodes, s);
}

std::string_view to_string(ThreadKind k) noexcept {
    switch (k) {
        case ThreadKind::Task: return "task";
        case ThreadKind::CyclicHandler: return "cyclic";
        case ThreadKind::AlarmHandler: return "alarm";
        case ThreadKind::InterruptHandler: return "isr";
    }
    return "?";
}

std::string_view to_string(ThreadState s) noexcept {
    switch (s) {
        case ThreadState::NonExistent: return "NonExistent";
        case ThreadState::Dormant: return "Dormant";
        case ThreadState::Ready: return "Ready";
        case ThreadState::Running: return "Running";
        case ThreadState::Waiting: return "Waiting";
        case ThreadState::Suspended: return "Suspended";
        case ThreadState::WaitingSuspended: return "WaitingSuspended";
    }
    return "?";
}

std::string_view to_string(Place p) noexcept {
    switch (p) {
        case Place::PreDispatch: return "PreDispatch";
        case Place::Running: return "Running";
        case Place::Blocked: return "Blocked";
        case Place::Done: return "Done";
    }
    return "?";
}

std::optional<Energy> Energy::parse(std::string_view text) noexcept {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    // Trailing zeros beyond microjoule resolution are harmless.
    while (frac.size() > 3 && frac.back() == '0') frac.remove_suffix(1);
    if (frac.size() > 3) return std::nullopt;

    std::int64_t mj = 0;
    if (!whole.empty()) {
        auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), mj);
        if (ec != std::errc{} || p != whole.data() + whole.size()) return std::nullopt;
    }
    std::int64_t uj_frac = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        uj_frac *= 10;
        if (i < frac.size()) {
            const char c = frac[i];
            if (c < '0' || c > '9') return std::nullopt;
            uj_frac += c - '0';
        }
    }
    const std::int64_t uj = mj * 1000 + uj_frac;
    return Energy{negative ? -uj : uj};
}

std::string Energy::to_string() const {
    const std::int64_t mag = uj_ < 0 ? -uj_ : uj_;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%03lld", uj_ < 0 ? "-" : "", static_cast<long long>(mag / 1000),
                  static_cast<long long>(mag % 1000));
    return buf;
}

}  // namespace rtk::sim
