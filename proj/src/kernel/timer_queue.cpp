#include "rtk/kernel/er.hpp"
#include "rtk/kernel/timer_queue.hpp"

#include <array>

namespace rtk::kernel {

namespace {

constexpr std::array<std::pair<ER, std::string_view>, 10> kNames{{
    {E_OK, "E_OK"},
    {E_PAR, "E_PAR"},
    {E_CTX, "E_CTX"},
    {E_ILUSE, "E_ILUSE"},
    {E_NOMEM, "E_NOMEM"},
    {E_OBJ, "E_OBJ"},
    {E_NOEXS, "E_NOEXS"},
    {E_QOVR, "E_QOVR"},
    {E_TMOUT, "E_TMOUT"},
    {E_DLT, "E_DLT"},
}};

}  // namespace

std::string_view er_name(ER er) noexcept {
    for (const auto& [code, name] : kNames) {
        if (code == er) return name;
    }
    return "E_???";
}

std::optional<ER> parse_er(std::string_view name) noexcept {
    for (const auto& [code, n] : kNames) {
        if (n == name) return code;
    }
    return std::nullopt;
}

std::string_view to_string(TimerKind k) noexcept {
    switch (k) {
        case TimerKind::CyclicFire: return "cyclic";
        case TimerKind::AlarmFire: return "alarm";
        case TimerKind::DelayExpiry: return "delay";
        case TimerKind::TimeoutExpiry: return "timeout";
    }
    return "?";
}

TimerQueue::Handle TimerQueue::insert(Tick due, TimerKind kind, std::uint32_t target, Tick period) {
    const auto seq = next_seq_++;
    const Key key{due, seq};
    events_.emplace(key, TimerEvent{due, kind, target, period, seq});
    index_.emplace(seq, key);
    ++stats_.inserted;
    return seq;
}

bool TimerQueue::cancel(Handle h) {
    auto it = index_.find(h);
    if (it == index_.end()) return false;
    events_.erase(it->second);
    index_.erase(it);
    ++stats_.cancelled;
    return true;
}

std::optional<TimerEvent> TimerQueue::pop_due(Tick now) {
    if (events_.empty() || events_.begin()->first.first > now) return std::nullopt;
    auto node = events_.extract(events_.begin());
    index_.erase(node.mapped().seq);
    ++stats_.processed;
    return node.mapped();
}

std::optional<Tick> TimerQueue::next_due() const {
    if (events_.empty()) return std::nullopt;
    return events_.begin()->first.first;
}

std::vector<TimerEvent> TimerQueue::snapshot() const {
    std::vector<TimerEvent> out;
    out.reserve(events_.size());
    for (const auto& [_, e] : events_) out.push_back(e);
    return out;
}

}  // namespace rtk::kernel
