#include "rtk/kernel/kernel.hpp"

#include <algorithm>
#include <array>

namespace rtk::kernel {

namespace {

constexpr std::array kClassNames{"semaphore", "eventflag", "mutex", "mailbox", "msgbuf", "fixed_pool", "variable_pool"};

bool flag_satisfied(std::uint32_t flag, std::uint32_t pattern, FlagMode mode) noexcept {
    return mode == FlagMode::And ? (flag & pattern) == pattern : (flag & pattern) != 0;
}

bool bad_timeout(const Timeout& t) noexcept { return t && *t == 0; }

}  // namespace

std::string_view to_string(ObjectClass c) noexcept { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<ObjectClass> parse_object_class(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (s == kClassNames[i]) return static_cast<ObjectClass>(i);
    }
    return std::nullopt;
}

std::string_view to_string(WaitKind k) noexcept {
    switch (k) {
        case WaitKind::None: return "none";
        case WaitKind::Sleep: return "sleep";
        case WaitKind::Delay: return "delay";
        case WaitKind::Semaphore: return "semaphore";
        case WaitKind::EventFlag: return "eventflag";
        case WaitKind::MailboxReceive: return "mailbox";
        case WaitKind::BufferSend: return "msgbuf-send";
        case WaitKind::BufferReceive: return "msgbuf-receive";
        case WaitKind::Mutex: return "mutex";
        case WaitKind::FixedPool: return "fixed_pool";
        case WaitKind::VariablePool: return "variable_pool";
    }
    return "?";
}

// --- semaphores ------------------------------------------------------------------

Kernel::Outcome Kernel::do_sig_sem(ThreadId, ID id, int count) {
    auto it = sems_.find(id);
    if (it == sems_.end()) return {E_NOEXS};
    auto& s = it->second;
    if (count <= 0) return {E_PAR};
    if (count > s.max_count - s.count) return {E_QOVR};
    s.count += count;
    grant_semaphore(s);
    return {E_OK};
}

Kernel::Outcome Kernel::do_wai_sem(ThreadId self, ID id, int count, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = sems_.find(id);
    if (it == sems_.end()) return {E_NOEXS};
    auto& s = it->second;
    if (count <= 0 || count > s.max_count || bad_timeout(tmout)) return {E_PAR};
    if (s.waiters.empty() && s.count >= count) {
        s.count -= count;
        return {E_OK};
    }
    s.waiters.push(self);
    return block(self, {.kind = WaitKind::Semaphore, .object = id, .count = count}, tmout);
}

void Kernel::grant_semaphore(Semaphore& s) {
    while (auto head = s.waiters.head(prio_fn())) {
        auto& t = tcb_mut(*head);
        if (t.wait.count > s.count) break;
        s.count -= t.wait.count;
        s.waiters.remove(*head);
        release(t, E_OK);
    }
}

// --- event flags -----------------------------------------------------------------

Kernel::Outcome Kernel::do_set_flg(ID id, std::uint32_t pattern) {
    auto it = flags_.find(id);
    if (it == flags_.end()) return {E_NOEXS};
    auto& f = it->second;
    f.pattern |= pattern;
    for (ThreadId w : f.waiters.ordered(prio_fn())) {
        auto& t = tcb_mut(w);
        if (!flag_satisfied(f.pattern, t.wait.pattern, t.wait.mode)) continue;
        const bool clear = t.wait.clear;
        t.flag_result = f.pattern;
        f.waiters.remove(w);
        if (clear) f.pattern = 0;
        release(t, E_OK);
    }
    return {E_OK};
}

Kernel::Outcome Kernel::do_clr_flg(ID id, std::uint32_t pattern) {
    auto it = flags_.find(id);
    if (it == flags_.end()) return {E_NOEXS};
    it->second.pattern &= pattern;
    return {E_OK};
}

Kernel::Outcome Kernel::do_wai_flg(ThreadId self, ID id, std::uint32_t pattern, FlagMode mode, bool clear,
                                   Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = flags_.find(id);
    if (it == flags_.end()) return {E_NOEXS};
    auto& f = it->second;
    if (pattern == 0 || bad_timeout(tmout)) return {E_PAR};
    if (flag_satisfied(f.pattern, pattern, mode)) {
        tcb_mut(self).flag_result = f.pattern;
        if (clear) f.pattern = 0;
        return {E_OK};
    }
    f.waiters.push(self);
    return block(self, {.kind = WaitKind::EventFlag, .object = id, .pattern = pattern, .mode = mode, .clear = clear},
                 tmout);
}

// --- mailboxes ---------------------------------------------------------------------

Kernel::Outcome Kernel::do_snd_mbx(ID id, Message message) {
    auto it = mbxs_.find(id);
    if (it == mbxs_.end()) return {E_NOEXS};
    auto& m = it->second;
    if (message.priority < 1) return {E_PAR};
    if (auto head = m.waiters.head(prio_fn())) {
        auto& t = tcb_mut(*head);
        t.message_result = std::move(message);
        m.waiters.remove(*head);
        release(t, E_OK);
        return {E_OK};
    }
    auto pos = std::find_if(m.queue.begin(), m.queue.end(),
                            [&](const auto& e) { return e.second.priority > message.priority; });
    m.queue.insert(pos, {m.next_seq++, std::move(message)});
    return {E_OK};
}

Kernel::Outcome Kernel::do_rcv_mbx(ThreadId self, ID id, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mbxs_.find(id);
    if (it == mbxs_.end()) return {E_NOEXS};
    auto& m = it->second;
    if (bad_timeout(tmout)) return {E_PAR};
    if (!m.queue.empty()) {
        tcb_mut(self).message_result = std::move(m.queue.front().second);
        m.queue.erase(m.queue.begin());
        return {E_OK};
    }
    m.waiters.push(self);
    return block(self, {.kind = WaitKind::MailboxReceive, .object = id}, tmout);
}

// --- message buffers -----------------------------------------------------------------

Kernel::Outcome Kernel::do_snd_mbf(ThreadId self, ID id, std::string bytes, Timeout tmout) {
    auto it = mbfs_.find(id);
    if (it == mbfs_.end()) return {E_NOEXS};
    auto& b = it->second;
    if (bytes.empty() || bytes.size() > b.max_message || bad_timeout(tmout)) return {E_PAR};
    if (b.senders.empty()) {
        if (auto r = b.receivers.head(prio_fn()); r && b.messages.empty()) {
            auto& t = tcb_mut(*r);
            t.bytes_result = std::move(bytes);
            b.receivers.remove(*r);
            release(t, E_OK);
            return {E_OK};
        }
        if (b.capacity - b.used >= bytes.size()) {
            b.used += bytes.size();
            b.messages.push_back(std::move(bytes));
            return {E_OK};
        }
    }
    if (caller_is_handler(self)) return {E_CTX};
    b.senders.push(self);
    return block(self, {.kind = WaitKind::BufferSend, .object = id, .payload = std::move(bytes)}, tmout);
}

Kernel::Outcome Kernel::do_rcv_mbf(ThreadId self, ID id, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mbfs_.find(id);
    if (it == mbfs_.end()) return {E_NOEXS};
    auto& b = it->second;
    if (bad_timeout(tmout)) return {E_PAR};
    if (!b.messages.empty()) {
        auto& t = tcb_mut(self);
        t.bytes_result = std::move(b.messages.front());
        b.messages.pop_front();
        b.used -= t.bytes_result.size();
        admit_senders(b);
        return {E_OK};
    }
    b.receivers.push(self);
    return block(self, {.kind = WaitKind::BufferReceive, .object = id}, tmout);
}

void Kernel::admit_senders(MessageBuffer& b) {
    while (auto head = b.senders.head(prio_fn())) {
        auto& s = tcb_mut(*head);
        const std::size_t size = s.wait.payload.size();
        if (auto r = b.receivers.head(prio_fn()); r && b.messages.empty()) {
            auto& t = tcb_mut(*r);
            t.bytes_result = std::move(s.wait.payload);
            b.receivers.remove(*r);
            release(t, E_OK);
        } else if (b.capacity - b.used >= size) {
            b.used += size;
            b.messages.push_back(std::move(s.wait.payload));
        } else {
            break;
        }
        b.senders.remove(*head);
        release(s, E_OK);
    }
}

// --- mutexes -----------------------------------------------------------------------

Kernel::Outcome Kernel::do_loc_mtx(ThreadId self, ID id, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mtxs_.find(id);
    if (it == mtxs_.end()) return {E_NOEXS};
    auto& m = it->second;
    if (bad_timeout(tmout)) return {E_PAR};
    if (!m.owner) {
        m.owner = self;
        tcb_mut(self).owned_mutexes.push_back(id);
        return {E_OK};
    }
    if (*m.owner == self) return {E_ILUSE};
    m.waiters.push(self);
    const auto out = block(self, {.kind = WaitKind::Mutex, .object = id}, tmout);
    recompute_priority(*m.owner);
    return out;
}

Kernel::Outcome Kernel::do_unl_mtx(ThreadId self, ID id) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mtxs_.find(id);
    if (it == mtxs_.end()) return {E_NOEXS};
    auto& m = it->second;
    if (m.owner != self) return {E_ILUSE};
    auto& owned = tcb_mut(self).owned_mutexes;
    owned.erase(std::remove(owned.begin(), owned.end(), id), owned.end());
    transfer_mutex(m);
    recompute_priority(self);
    return {E_OK};
}

void Kernel::transfer_mutex(Mutex& m) {
    m.owner.reset();
    auto head = m.waiters.head(prio_fn());
    if (!head) return;
    m.waiters.remove(*head);
    m.owner = *head;
    auto& t = tcb_mut(*head);
    t.owned_mutexes.push_back(m.id);
    release(t, E_OK);
    recompute_priority(*head);
}

void Kernel::recompute_priority(ThreadId id) {
    const auto& info = engine_.thread(id);
    if (info.state == sim::ThreadState::Dormant) return;
    Priority p = info.base_priority;
    const auto& t = tcb(id);
    for (ID mid : t.owned_mutexes) {
        for (ThreadId w : mtxs_.at(mid).waiters.ordered(prio_fn())) p = std::min(p, prio(w));
    }
    if (p == info.current_priority) return;
    engine_.set_priority(id, p);
    if (t.wait.kind == WaitKind::Mutex) {
        const auto& m = mtxs_.at(t.wait.object);
        if (m.owner) recompute_priority(*m.owner);
    }
}

// --- fixed pools ---------------------------------------------------------------------

Kernel::Outcome Kernel::do_get_mpf(ThreadId self, ID id, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mpfs_.find(id);
    if (it == mpfs_.end()) return {E_NOEXS};
    auto& p = it->second;
    if (bad_timeout(tmout)) return {E_PAR};
    if (p.waiters.empty()) {
        auto slot = std::find(p.owners.begin(), p.owners.end(), std::nullopt);
        if (slot != p.owners.end()) {
            *slot = self;
            ++p.in_use;
            p.high_water = std::max(p.high_water, p.in_use);
            tcb_mut(self).block_result = static_cast<std::size_t>(slot - p.owners.begin());
            return {E_OK};
        }
    }
    p.waiters.push(self);
    return block(self, {.kind = WaitKind::FixedPool, .object = id}, tmout);
}

Kernel::Outcome Kernel::do_rel_mpf(ThreadId self, ID id, std::size_t block_index) {
    auto it = mpfs_.find(id);
    if (it == mpfs_.end()) return {E_NOEXS};
    auto& p = it->second;
    if (block_index >= p.owners.size()) return {E_PAR};
    if (p.owners[block_index] != self) return {E_ILUSE};
    if (auto head = p.waiters.head(prio_fn())) {
        p.owners[block_index] = *head;
        auto& t = tcb_mut(*head);
        t.block_result = block_index;
        p.waiters.remove(*head);
        release(t, E_OK);
    } else {
        p.owners[block_index].reset();
        --p.in_use;
    }
    return {E_OK};
}

// --- variable pools --------------------------------------------------------------------

std::optional<std::size_t> Kernel::fit_variable(VariablePool& p, std::size_t size, ThreadId owner) {
    for (auto it = p.free_list.begin(); it != p.free_list.end(); ++it) {
        if (it->second < size) continue;
        const std::size_t offset = it->first;
        const std::size_t rest = it->second - size;
        p.free_list.erase(it);
        if (rest > 0) p.free_list[offset + size] = rest;
        p.allocated[offset] = {size, owner};
        p.used += size;
        p.high_water = std::max(p.high_water, p.used);
        return offset;
    }
    return std::nullopt;
}

Kernel::Outcome Kernel::do_get_mpl(ThreadId self, ID id, std::size_t size, Timeout tmout) {
    if (caller_is_handler(self)) return {E_CTX};
    auto it = mpls_.find(id);
    if (it == mpls_.end()) return {E_NOEXS};
    auto& p = it->second;
    if (size == 0 || size > p.total || bad_timeout(tmout)) return {E_PAR};
    if (p.waiters.empty()) {
        if (auto off = fit_variable(p, size, self)) {
            tcb_mut(self).block_result = *off;
            return {E_OK};
        }
    }
    p.waiters.push(self);
    return block(self, {.kind = WaitKind::VariablePool, .object = id, .size = size}, tmout);
}

Kernel::Outcome Kernel::do_rel_mpl(ThreadId self, ID id, std::size_t offset) {
    auto it = mpls_.find(id);
    if (it == mpls_.end()) return {E_NOEXS};
    auto& p = it->second;
    auto a = p.allocated.find(offset);
    if (a == p.allocated.end()) return {E_PAR};
    if (a->second.owner != self) return {E_ILUSE};
    std::size_t start = offset;
    std::size_t size = a->second.size;
    p.used -= size;
    p.allocated.erase(a);

    auto next = p.free_list.lower_bound(start);
    if (next != p.free_list.end() && next->first == start + size) {
        size += next->second;
        next = p.free_list.erase(next);
    }
    if (next != p.free_list.begin()) {
        auto prev = std::prev(next);
        if (prev->first + prev->second == start) {
            start = prev->first;
            size += prev->second;
            p.free_list.erase(prev);
        }
    }
    p.free_list[start] = size;
    grant_variable_pool(p);
    return {E_OK};
}

void Kernel::grant_variable_pool(VariablePool& p) {
    while (auto head = p.waiters.head(prio_fn())) {
        auto& t = tcb_mut(*head);
        auto off = fit_variable(p, t.wait.size, *head);
        if (!off) break;
        t.block_result = *off;
        p.waiters.remove(*head);
        release(t, E_OK);
    }
}

// --- deletion and detaching ---------------------------------------------------------------

Kernel::Outcome Kernel::do_del_obj(ObjectClass cls, ID id) {
    auto flush = [this](WaitQueue& q) {
        for (ThreadId w : q.ordered(prio_fn())) {
            q.remove(w);
            release(tcb_mut(w), E_DLT);
        }
    };
    switch (cls) {
        case ObjectClass::Semaphore: {
            auto it = sems_.find(id);
            if (it == sems_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            sems_.erase(it);
            break;
        }
        case ObjectClass::EventFlag: {
            auto it = flags_.find(id);
            if (it == flags_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            flags_.erase(it);
            break;
        }
        case ObjectClass::Mailbox: {
            auto it = mbxs_.find(id);
            if (it == mbxs_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            mbxs_.erase(it);
            break;
        }
        case ObjectClass::MessageBuffer: {
            auto it = mbfs_.find(id);
            if (it == mbfs_.end()) return {E_NOEXS};
            flush(it->second.senders);
            flush(it->second.receivers);
            mbfs_.erase(it);
            break;
        }
        case ObjectClass::Mutex: {
            auto it = mtxs_.find(id);
            if (it == mtxs_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            const auto owner = it->second.owner;
            if (owner) {
                auto& owned = tcb_mut(*owner).owned_mutexes;
                owned.erase(std::remove(owned.begin(), owned.end(), id), owned.end());
            }
            mtxs_.erase(it);
            if (owner) recompute_priority(*owner);
            break;
        }
        case ObjectClass::FixedPool: {
            auto it = mpfs_.find(id);
            if (it == mpfs_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            mpfs_.erase(it);
            break;
        }
        case ObjectClass::VariablePool: {
            auto it = mpls_.find(id);
            if (it == mpls_.end()) return {E_NOEXS};
            flush(it->second.waiters);
            mpls_.erase(it);
            break;
        }
    }
    return {E_OK};
}

void Kernel::detach_from_object(TaskControlBlock& t) {
    const ID id = t.wait.object;
    const ThreadId self = t.id;
    switch (t.wait.kind) {
        case WaitKind::None:
        case WaitKind::Sleep:
        case WaitKind::Delay: break;
        case WaitKind::Semaphore: {
            auto& s = sems_.at(id);
            s.waiters.remove(self);
            t.wait.kind = WaitKind::None;
            grant_semaphore(s);
            break;
        }
        case WaitKind::EventFlag: flags_.at(id).waiters.remove(self); break;
        case WaitKind::MailboxReceive: mbxs_.at(id).waiters.remove(self); break;
        case WaitKind::BufferSend: {
            auto& b = mbfs_.at(id);
            b.senders.remove(self);
            t.wait.kind = WaitKind::None;
            admit_senders(b);
            break;
        }
        case WaitKind::BufferReceive: mbfs_.at(id).receivers.remove(self); break;
        case WaitKind::Mutex: {
            auto& m = mtxs_.at(id);
            m.waiters.remove(self);
            t.wait.kind = WaitKind::None;
            if (m.owner) recompute_priority(*m.owner);
            break;
        }
        case WaitKind::FixedPool: mpfs_.at(id).waiters.remove(self); break;
        case WaitKind::VariablePool: {
            auto& p = mpls_.at(id);
            p.waiters.remove(self);
            t.wait.kind = WaitKind::None;
            grant_variable_pool(p);
            break;
        }
    }
    t.wait.kind = WaitKind::None;
}

}  // namespace rtk::kernel
