#include "rtk/bfm/bfm.hpp"

#include <algorithm>
#include <array>
#include <ostream>

namespace rtk::bfm {

namespace {

constexpr std::array kKindNames{"memory", "serial", "parallel", "intc", "rtc"};

std::string where(const Device& d, std::string_view access) { return d.spec.name + "." + std::string(access); }

void put_le(Bytes& out, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::string_view to_string(DeviceKind k) noexcept { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<DeviceKind> parse_device_kind(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (s == kKindNames[i]) return static_cast<DeviceKind>(i);
    }
    return std::nullopt;
}

const std::vector<std::string>& supported_accesses(DeviceKind k) {
    static const std::vector<std::string> memory{"read", "write"};
    static const std::vector<std::string> serial{"read", "write", "status"};
    static const std::vector<std::string> parallel{"read", "write"};
    static const std::vector<std::string> intc{"enable", "disable", "status", "ack"};
    static const std::vector<std::string> rtc{"read"};
    switch (k) {
        case DeviceKind::Memory: return memory;
        case DeviceKind::SerialIO: return serial;
        case DeviceKind::ParallelIO: return parallel;
        case DeviceKind::InterruptController: return intc;
        case DeviceKind::Rtc: return rtc;
    }
    return rtc;
}

std::string to_hex(const Bytes& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Bytes parse_hex(std::string_view text) {
    const auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        fail(ErrorCode::Validation, "bad hex digit in \"" + std::string(text) + "\"");
    };
    if (text.size() % 2 != 0) fail(ErrorCode::Validation, "odd-length hex string \"" + std::string(text) + "\"");
    Bytes out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(nibble(text[i]) << 4 | nibble(text[i + 1])));
    }
    return out;
}

Bfm::Bfm(kernel::Kernel& kernel, std::uint64_t cycles_per_tick) : kernel_(kernel), cycles_per_tick_(cycles_per_tick) {
    if (cycles_per_tick == 0) fail(ErrorCode::Validation, "cycles_per_tick must be at least 1");
}

void Bfm::add_device(DeviceSpec spec) {
    if (spec.name.empty()) fail(ErrorCode::Validation, "device name must not be empty");
    if (devices_.contains(spec.name)) fail(ErrorCode::Conflict, "device " + spec.name + " already exists");
    const auto& allowed = supported_accesses(spec.kind);
    for (const auto& [name, cost] : spec.accesses) {
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            fail(ErrorCode::Validation, "device " + spec.name + " (" + std::string(to_string(spec.kind)) +
                                            ") has no access named " + name);
        }
    }
    Device d;
    switch (spec.kind) {
        case DeviceKind::Memory:
            if (spec.size == 0 || spec.word == 0) fail(ErrorCode::Validation, "memory " + spec.name + " needs size and word");
            d.memory.assign(spec.size, 0);
            break;
        case DeviceKind::SerialIO:
            if (spec.fifo_capacity == 0) fail(ErrorCode::Validation, "serial " + spec.name + " needs a FIFO");
            break;
        case DeviceKind::ParallelIO:
            if (spec.ports == 0) fail(ErrorCode::Validation, "parallel " + spec.name + " needs at least one port");
            d.out_ports.assign(spec.ports, 0);
            d.in_ports.assign(spec.ports, 0);
            break;
        case DeviceKind::InterruptController:
            if (interrupt_controller()) fail(ErrorCode::Conflict, "only one interrupt controller is supported");
            break;
        case DeviceKind::Rtc: break;
    }
    d.spec = std::move(spec);
    const std::string name = d.spec.name;
    devices_.emplace(name, std::move(d));
}

bool Bfm::has_device(std::string_view name) const { return devices_.find(name) != devices_.end(); }

const Device& Bfm::device(std::string_view name) const {
    auto it = devices_.find(name);
    if (it == devices_.end()) fail(ErrorCode::NotFound, "no device named " + std::string(name));
    return it->second;
}

Device& Bfm::dev(std::string_view name) {
    auto it = devices_.find(name);
    if (it == devices_.end()) fail(ErrorCode::NotFound, "no device named " + std::string(name));
    return it->second;
}

Device* Bfm::interrupt_controller() {
    for (auto& [name, d] : devices_) {
        if (d.spec.kind == DeviceKind::InterruptController) return &d;
    }
    return nullptr;
}

void Bfm::record(const Device& d, std::string_view access, const Bytes& payload) {
    log_.push_back({kernel_.engine().now(), d.spec.name, std::string(access), payload});
}

Bytes Bfm::perform(Device& d, std::string_view access, const BfmRequest& req) {
    Bytes out;
    switch (d.spec.kind) {
        case DeviceKind::Memory: {
            const std::size_t n = access == "write" ? req.data.size() : req.length;
            if (req.address % d.spec.word != 0 || n % d.spec.word != 0) {
                fail(ErrorCode::Device, where(d, access) + ": misaligned access at " + std::to_string(req.address));
            }
            if (req.address + n > d.memory.size()) {
                fail(ErrorCode::Device, where(d, access) + ": access past end of memory");
            }
            if (access == "write") {
                std::copy(req.data.begin(), req.data.end(), d.memory.begin() + req.address);
                record(d, access, req.data);
            } else {
                out.assign(d.memory.begin() + req.address, d.memory.begin() + req.address + n);
                record(d, access, out);
            }
            break;
        }
        case DeviceKind::SerialIO: {
            if (access == "write") {
                if (d.tx.size() + req.data.size() > d.spec.fifo_capacity) {
                    fail(ErrorCode::Device, where(d, access) + ": tx FIFO overflow");
                }
                d.tx.insert(d.tx.end(), req.data.begin(), req.data.end());
                record(d, access, req.data);
            } else if (access == "read") {
                const std::size_t n = std::min(req.length, d.rx.size());
                out.assign(d.rx.begin(), d.rx.begin() + static_cast<std::ptrdiff_t>(n));
                d.rx.erase(d.rx.begin(), d.rx.begin() + static_cast<std::ptrdiff_t>(n));
                record(d, access, out);
            } else {
                out = {static_cast<std::uint8_t>(std::min<std::size_t>(d.rx.size(), 255)),
                       static_cast<std::uint8_t>(std::min<std::size_t>(d.tx.size(), 255))};
                record(d, access, out);
            }
            break;
        }
        case DeviceKind::ParallelIO: {
            if (req.address >= d.spec.ports) {
                fail(ErrorCode::Device, where(d, access) + ": no port " + std::to_string(req.address));
            }
            if (access == "write") {
                if (req.data.size() != 1) fail(ErrorCode::Device, where(d, access) + ": ports are one byte wide");
                d.out_ports[req.address] = req.data[0];
                record(d, access, {static_cast<std::uint8_t>(req.address), req.data[0]});
            } else {
                out = {d.in_ports[req.address]};
                record(d, access, {static_cast<std::uint8_t>(req.address), out[0]});
            }
            break;
        }
        case DeviceKind::InterruptController: {
            const std::uint32_t bit = req.address < 32 ? 1u << req.address : 0;
            if (access != "status" && bit == 0) {
                fail(ErrorCode::Device, where(d, access) + ": no line " + std::to_string(req.address));
            }
            if (access == "enable") {
                d.disabled_lines &= ~bit;
                if (d.pending_lines & bit) {
                    d.pending_lines &= ~bit;
                    kernel_.raise_irq(req.address);
                }
            } else if (access == "disable") {
                d.disabled_lines |= bit;
            } else if (access == "ack") {
                d.pending_lines &= ~bit;
            } else {
                put_le(out, d.pending_lines, 4);
            }
            record(d, access, access == "status" ? out : Bytes{static_cast<std::uint8_t>(req.address)});
            break;
        }
        case DeviceKind::Rtc:
            put_le(out, kernel_.engine().now(), 8);
            record(d, access, out);
            break;
    }
    return out;
}

sim::Co<BfmResponse> Bfm::call(ThreadId self, std::string device, std::string access, BfmRequest request) {
    auto& d = dev(device);
    auto cost = d.spec.accesses.find(access);
    if (cost == d.spec.accesses.end()) fail(ErrorCode::NotFound, "device " + device + " has no access " + access);
    BfmResponse response;
    response.data = perform(d, access, request);
    response.ticks = ticks_for(cost->second.cycles);
    response.energy = cost->second.energy;
    ++d.access_counts[access];
    const sim::Annotation charge{device + "." + access, response.ticks, response.energy};
    co_await kernel_.engine().wait(self, charge, sim::ContextKind::Bfm);
    co_return response;
}

void Bfm::schedule(Stimulus s) {
    if (s.at < kernel_.engine().now()) fail(ErrorCode::Validation, "stimulus scheduled in the past");
    auto pos = std::upper_bound(stimuli_.begin() + static_cast<std::ptrdiff_t>(next_stimulus_), stimuli_.end(), s.at,
                                [](Tick at, const Stimulus& x) { return at < x.at; });
    stimuli_.insert(pos, std::move(s));
}

void Bfm::validate_stimuli() const {
    for (const auto& s : stimuli_) {
        const std::string at = " at tick " + std::to_string(s.at);
        switch (s.kind) {
            case StimulusKind::Irq:
                if (!kernel_.irq_handler(s.line)) {
                    fail(ErrorCode::Configuration, "irq line " + std::to_string(s.line) + at + " has no handler");
                }
                break;
            case StimulusKind::SerialInput:
            case StimulusKind::ParallelInput: {
                const auto want = s.kind == StimulusKind::SerialInput ? DeviceKind::SerialIO : DeviceKind::ParallelIO;
                auto it = devices_.find(s.device);
                if (it == devices_.end() || it->second.spec.kind != want) {
                    fail(ErrorCode::Configuration, "input" + at + " targets " + s.device + ", which is not a " +
                                                       std::string(to_string(want)) + " device");
                }
                if (want == DeviceKind::ParallelIO && (s.line >= it->second.spec.ports || s.data.size() != 1)) {
                    fail(ErrorCode::Configuration, "parallel input" + at + " needs one byte for an existing port");
                }
                break;
            }
        }
    }
}

void Bfm::assert_irq(std::uint32_t line) {
    if (auto* ic = interrupt_controller(); ic && line < 32 && (ic->disabled_lines & (1u << line))) {
        if (!kernel_.irq_handler(line)) fail(ErrorCode::Configuration, "irq line " + std::to_string(line) + " is not bound");
        ic->pending_lines |= 1u << line;
        return;
    }
    kernel_.raise_irq(line);
}

void Bfm::apply(const Stimulus& s) {
    switch (s.kind) {
        case StimulusKind::Irq: assert_irq(s.line); break;
        case StimulusKind::SerialInput: {
            auto& d = dev(s.device);
            if (d.rx.size() + s.data.size() > d.spec.fifo_capacity) {
                fail(ErrorCode::Device, s.device + ": rx FIFO overflow at tick " + std::to_string(s.at));
            }
            d.rx.insert(d.rx.end(), s.data.begin(), s.data.end());
            record(d, "input", s.data);
            break;
        }
        case StimulusKind::ParallelInput: {
            auto& d = dev(s.device);
            d.in_ports.at(s.line) = s.data.at(0);
            record(d, "input", {static_cast<std::uint8_t>(s.line), s.data[0]});
            break;
        }
    }
}

void Bfm::rtc_step() {
    kernel_.timer_tick();
    const Tick now = kernel_.engine().now();
    while (next_stimulus_ < stimuli_.size() && stimuli_[next_stimulus_].at <= now) {
        apply(stimuli_[next_stimulus_++]);
    }
    for (auto& [name, d] : devices_) {
        if (d.spec.kind != DeviceKind::SerialIO || d.tx.empty()) continue;
        const std::size_t n = std::min(d.spec.tx_per_tick, d.tx.size());
        Bytes sent(d.tx.begin(), d.tx.begin() + static_cast<std::ptrdiff_t>(n));
        d.tx.erase(d.tx.begin(), d.tx.begin() + static_cast<std::ptrdiff_t>(n));
        d.bytes_sent += n;
        record(d, "tx", sent);
    }
    kernel_.engine().execute_tick();
    ++rtc_ticks_;
}

void Bfm::run(Tick ticks) {
    for (Tick i = 0; i < ticks; ++i) rtc_step();
}

void Bfm::write_log_csv(std::ostream& out) const {
    out << kDeviceLogHeader << '\n';
    for (const auto& e : log_) out << e.tick << ',' << e.device << ',' << e.access << ',' << to_hex(e.payload) << '\n';
}

}  // namespace rtk::bfm
