#pragma once

#include "rtk/kernel/kernel.hpp"

#include <deque>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rtk::bfm {

using sim::Energy;
using sim::ThreadId;
using sim::Tick;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint64_t kDefaultCyclesPerTick = 12000;

enum class DeviceKind : std::uint8_t { Memory, SerialIO, ParallelIO, InterruptController, Rtc };

std::string_view to_string(DeviceKind k) noexcept;
std::optional<DeviceKind> parse_device_kind(std::string_view s) noexcept;
/// Access names a device of this kind understands.
const std::vector<std::string>& supported_accesses(DeviceKind k);

std::string to_hex(const Bytes& bytes);
/// Accepts an even number of hex digits, case-insensitive; throws Validation otherwise.
Bytes parse_hex(std::string_view text);

struct AccessCost {
    std::uint64_t cycles = 0;
    Energy energy;
    friend bool operator==(const AccessCost&, const AccessCost&) = default;
};

struct DeviceSpec {
    std::string name;
    DeviceKind kind = DeviceKind::Memory;
    std::map<std::string, AccessCost, std::less<>> accesses;
    std::size_t size = 256;          // memory bytes
    std::size_t word = 1;            // memory alignment
    std::size_t fifo_capacity = 16;  // serial rx and tx FIFOs
    std::size_t tx_per_tick = 1;     // serial bytes leaving the tx FIFO per tick
    std::size_t ports = 4;           // parallel ports

    friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

/// Live device state. Fields not used by a kind stay empty.
struct Device {
    DeviceSpec spec;
    Bytes memory;
    std::deque<std::uint8_t> rx;
    std::deque<std::uint8_t> tx;
    Bytes out_ports;
    Bytes in_ports;
    std::uint32_t disabled_lines = 0;
    std::uint32_t pending_lines = 0;
    std::map<std::string, std::uint64_t, std::less<>> access_counts;
    std::uint64_t bytes_sent = 0;
};

struct BfmRequest {
    std::uint32_t address = 0;  // memory address, port number or irq line
    Bytes data;                 // bytes to write
    std::size_t length = 0;     // bytes to read
};

struct BfmResponse {
    Bytes data;
    Tick ticks = 0;
    Energy energy;
};

struct DeviceLogEntry {
    Tick tick = 0;
    std::string device;
    std::string access;
    Bytes payload;
    friend bool operator==(const DeviceLogEntry&, const DeviceLogEntry&) = default;
};

inline constexpr std::string_view kDeviceLogHeader = "tick,device,access,payload_hex";

enum class StimulusKind : std::uint8_t { Irq, SerialInput, ParallelInput };

struct Stimulus {
    Tick at = 0;
    StimulusKind kind = StimulusKind::Irq;
    std::uint32_t line = 0;  // irq line or parallel port
    std::string device;
    Bytes data;
    friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

class Bfm {
public:
    explicit Bfm(kernel::Kernel& kernel, std::uint64_t cycles_per_tick = kDefaultCyclesPerTick);
    Bfm(const Bfm&) = delete;
    Bfm& operator=(const Bfm&) = delete;

    std::uint64_t cycles_per_tick() const noexcept { return cycles_per_tick_; }
    Tick ticks_for(std::uint64_t cycles) const noexcept { return (cycles + cycles_per_tick_ - 1) / cycles_per_tick_; }

    void add_device(DeviceSpec spec);
    bool has_device(std::string_view name) const;
    const Device& device(std::string_view name) const;
    const std::map<std::string, Device, std::less<>>& devices() const noexcept { return devices_; }

    /// Performs the access at the current instant, then charges the caller
    /// ceil(cycles / cycles_per_tick) ticks in BFM context.
    sim::Co<BfmResponse> call(ThreadId self, std::string device, std::string access, BfmRequest request = {});

    void schedule(Stimulus s);
    const std::vector<Stimulus>& stimuli() const noexcept { return stimuli_; }
    /// Every irq stimulus must target a bound line and every device stimulus a
    /// device of the matching kind.
    void validate_stimuli() const;

    /// Routes an assertion through the interrupt controller (if any) to the kernel.
    void assert_irq(std::uint32_t line);

    /// One real-time-clock period: kernel timer tick, due stimuli, device
    /// housekeeping, then one tick of execution.
    void rtc_step();
    void run(Tick ticks);
    std::uint64_t rtc_ticks() const noexcept { return rtc_ticks_; }

    const std::vector<DeviceLogEntry>& log() const noexcept { return log_; }
    void write_log_csv(std::ostream& out) const;

private:
    Device& dev(std::string_view name);
    Bytes perform(Device& d, std::string_view access, const BfmRequest& req);
    void record(const Device& d, std::string_view access, const Bytes& payload);
    void apply(const Stimulus& s);
    Device* interrupt_controller();

    kernel::Kernel& kernel_;
    std::uint64_t cycles_per_tick_;
    std::map<std::string, Device, std::less<>> devices_;
    std::vector<Stimulus> stimuli_;
    std::size_t next_stimulus_ = 0;
    std::uint64_t rtc_ticks_ = 0;
    std::vector<DeviceLogEntry> log_;
};

}  // namespace rtk::bfm
