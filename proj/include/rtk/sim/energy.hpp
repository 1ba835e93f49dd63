#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rtk::sim {

/// Energy in millijoules, held as an exact count of microjoules.
class Energy {
public:
    constexpr Energy() noexcept = default;

    static constexpr Energy from_microjoules(std::int64_t uj) noexcept { return Energy{uj}; }
    static constexpr Energy from_millijoules(std::int64_t mj) noexcept { return Energy{mj * 1000}; }

    /// Parses a decimal millijoule string ("0.5", "12", "0.001"). At most three
    /// fractional digits are accepted; anything finer than a microjoule is rejected.
    static std::optional<Energy> parse(std::string_view text) noexcept;

    constexpr std::int64_t microjoules() const noexcept { return uj_; }
    double millijoules() const noexcept { return static_cast<double>(uj_) / 1000.0; }

    /// Fixed three-decimal millijoule rendering, e.g. "0.500".
    std::string to_string() const;

    constexpr Energy& operator+=(Energy o) noexcept {
        uj_ += o.uj_;
        return *this;
    }
    constexpr Energy& operator-=(Energy o) noexcept {
        uj_ -= o.uj_;
        return *this;
    }
    friend constexpr Energy operator+(Energy a, Energy b) noexcept { return a += b; }
    friend constexpr Energy operator-(Energy a, Energy b) noexcept { return a -= b; }
    friend constexpr Energy operator*(Energy a, std::int64_t n) noexcept { return Energy{a.uj_ * n}; }
    friend constexpr auto operator<=>(const Energy&, const Energy&) noexcept = default;

private:
    constexpr explicit Energy(std::int64_t uj) noexcept : uj_(uj) {}
    std::int64_t uj_ = 0;
};

/// Share of `total` delivered after `done` of `steps` equal steps, rounded down.
/// Successive differences of this function sum exactly to `total`.
constexpr Energy prorated(Energy total, std::uint64_t done, std::uint64_t steps) noexcept {
    if (steps == 0 || done >= steps) {
        return total;
    }
    __extension__ using wide = __int128;
    const auto uj = static_cast<wide>(total.microjoules()) * done / steps;
    return Energy::from_microjoules(static_cast<std::int64_t>(uj));
}

}  // namespace rtk::sim
