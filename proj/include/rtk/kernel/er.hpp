#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rtk::kernel {

using ER = int;
using ID = std::int32_t;

inline constexpr ER E_OK = 0;
inline constexpr ER E_PAR = -17;
inline constexpr ER E_CTX = -25;
inline constexpr ER E_ILUSE = -28;
inline constexpr ER E_NOMEM = -33;
inline constexpr ER E_OBJ = -41;
inline constexpr ER E_NOEXS = -42;
inline constexpr ER E_QOVR = -43;
inline constexpr ER E_TMOUT = -50;
inline constexpr ER E_DLT = -51;

std::string_view er_name(ER er) noexcept;
std::optional<ER> parse_er(std::string_view name) noexcept;

}  // namespace rtk::kernel
