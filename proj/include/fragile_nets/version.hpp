#pragma once

namespace fragile_nets {

inline constexpr const char* kToolName = "fragile-nets";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace fragile_nets
