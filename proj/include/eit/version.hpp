#pragma once

namespace eit {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace eit
