#pragma once

namespace spinamp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spinamp
