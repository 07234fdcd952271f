#pragma once

namespace khoplab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace khoplab
