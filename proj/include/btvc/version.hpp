#pragma once

namespace btvc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace btvc
