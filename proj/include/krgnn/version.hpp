#pragma once

namespace krgnn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace krgnn
