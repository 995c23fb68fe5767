#pragma once

namespace lelab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lelab
