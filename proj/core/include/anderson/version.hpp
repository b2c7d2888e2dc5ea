#pragma once

namespace anderson {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace anderson
