#pragma once

namespace loewner {

inline constexpr const char* kVersion = "0.1.0";

} // namespace loewner
