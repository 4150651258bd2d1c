#pragma once

namespace convext {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace convext
