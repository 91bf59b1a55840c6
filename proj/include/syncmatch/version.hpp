#pragma once

namespace syncmatch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace syncmatch
