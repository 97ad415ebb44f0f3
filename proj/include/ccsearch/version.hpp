#pragma once

namespace ccsearch {

inline constexpr const char* kToolName = "ccsearch";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ccsearch
