#pragma once

namespace modalms {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace modalms
