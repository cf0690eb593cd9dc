#pragma once

namespace gadlab {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace gadlab
