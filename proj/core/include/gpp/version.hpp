#pragma once

namespace gpp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gpp
