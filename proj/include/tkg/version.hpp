#pragma once

namespace tkg {

inline constexpr const char* kVersion = "0.1.0";

} // namespace tkg
