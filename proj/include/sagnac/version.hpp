#pragma once

namespace sagnac {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sagnac
