#pragma once

namespace mcco {
inline constexpr const char* kVersion = "0.1.0";
}
