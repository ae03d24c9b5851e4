#pragma once

namespace abreu {
inline constexpr const char* kVersion = "0.1.0";
}
